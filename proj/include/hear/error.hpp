#pragma once

#include <stdexcept>
#include <string>

namespace hear {

// All library errors carry a stable machine-readable name (e.g. "DuplicateLabel",
// "DeadChannel") next to the human-readable message. The CLI prints both.
class HearError : public std::runtime_error {
public:
  HearError(std::string name, const std::string& message);
  const std::string& name() const { return name_; }

private:
  std::string name_;
};

[[noreturn]] void raise(const std::string& name, const std::string& message);

} // namespace hear
