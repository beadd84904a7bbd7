#include "hear/error.hpp"

namespace hear {

HearError::HearError(std::string name, const std::string& message)
    : std::runtime_error(name + ": " + message), name_(std::move(name)) {}

void raise(const std::string& name, const std::string& message) {
  throw HearError(name, message);
}

} // namespace hear
