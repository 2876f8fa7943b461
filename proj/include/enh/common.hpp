#pragma once

#include <stdexcept>
#include <string>

namespace enh {

// Input file failed structural validation (bad magic, truncation, ...).
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The sampling loop reached a non-finite state and cannot continue.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from ENHANCE_LOG_LEVEL (error|info|debug), read once per
// process. Unset or unrecognized values fall back to info.
LogLevel log_level();

// Messages go to stderr so command output on stdout stays machine-readable.
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace enh
