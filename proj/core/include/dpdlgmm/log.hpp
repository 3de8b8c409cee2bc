#pragma once

#include <string_view>

namespace dpdlgmm {

enum class LogLevel { Quiet = 0, Error, Warn, Info, Debug };

/// Verbosity taken from DPDLGMM_LOG (quiet|error|warn|info|debug), default warn.
LogLevel log_level();
void set_log_level(LogLevel level);

/// Writes one line to stderr when `level` is enabled.
void log(LogLevel level, std::string_view message);

}  // namespace dpdlgmm
