#include "dpdlgmm/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace dpdlgmm {

namespace {

LogLevel parse_level(const char* text) {
  if (text == nullptr) return LogLevel::Warn;
  const std::string s(text);
  if (s == "quiet") return LogLevel::Quiet;
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

LogLevel& current_level() {
  static LogLevel level = parse_level(std::getenv("DPDLGMM_LOG"));
  return level;
}

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
    default: return "";
  }
}

}  // namespace

LogLevel log_level() { return current_level(); }
void set_log_level(LogLevel level) { current_level() = level; }

void log(LogLevel level, std::string_view message) {
  if (level == LogLevel::Quiet || level > current_level()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[dpdlgmm " << level_name(level) << "] " << message << '\n';
}

}  // namespace dpdlgmm
