#pragma once

#include <sys/utsname.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <string>

namespace mutopt {

// Machine the measurements were taken on. Wall-clock costs are only
// comparable within one host.
struct HostInfo {
  std::string os;
  std::string cpu;
  std::string timestamp;  // UTC, ISO 8601

  friend bool operator==(const HostInfo&, const HostInfo&) = default;
};

inline HostInfo collect_host_info() {
  HostInfo info;
  utsname u{};
  if (::uname(&u) == 0)
    info.os = std::string(u.sysname) + " " + u.release + " " + u.machine;

  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      auto colon = line.find(':');
      if (colon != std::string::npos) {
        info.cpu = line.substr(colon + 1);
        info.cpu.erase(0, info.cpu.find_first_not_of(' '));
      }
      break;
    }
  }
  if (info.cpu.empty()) info.cpu = "unknown";

  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  info.timestamp = buf;
  return info;
}

}  // namespace mutopt
