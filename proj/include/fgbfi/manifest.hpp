#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fgbfi {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view data);

/// Provenance record written next to every command's outputs. Re-running a
/// manifest reproduces the data files byte for byte; the timestamp is
/// metadata and takes no part in replay.
struct RunManifest {
  std::string command;
  std::string system_path;
  std::string system_sha256;
  std::map<std::string, std::string> params;  ///< every flag, defaults included
  std::string version = kToolkitVersion;
  std::string created;  ///< ISO 8601 UTC

  std::string to_json() const;
  static RunManifest from_json_text(const std::string& text);

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

/// Current UTC time, ISO 8601.
std::string iso8601_now();

}  // namespace fgbfi
