#pragma once

#include <cstdio>
#include <string>
#include <string_view>

namespace fgbfi {

/// Buffered file writer that lands atomically: content goes to a sibling
/// temp file which is renamed over the target on commit(). Without commit()
/// the temp file is removed on destruction.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  void write(std::string_view data);
  void commit();

 private:
  std::string path_;
  std::string tmp_path_;
  std::FILE* f_ = nullptr;
};

/// Whole-file atomic write.
void write_file_atomic(const std::string& path, std::string_view content);

/// Read a whole file; throws std::runtime_error if unreadable.
std::string read_file(const std::string& path);

}  // namespace fgbfi
