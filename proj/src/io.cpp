#include "fgbfi/io.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fgbfi {

AtomicFile::AtomicFile(std::string path) : path_(std::move(path)) {
  tmp_path_ = path_ + ".tmp";
  f_ = std::fopen(tmp_path_.c_str(), "wb");
  if (!f_)
    throw std::runtime_error("cannot open '" + tmp_path_ + "' for writing: " +
                             std::strerror(errno));
}

AtomicFile::~AtomicFile() {
  if (f_) {
    std::fclose(f_);
    std::remove(tmp_path_.c_str());
  }
}

void AtomicFile::write(std::string_view data) {
  if (!f_) throw std::logic_error("AtomicFile: write after commit");
  if (std::fwrite(data.data(), 1, data.size(), f_) != data.size())
    throw std::runtime_error("short write to '" + tmp_path_ + "'");
}

void AtomicFile::commit() {
  if (!f_) throw std::logic_error("AtomicFile: double commit");
  if (std::fclose(f_) != 0) {
    f_ = nullptr;
    throw std::runtime_error("error closing '" + tmp_path_ + "'");
  }
  f_ = nullptr;
  if (std::rename(tmp_path_.c_str(), path_.c_str()) != 0)
    throw std::runtime_error("cannot rename '" + tmp_path_ + "' to '" + path_ + "': " +
                             std::strerror(errno));
}

void write_file_atomic(const std::string& path, std::string_view content) {
  AtomicFile f(path);
  f.write(content);
  f.commit();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fgbfi
