#include "probemine/text.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <zlib.h>

#include "probemine/error.hpp"

namespace probemine::text {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

struct LineReader::Source {
  std::FILE* file = nullptr;
  gzFile gz = nullptr;

  ~Source() {
    if (file) std::fclose(file);
    if (gz) gzclose(gz);
  }

  std::size_t read(char* dst, std::size_t n) {
    if (gz) {
      const int got = gzread(gz, dst, static_cast<unsigned>(n));
      if (got < 0) throw IoError("gzip read error");
      return static_cast<std::size_t>(got);
    }
    const auto got = std::fread(dst, 1, n, file);
    if (got < n && std::ferror(file)) throw IoError("read error");
    return got;
  }
};

LineReader::LineReader(const std::filesystem::path& path)
    : src_(std::make_unique<Source>()), buf_(1 << 20) {
  const auto name = path.string();
  if (ends_with(name, ".gz")) {
    src_->gz = gzopen(name.c_str(), "rb");
    if (!src_->gz) throw IoError(fmt::format("cannot open '{}'", name));
    gzbuffer(src_->gz, 1 << 18);
  } else {
    src_->file = std::fopen(name.c_str(), "rb");
    if (!src_->file) throw IoError(fmt::format("cannot open '{}'", name));
  }
}

LineReader::~LineReader() = default;

bool LineReader::fill() {
  if (eof_) return false;
  len_ = src_->read(buf_.data(), buf_.size());
  pos_ = 0;
  if (len_ == 0) eof_ = true;
  return len_ > 0;
}

int LineReader::peek() {
  if (pos_ >= len_ && !fill()) return -1;
  return static_cast<unsigned char>(buf_[pos_]);
}

bool LineReader::next(std::string_view& line) {
  carry_.clear();
  bool have_carry = false;
  while (true) {
    if (pos_ >= len_ && !fill()) {
      if (!have_carry) return false;
      line = carry_;
      break;
    }
    const char* begin = buf_.data() + pos_;
    const auto* nl = static_cast<const char*>(std::memchr(begin, '\n', len_ - pos_));
    if (nl) {
      const auto n = static_cast<std::size_t>(nl - begin);
      pos_ += n + 1;
      if (have_carry) {
        carry_.append(begin, n);
        line = carry_;
      } else {
        line = std::string_view(begin, n);
      }
      break;
    }
    carry_.append(begin, len_ - pos_);
    have_carry = true;
    pos_ = len_;
  }
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return true;
}

struct FileWriter::Sink {
  std::FILE* file = nullptr;
  gzFile gz = nullptr;
  std::string name;

  void write(const char* p, std::size_t n) {
    if (n == 0) return;
    if (gz) {
      if (gzwrite(gz, p, static_cast<unsigned>(n)) != static_cast<int>(n)) {
        throw IoError(fmt::format("gzip write to '{}' failed", name));
      }
    } else if (std::fwrite(p, 1, n, file) != n) {
      throw IoError(fmt::format("write to '{}' failed", name));
    }
  }

  void close() {
    if (file && std::fclose(file) != 0) {
      file = nullptr;
      throw IoError(fmt::format("closing '{}' failed", name));
    }
    file = nullptr;
    if (gz && gzclose(gz) != Z_OK) {
      gz = nullptr;
      throw IoError(fmt::format("closing '{}' failed", name));
    }
    gz = nullptr;
  }

  ~Sink() {
    if (file) std::fclose(file);
    if (gz) gzclose(gz);
  }
};

FileWriter::FileWriter(const std::filesystem::path& path) : sink_(std::make_unique<Sink>()) {
  sink_->name = path.string();
  if (ends_with(sink_->name, ".gz")) {
    sink_->gz = gzopen(sink_->name.c_str(), "wb6");
  } else {
    sink_->file = std::fopen(sink_->name.c_str(), "wb");
  }
  if (!sink_->file && !sink_->gz) throw IoError(fmt::format("cannot create '{}'", sink_->name));
  buf_.reserve(1 << 20);
}

FileWriter::~FileWriter() {
  try {
    close();
  } catch (...) {
  }
}

void FileWriter::write(std::string_view s) {
  buf_.append(s);
  maybe_flush();
}

void FileWriter::maybe_flush() {
  if (buf_.size() >= (1u << 20)) flush();
}

void FileWriter::flush() {
  sink_->write(buf_.data(), buf_.size());
  buf_.clear();
}

void FileWriter::close() {
  if (!sink_) return;
  flush();
  sink_->close();
  sink_.reset();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  FileWriter w(path);
  w.write(content);
  w.close();
}

std::string file_crc32(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<unsigned char> buf(1 << 20);
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) {
    crc = crc32(crc, buf.data(), static_cast<uInt>(n));
  }
  std::fclose(f);
  return fmt::format("{:08x}", crc);
}

std::string crc32_hex(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  return fmt::format("{:08x}", crc);
}

}  // namespace probemine::text
