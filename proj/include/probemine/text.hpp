#pragma once

// Small text and file helpers: field splitting, number parsing, and line
// streams that read or write gzip transparently by file extension.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace probemine::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Whole-string parses; false on any trailing garbage.
bool parse_int(std::string_view s, std::int64_t& out);
bool parse_double(std::string_view s, double& out);

bool ends_with(std::string_view s, std::string_view suffix);

/// Reads a file line by line in large chunks; `.gz` paths are decompressed.
class LineReader {
 public:
  /// Throws IoError when the file cannot be opened.
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// Next line without the trailing newline (and '\r'). The view is valid
  /// until the next call. Returns false at end of file.
  bool next(std::string_view& line);

  /// First byte of the stream without consuming it, or -1 when empty.
  int peek();

 private:
  bool fill();

  struct Source;
  std::unique_ptr<Source> src_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
  std::string carry_;
};

/// Buffered writer; `.gz` paths are compressed. Throws IoError on failure.
class FileWriter {
 public:
  explicit FileWriter(const std::filesystem::path& path);
  ~FileWriter();
  FileWriter(const FileWriter&) = delete;
  FileWriter& operator=(const FileWriter&) = delete;

  void write(std::string_view s);
  std::string& buffer() { return buf_; }
  /// Flushes the buffer if it grew past the high-water mark.
  void maybe_flush();
  void close();

 private:
  void flush();

  struct Sink;
  std::unique_ptr<Sink> sink_;
  std::string buf_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// zlib CRC-32 of a whole file, as 8 hex digits.
std::string file_crc32(const std::filesystem::path& path);
std::string crc32_hex(std::string_view data);

}  // namespace probemine::text
