#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sdcfr/game.hpp"

namespace sdcfr {

struct BadMagic : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

/// Little-endian binary writer with a 4-byte magic and u32 version header.
class BinaryWriter {
 public:
  BinaryWriter(const std::filesystem::path& path, const char magic[4], std::uint32_t version)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open for writing: " + path.string());
    out_.write(magic, 4);
    write_u32(version);
  }

  void write_bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void write_u8(std::uint8_t v) { write_bytes(&v, 1); }
  void write_u32(std::uint32_t v) { write_bytes(&v, 4); }
  void write_u64(std::uint64_t v) { write_bytes(&v, 8); }
  void write_f32(float v) { write_bytes(&v, 4); }
  void write_f64(double v) { write_bytes(&v, 8); }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// Counterpart reader; verifies magic and version, throws TruncatedFile on
/// short reads.
class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& path, const char magic[4], std::uint32_t version)
      : buf_(read_file(path)) {
    check_header(magic, version);
  }
  BinaryReader(std::vector<std::uint8_t> bytes, const char magic[4], std::uint32_t version)
      : buf_(std::move(bytes)) {
    check_header(magic, version);
  }

  void read_bytes(void* data, std::size_t n) {
    if (pos_ + n > buf_.size()) throw TruncatedFile("unexpected end of file");
    std::memcpy(data, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t read_u8() { std::uint8_t v; read_bytes(&v, 1); return v; }
  std::uint32_t read_u32() { std::uint32_t v; read_bytes(&v, 4); return v; }
  std::uint64_t read_u64() { std::uint64_t v; read_bytes(&v, 8); return v; }
  float read_f32() { float v; read_bytes(&v, 4); return v; }
  double read_f64() { double v; read_bytes(&v, 8); return v; }

  bool at_end() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }

  static std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

 private:
  void check_header(const char magic[4], std::uint32_t version) {
    if (buf_.size() < 8) throw TruncatedFile("file shorter than its header");
    if (std::memcmp(buf_.data(), magic, 4) != 0)
      throw BadMagic("bad magic, expected " + std::string(magic, 4));
    pos_ = 4;
    std::uint32_t got = read_u32();
    if (got != version)
      throw VersionMismatch("format version " + std::to_string(got) + ", expected " +
                            std::to_string(version));
  }

  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

/// FNV-1a over a file's bytes; used by manifests to detect corruption.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace sdcfr
