#include "sdcfr/binio.hpp"

namespace sdcfr {

std::uint64_t file_checksum(const std::filesystem::path& path) {
  auto bytes = BinaryReader::read_file(path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace sdcfr
