#include "slicerl/binary_io.hpp"

#include <boost/crc.hpp>
#include <fstream>
#include <iterator>

namespace slicerl {

namespace {

std::uint32_t crc32(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

}  // namespace

void write_container(const std::filesystem::path& path, const std::string& payload) {
  BinaryWriter header;
  header.u8('S');
  header.u8('L');
  header.u8('R');
  header.u8('L');
  header.u32(kCheckpointVersion);
  header.u32(crc32(payload));
  header.u64(payload.size());

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    os.write(header.bytes().data(), static_cast<std::streamsize>(header.bytes().size()));
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!os) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  if (bytes.size() < 20 || bytes.compare(0, 4, "SLRL") != 0)
    throw std::runtime_error(path.string() + ": not a checkpoint file");

  BinaryReader header(std::string_view(bytes).substr(4, 16));
  const auto version = header.u32();
  const auto checksum = header.u32();
  const auto size = header.u64();
  if (version != kCheckpointVersion)
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  if (bytes.size() != 20 + size) throw std::runtime_error(path.string() + ": size mismatch");
  std::string payload = bytes.substr(20);
  if (crc32(payload) != checksum) throw std::runtime_error(path.string() + ": checksum mismatch");
  return payload;
}

}  // namespace slicerl
