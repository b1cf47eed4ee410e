#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace slicerl {

/// Little-endian byte sink for checkpoint payloads.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  /// Length-prefixed double array; any real Eigen dense type.
  template <typename Derived>
  void array(const Eigen::DenseBase<Derived>& a) {
    u64(static_cast<std::uint64_t>(a.rows()));
    u64(static_cast<std::uint64_t>(a.cols()));
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) f64(static_cast<double>(a(i, j)));
  }

  const std::string& bytes() const { return buf_; }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le(8)); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  template <typename MatrixType>
  MatrixType array() {
    const auto rows = static_cast<Eigen::Index>(u64());
    const auto cols = static_cast<Eigen::Index>(u64());
    need(static_cast<std::size_t>(rows * cols) * 8);
    MatrixType m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<typename MatrixType::Scalar>(f64());
    return m;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw std::runtime_error("checkpoint: truncated payload");
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Container layout: "SLRL" | u32 version | u32 crc32(payload) | u64 size | payload.
void write_container(const std::filesystem::path& path, const std::string& payload);
/// Verifies magic, version and checksum; throws std::runtime_error otherwise.
std::string read_container(const std::filesystem::path& path);

}  // namespace slicerl
