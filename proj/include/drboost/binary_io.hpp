#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drboost {

// Little-endian primitive writer/reader used by every on-disk format. Values
// are serialised byte-by-byte so files are identical on any host.

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view four_cc);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f32s(std::span<const float> values);
  void str(std::string_view s);
  void bytes(std::span<const std::uint8_t> data);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  /// Throws ParseError unless the next four bytes equal four_cc.
  void expect_magic(std::string_view four_cc);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  void f32s(std::span<float> out);
  std::string str();
  void bytes(std::span<std::uint8_t> out);

  const std::string& source() const { return source_; }

 private:
  void read(char* dst, std::size_t n);

  std::istream& in_;
  std::string source_;
};

/// Reads the first four bytes of a file (its format magic).
std::string file_magic(const std::string& path);

}  // namespace drboost
