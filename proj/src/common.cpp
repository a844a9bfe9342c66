#include "drboost/common.hpp"
#include "drboost/binary_io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace drboost {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** seeded through splitmix64.
Rng::Rng(std::uint64_t seed) {
  for (int i = 0; i < 4; ++i) state_[i] = mix_seed(seed, static_cast<std::uint64_t>(i));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("Rng::below: n must be positive");
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace {
std::atomic<int> g_threads{0};
std::atomic<bool> g_quiet{false};
std::mutex g_log_mutex;
}  // namespace

void set_num_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int num_threads() {
  int n = g_threads.load();
  if (n > 0) return n;
  if (const char* env = std::getenv("DRBOOST_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

void log_info(const std::string& message) {
  if (g_quiet.load()) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << "[drboost] " << message << '\n';
}

// ---------------------------------------------------------------------------

void BinaryWriter::magic(std::string_view four_cc) {
  out_.write(four_cc.data(), 4);
}

void BinaryWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void BinaryWriter::u32(std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out_.write(b, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out_.write(b, 8);
}

void BinaryWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void BinaryWriter::f32s(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) f32(v);
  }
}

void BinaryWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryReader::read(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw ParseError(source_ + ": unexpected end of file");
}

void BinaryReader::expect_magic(std::string_view four_cc) {
  char b[4];
  read(b, 4);
  if (std::string_view(b, 4) != four_cc)
    throw ParseError(source_ + ": bad magic, expected " + std::string(four_cc));
}

std::uint8_t BinaryReader::u8() {
  char b;
  read(&b, 1);
  return static_cast<std::uint8_t>(b);
}

std::uint32_t BinaryReader::u32() {
  unsigned char b[4];
  read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t BinaryReader::u64() {
  unsigned char b[8];
  read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

float BinaryReader::f32() { return std::bit_cast<float>(u32()); }

void BinaryReader::f32s(std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    read(reinterpret_cast<char*>(out.data()), out.size() * sizeof(float));
  } else {
    for (float& v : out) v = f32();
  }
}

std::string BinaryReader::str() {
  const std::uint32_t n = u32();
  std::string s(n, '\0');
  if (n > 0) read(s.data(), n);
  return s;
}

void BinaryWriter::bytes(std::span<const std::uint8_t> data) {
  out_.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size()));
}

void BinaryReader::bytes(std::span<std::uint8_t> out) {
  read(reinterpret_cast<char*>(out.data()), out.size());
}

std::string file_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char b[4] = {0, 0, 0, 0};
  in.read(b, 4);
  if (in.gcount() != 4) throw ParseError(path + ": file too short");
  return std::string(b, 4);
}

}  // namespace drboost
