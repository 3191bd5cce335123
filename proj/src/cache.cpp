#include "npspec/cache.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "npspec/geometry.hpp"
#include "npspec/hash.hpp"

namespace npspec {

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'P', 'S', 'P', 'E', 'C', '0', '1'};
constexpr std::size_t kHeaderSize = 64;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

std::array<unsigned char, 8> key_prefix(const CacheKey& key) {
  const std::string hex = sha256_hex(key.canonical());
  std::array<unsigned char, 8> out{};
  for (std::size_t i = 0; i < 8; ++i) {
    out[i] = static_cast<unsigned char>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  }
  return out;
}

}  // namespace

std::string CacheKey::canonical() const {
  return "curve=" + curve_spec + ";lambda=" + format_double(lambda) + ";mu=" + format_double(mu) +
         ";n=" + std::to_string(n) + ";tag=" + tag + ";version=" + code_version;
}

MatrixCache::MatrixCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path MatrixCache::path_for(const CacheKey& key) const {
  return dir_ / (sha256_hex(key.canonical()) + ".bin");
}

std::optional<Eigen::MatrixXd> MatrixCache::load(const CacheKey& key) const {
  const auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<unsigned char, kHeaderSize> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), kHeaderSize)) {
    throw std::runtime_error("cache file " + path.string() + " has a truncated header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw std::runtime_error("cache file " + path.string() + " has a bad magic");
  }
  std::uint64_t rows = 0, cols = 0;
  std::memcpy(&rows, header.data() + 8, 8);
  std::memcpy(&cols, header.data() + 16, 8);
  rows = to_little(rows);
  cols = to_little(cols);
  const auto prefix = key_prefix(key);
  if (std::memcmp(header.data() + 24, prefix.data(), prefix.size()) != 0) {
    throw std::runtime_error("cache file " + path.string() + " belongs to a different key");
  }
  std::vector<double> data(rows * cols);
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(double)))) {
    throw std::runtime_error("cache file " + path.string() + " has truncated data");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_little(data[i * cols + j]);
    }
  }
  return m;
}

void MatrixCache::store(const CacheKey& key, const Eigen::MatrixXd& matrix) const {
  std::array<unsigned char, kHeaderSize> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  const auto rows = to_little(static_cast<std::uint64_t>(matrix.rows()));
  const auto cols = to_little(static_cast<std::uint64_t>(matrix.cols()));
  std::memcpy(header.data() + 8, &rows, 8);
  std::memcpy(header.data() + 16, &cols, 8);
  const auto prefix = key_prefix(key);
  std::memcpy(header.data() + 24, prefix.data(), prefix.size());
  std::memcpy(header.data() + 32, key.tag.data(), std::min<std::size_t>(key.tag.size(), 16));

  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(matrix.size()));
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) data.push_back(to_little(matrix(i, j)));
  }

  const auto path = path_for(key);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(header.data()), kHeaderSize);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed to write cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Eigen::MatrixXd MatrixCache::get_or_build(const CacheKey& key,
                                          const std::function<Eigen::MatrixXd()>& build) const {
  if (auto hit = load(key)) return *hit;
  Eigen::MatrixXd m = build();
  store(key, m);
  return m;
}

}  // namespace npspec
