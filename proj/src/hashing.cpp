#include "factdelta/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

namespace factdelta {

namespace {

struct DigestCtx {
  DigestCtx() : ctx(EVP_MD_CTX_new()) {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256 init failed");
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  DigestCtx(const DigestCtx&) = delete;
  DigestCtx& operator=(const DigestCtx&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx, data, n); }
  std::array<unsigned char, 32> finish() {
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, out.data(), &len);
    return out;
  }

  EVP_MD_CTX* ctx;
};

std::string to_hex(const std::array<unsigned char, 32>& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char c : d) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 15]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  DigestCtx ctx;
  ctx.update(data.data(), data.size());
  return to_hex(ctx.finish());
}

std::string sha256_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  DigestCtx ctx;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    ctx.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return to_hex(ctx.finish());
}

std::uint64_t seeded_hash(std::uint64_t seed, std::string_view text) {
  DigestCtx ctx;
  std::string prefix = std::to_string(seed) + ":";
  ctx.update(prefix.data(), prefix.size());
  ctx.update(text.data(), text.size());
  auto d = ctx.finish();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
  return v;
}

std::uint64_t PortableRng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("PortableRng::below(0)");
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

}  // namespace factdelta
