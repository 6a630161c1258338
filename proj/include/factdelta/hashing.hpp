#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace factdelta {

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::string& path);

// First 8 bytes of SHA-256("<seed>:<text>") as an integer. Platform-stable.
std::uint64_t seeded_hash(std::uint64_t seed, std::string_view text);

// mt19937_64 with a portable bounded draw; the standard distributions are
// implementation-defined and would break cross-platform golden files.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace factdelta
