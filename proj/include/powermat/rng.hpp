#ifndef POWERMAT_RNG_HPP
#define POWERMAT_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace powermat::rng {

// Draw helpers written out explicitly so sequences depend only on the
// mt19937_64 stream, not on the standard library's distribution code.

inline double u01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline std::size_t below(std::mt19937_64& g, std::size_t n) {
  return static_cast<std::size_t>(g() % n);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[below(g, i)]);
  }
}

}  // namespace powermat::rng

#endif
