#include "dualarm/types.hpp"

#include <cmath>

namespace dualarm {

double wrap_angle(double a) {
  double w = std::fmod(a + M_PI, 2.0 * M_PI);
  if (w < 0) w += 2.0 * M_PI;
  w -= M_PI;
  // fmod maps exact +pi to -pi; keep the (-pi, pi] convention instead.
  if (w == -M_PI) w = M_PI;
  return w;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finalizer applied to a mixed triple.
  std::uint64_t z = base;
  z += 0x9e3779b97f4a7c15ULL * (stream + 1);
  z += 0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dualarm
