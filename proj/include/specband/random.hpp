#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace specband {

// splitmix64 step; used both as a PRNG seeder and for deriving
// independent sub-streams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive a child seed from (master, stream). Stream ids are stable small
// constants chosen by the caller; the same (master, stream) pair always
// yields the same child, independent of call order or thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// Latin hypercube design: n points in [0,1]^dim, one point per stratum
// and per coordinate. Deterministic given seed.
std::vector<std::vector<double>> latin_hypercube(int n, int dim, std::uint64_t seed);

}  // namespace specband
