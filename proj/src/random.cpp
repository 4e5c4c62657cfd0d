#include "specband/random.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace specband {

std::vector<std::vector<double>> latin_hypercube(int n, int dim, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw std::invalid_argument("latin_hypercube: n and dim must be >= 1");
  auto rng = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> points(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(dim)));
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int d = 0; d < dim; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      const double u = unit(rng);
      points[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] =
          (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u) / static_cast<double>(n);
    }
  }
  return points;
}

}  // namespace specband
