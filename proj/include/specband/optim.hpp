#pragma once

#include <functional>
#include <vector>

namespace specband {

// Standard Nelder-Mead coefficients plus stopping controls.
struct NmConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double simplex_scale = 0.1;  // initial simplex edge relative to |x0| scale
  int max_evaluations = 2000;
  double tol = 1e-8;  // simplex diameter
};

struct NmResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
};

// Derivative-free simplex minimization. Non-finite objective values are
// treated as +infinity; the search never aborts on them.
NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                     const std::vector<double>& x0, const NmConfig& cfg);

}  // namespace specband
