#include "adgnn/params.hpp"

#include <cmath>
#include <string>

namespace adgnn {

void DiffusionParams::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("DiffusionParams: " + msg); };
  if (!(alpha >= 0.0 && alpha < 1.0)) fail("alpha must be in [0, 1)");
  if (!(beta >= 0.0 && beta < 1.0)) fail("beta must be in [0, 1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must be in [0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must be in (0, 1)");
  if (std::abs(alpha + beta + gamma + delta - 1.0) > 1e-12)
    fail("alpha + beta + gamma + delta must equal 1");
  if (K < 1) fail("K must be a positive integer");
  if (!(tau > 0.0 && tau < 1.0)) fail("tau must be in (0, 1)");
  if (T < 0) fail("T must be nonnegative");
}

double neumann_error_bound(double delta, Index T) {
  return std::pow(delta, static_cast<double>(T) + 1.0) / (1.0 - delta);
}

}  // namespace adgnn
