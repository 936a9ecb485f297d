#include "llrl/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace llrl {

Features featurize(double aoi, double backlog, double eps_max) {
  if (!(eps_max > 0.0)) throw std::invalid_argument("featurize: eps_max must be > 0");
  if (aoi < 0.0 || backlog < 0.0)
    throw std::invalid_argument("featurize: negative state");
  Features f;
  f.x << aoi / kAoiRef, backlog / eps_max, 1.0;
  return f;
}

std::pair<double, double> act(const GaussianPolicy& policy, const Features& feats,
                              double eps_max, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double y_raw = policy.theta.dot(feats.x) + policy.sigma * unit(rng);
  const double frac = std::clamp(y_raw, 0.0, 1.0);
  return {frac * eps_max, y_raw};
}

}  // namespace llrl
