#pragma once

#include <vector>

#include "eacc/errors.hpp"
#include "eacc/perception/regressor.hpp"

namespace eacc::perception {

// Moments of the equal-weight Gaussian mixture. The variance is evaluated as
// mean(var_i) + mean((p_i - p)^2), which equals mean(var_i + p_i^2) - p^2
// without the cancellation.
inline HeadwayEstimate fuse_estimates(const std::vector<HeadwayEstimate>& parts) {
  detail::require(!parts.empty(), "fuse_estimates: no members");
  const double n = static_cast<double>(parts.size());
  double p = 0.0, var = 0.0;
  for (const auto& e : parts) p += e.p;
  p /= n;
  for (const auto& e : parts) var += e.var + (e.p - p) * (e.p - p);
  return {p, var / n};
}

inline std::vector<HeadwayEstimate> member_estimates(const std::vector<RegressorParams>& members,
                                                     const ObservationPair& obs) {
  std::vector<HeadwayEstimate> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(regressor_forward(m, obs));
  return out;
}

inline HeadwayEstimate ensemble_estimate(const std::vector<RegressorParams>& members,
                                         const ObservationPair& obs) {
  detail::require(!members.empty(), "ensemble_estimate: no members");
  return fuse_estimates(member_estimates(members, obs));
}

}  // namespace eacc::perception
