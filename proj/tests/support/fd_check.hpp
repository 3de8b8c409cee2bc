#pragma once

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dpdlgmm::testing {

struct FdStats {
  int checked = 0;
  int failed = 0;
  double worst = 0.0;  // largest |a - fd| / max(|a|, |fd|) over failing-scale entries
};

/// Central differences of `objective` over every coordinate of `params`,
/// compared with the analytic `grads` (same block layout). An entry passes
/// when |a - fd| <= max(rel * max(|a|, |fd|), abs).
inline FdStats compare_fd(const std::vector<std::span<double>>& params,
                          const std::vector<std::span<double>>& grads,
                          const std::function<double()>& objective, double step = 1e-5,
                          double rel = 1e-4, double abs = 1e-7) {
  FdStats stats;
  for (size_t b = 0; b < params.size(); ++b) {
    for (size_t i = 0; i < params[b].size(); ++i) {
      double& p = params[b][i];
      const double saved = p;
      p = saved + step;
      const double up = objective();
      p = saved - step;
      const double down = objective();
      p = saved;
      const double fd = (up - down) / (2.0 * step);
      const double a = grads[b][i];
      const double err = std::abs(a - fd);
      const double scale = std::max(std::abs(a), std::abs(fd));
      ++stats.checked;
      if (err > std::max(rel * scale, abs)) {
        ++stats.failed;
        ADD_FAILURE() << "block " << b << " entry " << i << ": analytic " << a << " vs fd " << fd;
      }
      if (scale > abs) stats.worst = std::max(stats.worst, err / scale);
    }
  }
  return stats;
}

}  // namespace dpdlgmm::testing
