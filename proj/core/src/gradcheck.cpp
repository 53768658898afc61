#include "flowddi/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "flowddi/errors.hpp"

namespace flowddi {

GradCheckReport finite_difference_check(const std::function<double()>& eval,
                                        std::span<Tensor* const> params,
                                        const std::vector<Tensor>& analytic,
                                        double h, double tol) {
  if (h <= 0.0) throw ContractError("finite_difference_check requires h > 0");
  if (analytic.size() != params.size())
    throw ContractError("analytic gradient count does not match parameter count");

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    if (!t.same_shape(analytic[p]))
      throw ContractError("analytic gradient shape mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t.at(i);
      t.at(i) = saved + h;
      const double up = eval();
      t.at(i) = saved - h;
      const double down = eval();
      t.at(i) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p].at(i);
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      report.max_rel_err = std::max(report.max_rel_err, rel);
      if (rel > tol)
        report.flagged.push_back(GradCheckEntry{p, i, a, numeric, rel});
    }
  }
  return report;
}

}  // namespace flowddi
