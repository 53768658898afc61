#pragma once

#include <functional>
#include <span>
#include <vector>

#include "flowddi/tensor.hpp"

namespace flowddi {

struct GradCheckEntry {
  std::size_t param;
  std::size_t index;
  double analytic;
  double numeric;
  double rel_err;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::vector<GradCheckEntry> flagged;  // entries whose rel_err exceeds tol
  bool ok() const { return flagged.empty(); }
};

// Central-difference check of analytic gradients. `eval` recomputes the
// scalar objective from the current contents of `params`; the tensors are
// perturbed in place entry by entry and restored afterwards. `analytic`
// must align with `params`.
GradCheckReport finite_difference_check(const std::function<double()>& eval,
                                        std::span<Tensor* const> params,
                                        const std::vector<Tensor>& analytic,
                                        double h, double tol);

}  // namespace flowddi
