#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ifan {

struct GradcheckResult {
  std::string op;
  // Max over inputs of |analytic - numeric|_inf / max(|analytic|_inf, |numeric|_inf, 1e-8).
  double max_rel_error = 0.0;
  int64_t entries = 0;  // perturbed scalars
  bool passed = false;
};

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-6;

// Operator ids accepted by finite_diff_check, in suite order.
const std::vector<std::string>& gradcheck_ops();

// Central differences of a random quadratic projection of the op's output,
// against the tape's gradient for every input. Inputs are drawn away from
// kinks (LReLU zero, integer warp coordinates, warp clamping).
GradcheckResult finite_diff_check(const std::string& op, uint64_t seed = 7, double h = kGradcheckStep,
                                  double tol = kGradcheckTolerance);

std::vector<GradcheckResult> gradcheck_suite(uint64_t seed = 7);

}  // namespace ifan
