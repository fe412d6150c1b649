#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "memkit/autodiff/tensor.hpp"

namespace memkit::ad {

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t coordinates = 0;
  std::vector<double> rel_errs;  // one per checked coordinate, inputs in order
};

// Compares tape gradients of the scalar returned by f against central
// differences of f over every coordinate of every input. The relative error
// of a coordinate is |a - n| / max(|a|, |n|, floor).
GradCheckReport finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                                  double eps = 1e-6, double floor = 1e-4);

GradCheckReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                  double eps = 1e-6, double floor = 1e-4);

}  // namespace memkit::ad
