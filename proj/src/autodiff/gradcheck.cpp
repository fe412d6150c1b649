#include "memkit/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "memkit/errors.hpp"

namespace memkit::ad {

GradCheckReport finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                                  double eps, double floor) {
  if (!(eps > 0)) throw ArgumentError("finite_diff_check: eps must be positive");
  Tape& tape = Tape::active();
  tape.clear();
  Tensor loss = f();
  if (loss.size() != 1) throw ShapeError("finite_diff_check: f must return a scalar");
  for (auto x : inputs) x.mutable_grad().assign(x.size(), 0.0);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& x : inputs) analytic.push_back(x.grad());
  tape.clear();

  GradCheckReport report;
  NoGradGuard guard;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor x = inputs[k];
    auto& v = x.mutable_value();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + eps;
      const double up = f().item();
      v[i] = orig - eps;
      const double down = f().item();
      v[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
      report.rel_errs.push_back(rel);
      report.max_rel_err = std::max(report.max_rel_err, rel);
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
      ++report.coordinates;
    }
  }
  return report;
}

GradCheckReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                  double eps, double floor) {
  if (!x.requires_grad()) throw ArgumentError("finite_diff_check: input must be a leaf with gradients");
  return finite_diff_check([&] { return f(x); }, std::vector<Tensor>{x}, eps, floor);
}

}  // namespace memkit::ad
