#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "memkit/autodiff/ops.hpp"
#include "memkit/scheduling/schedule.hpp"

namespace memkit::capacity {

using ad::Tensor;

struct CapacityParams {
  double lambda = 0.9;
  double C = 1.0;
  int T = 1;
  int D = 1;
  bool allow_lambda_above_one = false;
};

// (1 - lambda^x) / (1 - lambda), or x when lambda == 1.
double f_lambda(double x, double lambda);

struct ScheduleScore {
  std::vector<int> steps;      // explicit writes, all < T
  std::vector<int> intervals;  // D'+1 segment lengths summing to T
  double score = 0.0;
};

// Writes at t == T coincide with the implicit end of the final segment and
// are dropped; more than D remaining writes is an error.
ScheduleScore capacity_of_schedule(const std::vector<int>& steps, const CapacityParams& params);
ScheduleScore score_schedule(const sched::WriteSchedule& schedule, const CapacityParams& params);

// C (D+1)/T * f_lambda(T/(D+1)): the best average contribution over all
// real-valued interval choices.
double uniform_bound(const CapacityParams& params);

struct BruteForceResult {
  double best = 0.0;
  std::vector<ScheduleScore> argmax;  // every schedule within 1e-12 of best
  std::vector<ScheduleScore> all;     // filled when requested
  std::size_t enumerated = 0;
};

inline constexpr double kMaxEnumeration = 1e6;

// Enumerates every D-subset of {1..T-1}.
BruteForceResult brute_force_optimal_schedule(const CapacityParams& params, bool keep_all = false);

enum class JacobianNorm { Frobenius, Infinity };

struct ContributionProfile {
  std::size_t T = 0;
  std::vector<double> c;  // T x T row-major, c[(i-1)*T + (t-1)], zero for i > t
  double at(std::size_t i, std::size_t t) const { return c[(i - 1) * T + (t - 1)]; }
};

using RecurrentStep = std::function<Tensor(const Tensor& h_prev, const Tensor& x)>;

// c[i,t] = ||dh_t / dx_i|| from one backward pass per coordinate of h_t.
ContributionProfile empirical_contribution(const RecurrentStep& step, const Tensor& h0,
                                           const std::vector<std::vector<double>>& xs,
                                           JacobianNorm norm = JacobianNorm::Frobenius);

// Fisher memory curve J(0..k_max) of x(n) = W x(n-1) + v s(n) + noise for a
// normal W, from its Schur form. Scales as 1/eps.
std::vector<double> fisher_memory_curve(const Eigen::MatrixXd& W, const Eigen::VectorXd& v, double eps,
                                        int k_max);

// CSV with header schedule,intervals,I_lambda,bound,is_argmax for every
// enumerated schedule.
std::string analyze_csv(const CapacityParams& params);

}  // namespace memkit::capacity
