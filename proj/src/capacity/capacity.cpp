#include "memkit/capacity/capacity.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "memkit/errors.hpp"

namespace memkit::capacity {

namespace {

void validate(const CapacityParams& p) {
  if (!(p.lambda > 0)) throw ArgumentError("lambda must be positive");
  if (p.lambda > 1 && !p.allow_lambda_above_one) throw ArgumentError("lambda above 1 needs the explicit flag");
  if (!(p.C > 0)) throw ArgumentError("C must be positive");
  if (p.T < 1) throw ArgumentError("T must be >= 1");
  if (p.D < 0) throw ArgumentError("D must be >= 0");
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string join(const std::vector<int>& v, char sep) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? std::string(1, sep) : "") << v[i];
  return out.str();
}

}  // namespace

double f_lambda(double x, double lambda) {
  if (!(lambda > 0)) throw ArgumentError("f_lambda: lambda must be positive");
  if (x < 0) throw ArgumentError("f_lambda: x must be non-negative");
  if (x == 0) return 0.0;
  if (std::abs(lambda - 1.0) < 1e-12) return x;
  return -std::expm1(x * std::log(lambda)) / (1.0 - lambda);
}

ScheduleScore capacity_of_schedule(const std::vector<int>& steps, const CapacityParams& p) {
  validate(p);
  ScheduleScore s;
  int prev = 0;
  for (int k : steps) {
    if (k == p.T) continue;
    if (k < 1 || k > p.T) throw ArgumentError("schedule step outside [1, T]");
    if (k <= prev) throw ArgumentError("schedule steps must be strictly increasing");
    s.steps.push_back(k);
    s.intervals.push_back(k - prev);
    prev = k;
  }
  if (static_cast<int>(s.steps.size()) > p.D) throw ArgumentError("more explicit writes than memory slots");
  s.intervals.push_back(p.T - prev);
  double total = 0;
  for (int l : s.intervals) total += f_lambda(l, p.lambda);
  s.score = p.C / p.T * total;
  return s;
}

ScheduleScore score_schedule(const sched::WriteSchedule& schedule, const CapacityParams& p) {
  if (schedule.T != p.T) throw ArgumentError("schedule length differs from T");
  return capacity_of_schedule(schedule.steps, p);
}

double uniform_bound(const CapacityParams& p) {
  validate(p);
  const double seg = static_cast<double>(p.T) / (p.D + 1);
  return p.C * (p.D + 1) / p.T * f_lambda(seg, p.lambda);
}

BruteForceResult brute_force_optimal_schedule(const CapacityParams& p, bool keep_all) {
  validate(p);
  const int n = p.T - 1;
  if (p.D > n) throw ArgumentError("more memory slots than candidate write steps");
  if (binomial(n, p.D) > kMaxEnumeration) throw ResourceError("brute force enumeration exceeds the guard");
  BruteForceResult r;
  r.best = -1;
  std::vector<int> idx(static_cast<std::size_t>(p.D));
  for (int i = 0; i < p.D; ++i) idx[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    ScheduleScore s = capacity_of_schedule(idx, p);
    ++r.enumerated;
    const double tol = 1e-12 * std::max(1.0, std::abs(r.best));
    if (s.score > r.best + tol) {
      r.best = s.score;
      r.argmax.clear();
      r.argmax.push_back(s);
    } else if (std::abs(s.score - r.best) <= tol) {
      r.argmax.push_back(s);
    }
    if (keep_all) r.all.push_back(std::move(s));
    int i = p.D - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - (p.D - 1 - i)) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < p.D; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return r;
}

ContributionProfile empirical_contribution(const RecurrentStep& step, const Tensor& h0,
                                           const std::vector<std::vector<double>>& xs, JacobianNorm norm) {
  ContributionProfile prof;
  const std::size_t T = xs.size();
  prof.T = T;
  prof.c.assign(T * T, 0.0);
  if (T == 0) return prof;
  auto& tape = ad::Tape::active();
  tape.clear();
  std::vector<Tensor> leaves, hs;
  Tensor h = h0;
  for (const auto& x : xs) {
    leaves.push_back(Tensor::leaf(1, x.size(), x));
    h = step(h, leaves.back());
    hs.push_back(h);
  }
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t H = hs[t].cols();
    std::vector<double> acc(t + 1, 0.0);
    for (std::size_t k = 0; k < H; ++k) {
      Tensor coord = ad::slice_cols(hs[t], k, 1);
      if (!coord.requires_grad()) continue;
      tape.backward(coord);
      for (std::size_t i = 0; i <= t; ++i) {
        const auto& g = leaves[i].grad();
        if (norm == JacobianNorm::Frobenius) {
          for (double v : g) acc[i] += v * v;
        } else {
          double row = 0;
          for (double v : g) row += std::abs(v);
          acc[i] = std::max(acc[i], row);
        }
      }
    }
    for (std::size_t i = 0; i <= t; ++i)
      prof.c[i * T + t] = norm == JacobianNorm::Frobenius ? std::sqrt(acc[i]) : acc[i];
  }
  tape.clear();
  return prof;
}

std::vector<double> fisher_memory_curve(const Eigen::MatrixXd& W, const Eigen::VectorXd& v, double eps, int k_max) {
  if (W.rows() != W.cols() || W.rows() != v.size()) throw ShapeError("fisher: W must be square and match v");
  if (!(eps > 0)) throw ArgumentError("fisher: eps must be positive");
  if (k_max < 0) throw ArgumentError("fisher: k_max must be >= 0");
  const double scale = std::max(1.0, W.squaredNorm());
  if ((W * W.transpose() - W.transpose() * W).norm() > 1e-9 * scale)
    throw ArgumentError("fisher: the closed form needs a normal matrix");
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(W);
  const Eigen::MatrixXcd& Q = schur.matrixU();
  const Eigen::VectorXcd lam = schur.matrixT().diagonal();
  double radius = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) radius = std::max(radius, std::abs(lam[i]));
  if (radius >= 1.0) throw DomainError("fisher: spectral radius must be below 1");
  const Eigen::VectorXcd coef = Q.adjoint() * v.cast<std::complex<double>>();
  std::vector<double> J(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (int k = 0; k <= k_max; ++k) {
    double s = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double m2 = std::norm(lam[i]);
      s += std::norm(coef[i]) * std::pow(m2, k) * (1.0 - m2);
    }
    J[static_cast<std::size_t>(k)] = s / eps;
  }
  return J;
}

std::string analyze_csv(const CapacityParams& p) {
  const auto bf = brute_force_optimal_schedule(p, true);
  const double bound = uniform_bound(p);
  std::ostringstream out;
  out << "schedule,intervals,I_lambda,bound,is_argmax\n" << std::setprecision(17);
  for (const auto& s : bf.all) {
    bool is_max = false;
    for (const auto& m : bf.argmax) is_max = is_max || m.steps == s.steps;
    out << join(s.steps, ' ') << ',' << join(s.intervals, ' ') << ',' << s.score << ',' << bound << ','
        << (is_max ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace memkit::capacity
