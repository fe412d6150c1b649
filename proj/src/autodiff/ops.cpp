#include "memkit/autodiff/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "memkit/errors.hpp"

namespace memkit::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ArgumentError(std::string(op) + ": undefined tensor");
}

template <class F, class G>
Tensor unary(const Tensor& x, const char* name, F f, G dfdx) {
  require_defined(x, name);
  const auto& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  Node* px = x.node();
  return make_op(x.rows(), x.cols(), std::move(out), {x},
                 [px, dfdx](const Node& self) {
                   for (std::size_t i = 0; i < self.size(); ++i)
                     px->grad[i] += self.grad[i] * dfdx(px->value[i], self.value[i]);
                 },
                 name);
}

template <class F, class GA, class GB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, GA ga, GB gb) {
  require_defined(a, name);
  require_defined(b, name);
  const std::size_t ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  const std::size_t r = std::max(ra, rb), c = std::max(ca, cb);
  if ((ra != r && ra != 1) || (rb != r && rb != 1) || (ca != c && ca != 1) || (cb != c && cb != 1))
    throw ShapeError(std::string(name) + ": cannot broadcast " + shape_str(a) + " with " + shape_str(b));
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = f(av[(ra == 1 ? 0 : i) * ca + (ca == 1 ? 0 : j)],
                         bv[(rb == 1 ? 0 : i) * cb + (cb == 1 ? 0 : j)]);
  Node* pa = a.node();
  Node* pb = b.node();
  return make_op(r, c, std::move(out), {a, b},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) {
                       const std::size_t ia = (ra == 1 ? 0 : i) * ca + (ca == 1 ? 0 : j);
                       const std::size_t ib = (rb == 1 ? 0 : i) * cb + (cb == 1 ? 0 : j);
                       const double g = self.grad[i * c + j];
                       const double x = pa->value[ia], y = pb->value[ib];
                       if (pa->requires_grad) pa->grad[ia] += g * ga(x, y);
                       if (pb->requires_grad) pb->grad[ib] += g * gb(x, y);
                     }
                 },
                 name);
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) {
  return x > 30 ? x : (x < -30 ? std::exp(x) : std::log1p(std::exp(x)));
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "softplus") return Activation::Softplus;
  if (name == "oneminus") return Activation::OneMinus;
  if (name == "identity") return Activation::Identity;
  throw ArgumentError("unknown activation: " + std::string(name));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor one_minus(const Tensor& a) {
  return unary(a, "one_minus", [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, "sigmoid", sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
  return unary(a, "softplus", softplus_scalar, [](double x, double) { return sigmoid_scalar(x); });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.value())
    if (!(v > 0)) throw DomainError("log of a non-positive value");
  return unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  for (double v : a.value())
    if (v < 0) throw DomainError("sqrt of a negative value");
  return unary(
      a, "sqrt", [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor apply_activation(Activation kind, const Tensor& x) {
  for (double v : x.value())
    if (!std::isfinite(v)) throw DomainError("activation input is not finite");
  switch (kind) {
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Tanh: return tanh(x);
    case Activation::Relu: return relu(x);
    case Activation::Softplus: return softplus(x);
    case Activation::OneMinus: return one_minus(x);
    case Activation::Identity: return scale(x, 1.0);
  }
  throw ArgumentError("unknown activation");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m);
  Map(out.data(), n, m).noalias() = MapC(a.value().data(), n, k) * MapC(b.value().data(), k, m);
  Node* pa = a.node();
  Node* pb = b.node();
  return make_op(n, m, std::move(out), {a, b},
                 [=](const Node& self) {
                   MapC g(self.grad.data(), n, m);
                   if (pa->requires_grad)
                     Map(pa->grad.data(), n, k).noalias() += g * MapC(pb->value.data(), k, m).transpose();
                   if (pb->requires_grad)
                     Map(pb->grad.data(), k, m).noalias() += MapC(pa->value.data(), n, k).transpose() * g;
                 },
                 "matmul");
}

Tensor transpose(const Tensor& a) {
  require_defined(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.value()[i * c + j];
  Node* pa = a.node();
  return make_op(c, r, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) pa->grad[i * c + j] += self.grad[j * r + i];
                 },
                 "transpose");
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_defined(x, "linear");
  require_defined(w, "linear");
  const std::size_t n = x.rows(), in = x.cols(), out_dim = w.rows();
  if (w.cols() != in) throw ShapeError("linear: input " + shape_str(x) + " weight " + shape_str(w));
  const bool has_bias = b.defined();
  if (has_bias && (b.rows() != 1 || b.cols() != out_dim)) throw ShapeError("linear: bias shape");
  std::vector<double> out(n * out_dim);
  Map y(out.data(), n, out_dim);
  y.noalias() = MapC(x.value().data(), n, in) * MapC(w.value().data(), out_dim, in).transpose();
  if (has_bias) y.rowwise() += MapC(b.value().data(), 1, out_dim).row(0);
  Node* px = x.node();
  Node* pw = w.node();
  Node* pb = has_bias ? b.node() : nullptr;
  std::vector<Tensor> parents{x, w};
  if (has_bias) parents.push_back(b);
  return make_op(n, out_dim, std::move(out), std::move(parents),
                 [=](const Node& self) {
                   MapC g(self.grad.data(), n, out_dim);
                   if (px->requires_grad)
                     Map(px->grad.data(), n, in).noalias() += g * MapC(pw->value.data(), out_dim, in);
                   if (pw->requires_grad)
                     Map(pw->grad.data(), out_dim, in).noalias() += g.transpose() * MapC(px->value.data(), n, in);
                   if (pb && pb->requires_grad) Map(pb->grad.data(), 1, out_dim) += g.colwise().sum();
                 },
                 "linear");
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double s = 0;
  for (double v : a.value()) s += v;
  Node* pa = a.node();
  return make_op(1, 1, {s}, {a},
                 [pa](const Node& self) {
                   for (auto& g : pa->grad) g += self.grad[0];
                 },
                 "sum");
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor sum_rows(const Tensor& a) {
  require_defined(a, "sum_rows");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += a.value()[i * c + j];
  Node* pa = a.node();
  return make_op(1, c, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) pa->grad[i * c + j] += self.grad[j];
                 },
                 "sum_rows");
}

Tensor sum_cols(const Tensor& a) {
  require_defined(a, "sum_cols");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += a.value()[i * c + j];
  Node* pa = a.node();
  return make_op(r, 1, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) pa->grad[i * c + j] += self.grad[i];
                 },
                 "sum_cols");
}

Tensor row_max(const Tensor& a) {
  require_defined(a, "row_max");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r);
  std::vector<std::size_t> arg(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = a.value().data() + i * c;
    arg[i] = static_cast<std::size_t>(std::max_element(row, row + c) - row);
    out[i] = row[arg[i]];
  }
  Node* pa = a.node();
  return make_op(r, 1, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i) pa->grad[i * c + arg[i]] += self.grad[i];
                 },
                 "row_max");
}

Tensor softmax_rows(const Tensor& a) {
  require_defined(a, "softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.value().data() + i * c;
    double* y = out.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  Node* pa = a.node();
  return make_op(r, c, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i) {
                     const double* y = self.value.data() + i * c;
                     const double* g = self.grad.data() + i * c;
                     double dot = 0;
                     for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
                     for (std::size_t j = 0; j < c; ++j) pa->grad[i * c + j] += y[j] * (g[j] - dot);
                   }
                 },
                 "softmax_rows");
}

Tensor log_softmax_rows(const Tensor& a) {
  require_defined(a, "log_softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.value().data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[j] - lz;
  }
  Node* pa = a.node();
  return make_op(r, c, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i) {
                     const double* g = self.grad.data() + i * c;
                     double gs = 0;
                     for (std::size_t j = 0; j < c; ++j) gs += g[j];
                     for (std::size_t j = 0; j < c; ++j)
                       pa->grad[i * c + j] += g[j] - std::exp(self.value[i * c + j]) * gs;
                   }
                 },
                 "log_softmax_rows");
}

Tensor softmax_with_strength(const Tensor& scores, const Tensor& beta) {
  for (double b : beta.value())
    if (b < 0) throw ArgumentError("softmax strength must be non-negative");
  if (!(beta.cols() == 1 && (beta.rows() == 1 || beta.rows() == scores.rows())))
    throw ShapeError("softmax strength must be 1x1 or rows x 1");
  return softmax_rows(mul(scores, beta));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: no parts");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (auto& p : parts) {
    require_defined(p, "concat_cols");
    if (p.rows() != r) throw ShapeError("concat_cols: row mismatch");
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (auto& p : parts) {
    offsets.push_back(off);
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.value().data() + i * p.cols(), p.cols(), out.data() + i * c + off);
    off += p.cols();
  }
  std::vector<Node*> nodes;
  for (auto& p : parts) nodes.push_back(p.node());
  return make_op(r, c, std::move(out), parts,
                 [=](const Node& self) {
                   for (std::size_t k = 0; k < nodes.size(); ++k) {
                     Node* p = nodes[k];
                     if (!p->requires_grad) continue;
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < p->cols; ++j)
                         p->grad[i * p->cols + j] += self.grad[i * c + offsets[k] + j];
                   }
                 },
                 "concat_cols");
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no parts");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (auto& p : parts) {
    require_defined(p, "concat_rows");
    if (p.cols() != c) throw ShapeError("concat_rows: column mismatch");
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (auto& p : parts) out.insert(out.end(), p.value().begin(), p.value().end());
  std::vector<Node*> nodes;
  for (auto& p : parts) nodes.push_back(p.node());
  return make_op(r, c, std::move(out), parts,
                 [=](const Node& self) {
                   std::size_t off = 0;
                   for (Node* p : nodes) {
                     if (p->requires_grad)
                       for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += self.grad[off + i];
                     off += p->size();
                   }
                 },
                 "concat_rows");
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  require_defined(a, "slice_cols");
  if (count == 0 || start + count > a.cols()) throw ShapeError("slice_cols out of range");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(a.value().data() + i * c + start, count, out.data() + i * count);
  Node* pa = a.node();
  return make_op(r, count, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < count; ++j)
                       pa->grad[i * c + start + j] += self.grad[i * count + j];
                 },
                 "slice_cols");
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
  require_defined(a, "slice_rows");
  if (count == 0 || start + count > a.rows()) throw ShapeError("slice_rows out of range");
  const std::size_t c = a.cols();
  std::vector<double> out(a.value().begin() + static_cast<std::ptrdiff_t>(start * c),
                          a.value().begin() + static_cast<std::ptrdiff_t>((start + count) * c));
  Node* pa = a.node();
  return make_op(count, c, std::move(out), {a},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < count * c; ++i) pa->grad[start * c + i] += self.grad[i];
                 },
                 "slice_rows");
}

Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
  require_defined(a, "reshape");
  if (rows * cols != a.size()) throw ShapeError("reshape changes element count");
  Node* pa = a.node();
  return make_op(rows, cols, a.value(), {a},
                 [pa](const Node& self) {
                   for (std::size_t i = 0; i < self.size(); ++i) pa->grad[i] += self.grad[i];
                 },
                 "reshape");
}

Tensor straight_through(const Tensor& hard, const Tensor& soft) {
  if (hard.rows() != soft.rows() || hard.cols() != soft.cols())
    throw ShapeError("straight_through shape mismatch");
  Node* ps = soft.node();
  return make_op(hard.rows(), hard.cols(), hard.value(), {soft},
                 [ps](const Node& self) {
                   for (std::size_t i = 0; i < self.size(); ++i) ps->grad[i] += self.grad[i];
                 },
                 "straight_through");
}

Tensor sigmoid_bce_with_logits(const Tensor& logits, const Tensor& targets, const Tensor& mask) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ShapeError("bce: target shape");
  const std::size_t r = logits.rows(), c = logits.cols();
  const bool has_mask = mask.defined();
  if (has_mask && !(mask.rows() == r && (mask.cols() == 1 || mask.cols() == c)))
    throw ShapeError("bce: mask shape");
  auto m = [&, mc = has_mask ? mask.cols() : 0](std::size_t i, std::size_t j) {
    if (!has_mask) return 1.0;
    return mask.value()[i * mc + (mc == 1 ? 0 : j)];
  };
  std::vector<double> weights(r * c);
  double loss = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double x = logits.value()[i * c + j], y = targets.value()[i * c + j];
      const double w = m(i, j);
      weights[i * c + j] = w;
      if (w == 0) continue;
      loss += w * (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))));
    }
  Node* pl = logits.node();
  std::vector<double> tv = targets.value();
  return make_op(1, 1, {loss}, {logits},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r * c; ++i) {
                     if (weights[i] == 0) continue;
                     pl->grad[i] += self.grad[0] * weights[i] * (sigmoid_scalar(pl->value[i]) - tv[i]);
                   }
                 },
                 "sigmoid_bce");
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets) {
  if (targets.size() != logits.rows()) throw ShapeError("cross entropy: one target per row");
  const std::size_t r = logits.rows(), c = logits.cols();
  std::vector<double> probs(r * c);
  double loss = 0;
  for (std::size_t i = 0; i < r; ++i) {
    if (targets[i] >= c) throw ArgumentError("cross entropy: target out of range");
    const double* x = logits.value().data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[i * c + j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    loss -= x[targets[i]] - mx - std::log(z);
  }
  Node* pl = logits.node();
  return make_op(1, 1, {loss}, {logits},
                 [=](const Node& self) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j)
                       pl->grad[i * c + j] +=
                           self.grad[0] * (probs[i * c + j] - (j == targets[i] ? 1.0 : 0.0));
                 },
                 "softmax_cross_entropy");
}

CosineResult cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine_similarity: length mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return {0.0, true};
  return {dot / (std::sqrt(nu) * std::sqrt(nv)), false};
}

std::vector<double> softmax_with_strength(std::span<const double> scores, double beta) {
  if (beta < 0) throw ArgumentError("softmax strength must be non-negative");
  if (scores.empty()) throw ShapeError("softmax of an empty vector");
  double mx = -INFINITY;
  for (double s : scores) mx = std::max(mx, beta * s);
  std::vector<double> out(scores.size());
  double z = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) z += (out[i] = std::exp(beta * scores[i] - mx));
  for (auto& o : out) o /= z;
  return out;
}

}  // namespace memkit::ad
