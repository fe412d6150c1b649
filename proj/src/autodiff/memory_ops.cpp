#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "memkit/autodiff/ops.hpp"
#include "memkit/errors.hpp"

namespace memkit::ad {

namespace {

std::size_t slots_per_batch(const Tensor& batched, const Tensor& mem, const char* op) {
  const std::size_t b = batched.rows();
  if (mem.rows() % b != 0) throw ShapeError(std::string(op) + ": memory rows not a multiple of batch");
  return mem.rows() / b;
}

}  // namespace

Tensor cosine_rows(const Tensor& keys, const Tensor& mem) {
  const std::size_t B = keys.rows(), W = keys.cols();
  if (mem.cols() != W) throw ShapeError("cosine_rows: key width differs from slot width");
  const std::size_t N = slots_per_batch(keys, mem, "cosine_rows");
  const auto& kv = keys.value();
  const auto& mv = mem.value();
  std::vector<double> out(B * N, 0.0), knorm(B), mnorm(B * N);
  for (std::size_t b = 0; b < B; ++b) {
    const double* k = kv.data() + b * W;
    double kk = 0;
    for (std::size_t j = 0; j < W; ++j) kk += k[j] * k[j];
    knorm[b] = std::sqrt(kk);
    for (std::size_t i = 0; i < N; ++i) {
      const double* m = mv.data() + (b * N + i) * W;
      double dot = 0, mm = 0;
      for (std::size_t j = 0; j < W; ++j) {
        dot += k[j] * m[j];
        mm += m[j] * m[j];
      }
      mnorm[b * N + i] = std::sqrt(mm);
      if (knorm[b] > 0 && mm > 0) out[b * N + i] = dot / (knorm[b] * mnorm[b * N + i]);
    }
  }
  Node* pk = keys.node();
  Node* pm = mem.node();
  return make_op(B, N, std::move(out), {keys, mem},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b) {
                     const double kn = knorm[b];
                     if (kn == 0) continue;
                     const double* k = pk->value.data() + b * W;
                     for (std::size_t i = 0; i < N; ++i) {
                       const double mn = mnorm[b * N + i];
                       if (mn == 0) continue;
                       const double g = self.grad[b * N + i];
                       if (g == 0) continue;
                       const double c = self.value[b * N + i];
                       const double* m = pm->value.data() + (b * N + i) * W;
                       const double inv = 1.0 / (kn * mn);
                       if (pk->requires_grad)
                         for (std::size_t j = 0; j < W; ++j)
                           pk->grad[b * W + j] += g * (m[j] * inv - c * k[j] / (kn * kn));
                       if (pm->requires_grad)
                         for (std::size_t j = 0; j < W; ++j)
                           pm->grad[(b * N + i) * W + j] += g * (k[j] * inv - c * m[j] / (mn * mn));
                     }
                   }
                 },
                 "cosine_rows");
}

Tensor batched_outer(const Tensor& a, const Tensor& c) {
  if (a.rows() != c.rows()) throw ShapeError("batched_outer: batch mismatch");
  const std::size_t B = a.rows(), N = a.cols(), W = c.cols();
  std::vector<double> out(B * N * W);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < W; ++j) out[(b * N + i) * W + j] = a.value()[b * N + i] * c.value()[b * W + j];
  Node* pa = a.node();
  Node* pc = c.node();
  return make_op(B * N, W, std::move(out), {a, c},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t i = 0; i < N; ++i)
                       for (std::size_t j = 0; j < W; ++j) {
                         const double g = self.grad[(b * N + i) * W + j];
                         if (pa->requires_grad) pa->grad[b * N + i] += g * pc->value[b * W + j];
                         if (pc->requires_grad) pc->grad[b * W + j] += g * pa->value[b * N + i];
                       }
                 },
                 "batched_outer");
}

Tensor batched_read(const Tensor& w, const Tensor& mem) {
  const std::size_t B = w.rows(), N = w.cols(), W = mem.cols();
  if (mem.rows() != B * N) throw ShapeError("batched_read: weights do not match memory slots");
  std::vector<double> out(B * W, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < N; ++i) {
      const double wi = w.value()[b * N + i];
      if (wi == 0) continue;
      const double* m = mem.value().data() + (b * N + i) * W;
      for (std::size_t j = 0; j < W; ++j) out[b * W + j] += wi * m[j];
    }
  Node* pw = w.node();
  Node* pm = mem.node();
  return make_op(B, W, std::move(out), {w, mem},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t i = 0; i < N; ++i) {
                       const double* m = pm->value.data() + (b * N + i) * W;
                       const double* g = self.grad.data() + b * W;
                       if (pw->requires_grad) {
                         double s = 0;
                         for (std::size_t j = 0; j < W; ++j) s += g[j] * m[j];
                         pw->grad[b * N + i] += s;
                       }
                       if (pm->requires_grad) {
                         const double wi = pw->value[b * N + i];
                         for (std::size_t j = 0; j < W; ++j) pm->grad[(b * N + i) * W + j] += g[j] * wi;
                       }
                     }
                 },
                 "batched_read");
}

Tensor batched_matvec(const Tensor& mats, const Tensor& w, bool transpose) {
  const std::size_t B = w.rows(), N = w.cols();
  if (mats.rows() != B * N || mats.cols() != N) throw ShapeError("batched_matvec: shape mismatch");
  std::vector<double> out(B * N, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        const double l = mats.value()[(b * N + i) * N + j];
        if (transpose)
          out[b * N + j] += l * w.value()[b * N + i];
        else
          out[b * N + i] += l * w.value()[b * N + j];
      }
  Node* pl = mats.node();
  Node* pw = w.node();
  return make_op(B, N, std::move(out), {mats, w},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t i = 0; i < N; ++i)
                       for (std::size_t j = 0; j < N; ++j) {
                         const std::size_t li = (b * N + i) * N + j;
                         const std::size_t out_i = transpose ? b * N + j : b * N + i;
                         const std::size_t in_i = transpose ? b * N + i : b * N + j;
                         const double g = self.grad[out_i];
                         if (pl->requires_grad) pl->grad[li] += g * pw->value[in_i];
                         if (pw->requires_grad) pw->grad[in_i] += g * pl->value[li];
                       }
                 },
                 "batched_matvec");
}

Tensor batched_vecmat(const Tensor& x, const Tensor& mats) {
  const std::size_t B = x.rows(), K = x.cols();
  if (mats.rows() != B || mats.cols() % K != 0) throw ShapeError("batched_vecmat: shape mismatch");
  const std::size_t M = mats.cols() / K;
  std::vector<double> out(B * M, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < K; ++k) {
      const double xv = x.value()[b * K + k];
      const double* p = mats.value().data() + b * K * M + k * M;
      for (std::size_t m = 0; m < M; ++m) out[b * M + m] += xv * p[m];
    }
  Node* px = x.node();
  Node* pp = mats.node();
  return make_op(B, M, std::move(out), {x, mats},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t k = 0; k < K; ++k) {
                       const double* g = self.grad.data() + b * M;
                       const std::size_t base = b * K * M + k * M;
                       if (px->requires_grad) {
                         double s = 0;
                         for (std::size_t m = 0; m < M; ++m) s += g[m] * pp->value[base + m];
                         px->grad[b * K + k] += s;
                       }
                       if (pp->requires_grad) {
                         const double xv = px->value[b * K + k];
                         for (std::size_t m = 0; m < M; ++m) pp->grad[base + m] += g[m] * xv;
                       }
                     }
                 },
                 "batched_vecmat");
}

Tensor circular_shift(const Tensor& w, const Tensor& s) {
  if (w.rows() != s.rows()) throw ShapeError("circular_shift: batch mismatch");
  const std::size_t B = w.rows(), N = w.cols(), S = s.cols();
  if (S % 2 == 0) throw ShapeError("circular_shift: shift width must be odd");
  const long half = static_cast<long>(S / 2);
  auto src = [N](std::size_t i, long offset) {
    const long n = static_cast<long>(N);
    return static_cast<std::size_t>(((static_cast<long>(i) - offset) % n + n) % n);
  };
  std::vector<double> out(B * N, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < S; ++j)
        out[b * N + i] += w.value()[b * N + src(i, static_cast<long>(j) - half)] * s.value()[b * S + j];
  Node* pw = w.node();
  Node* ps = s.node();
  return make_op(B, N, std::move(out), {w, s},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t i = 0; i < N; ++i) {
                       const double g = self.grad[b * N + i];
                       for (std::size_t j = 0; j < S; ++j) {
                         const std::size_t k = b * N + src(i, static_cast<long>(j) - half);
                         if (pw->requires_grad) pw->grad[k] += g * ps->value[b * S + j];
                         if (ps->requires_grad) ps->grad[b * S + j] += g * pw->value[k];
                       }
                     }
                 },
                 "circular_shift");
}

Tensor sharpen(const Tensor& w, const Tensor& gamma) {
  const std::size_t B = w.rows(), N = w.cols();
  if (gamma.rows() != B || gamma.cols() != 1) throw ShapeError("sharpen: gamma must be B x 1");
  std::vector<double> out(B * N), sums(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double g = gamma.value()[b];
    if (g < 1.0) throw ArgumentError("sharpen: gamma must be >= 1");
    double s = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double x = w.value()[b * N + i];
      if (x < 0) throw ArgumentError("sharpen: negative weight");
      s += (out[b * N + i] = std::pow(x, g));
    }
    if (!(s > 0)) throw DomainError("sharpen: all weights are zero");
    sums[b] = s;
    for (std::size_t i = 0; i < N; ++i) out[b * N + i] /= s;
  }
  Node* pw = w.node();
  Node* pg = gamma.node();
  return make_op(B, N, std::move(out), {w, gamma},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b) {
                     const double gm = pg->value[b];
                     const double* y = self.value.data() + b * N;
                     const double* g = self.grad.data() + b * N;
                     double dot = 0, ylog = 0;
                     for (std::size_t i = 0; i < N; ++i) {
                       dot += g[i] * y[i];
                       const double x = pw->value[b * N + i];
                       if (x > 0) ylog += y[i] * std::log(x);
                     }
                     if (pw->requires_grad)
                       for (std::size_t i = 0; i < N; ++i) {
                         const double x = pw->value[b * N + i];
                         pw->grad[b * N + i] += gm * std::pow(x, gm - 1.0) / sums[b] * (g[i] - dot);
                       }
                     if (pg->requires_grad) {
                       double d = 0;
                       for (std::size_t i = 0; i < N; ++i) {
                         const double x = pw->value[b * N + i];
                         if (x > 0) d += g[i] * y[i] * (std::log(x) - ylog);
                       }
                       pg->grad[b] += d;
                     }
                   }
                 },
                 "sharpen");
}

Tensor allocation_weights(const Tensor& usage) {
  const std::size_t B = usage.rows(), N = usage.cols();
  std::vector<double> out(B * N);
  std::vector<std::size_t> order(B * N);
  std::vector<double> prefix(B * N);  // product of usages before each sorted position
  for (std::size_t b = 0; b < B; ++b) {
    const double* u = usage.value().data() + b * N;
    for (std::size_t i = 0; i < N; ++i)
      if (u[i] < -1e-12 || u[i] > 1 + 1e-12) throw ArgumentError("allocation: usage outside [0, 1]");
    std::size_t* phi = order.data() + b * N;
    std::iota(phi, phi + N, std::size_t{0});
    std::stable_sort(phi, phi + N, [u](std::size_t x, std::size_t y) { return u[x] < u[y]; });
    double prod = 1.0;
    for (std::size_t j = 0; j < N; ++j) {
      prefix[b * N + j] = prod;
      out[b * N + phi[j]] = (1.0 - u[phi[j]]) * prod;
      prod *= u[phi[j]];
    }
  }
  Node* pu = usage.node();
  return make_op(B, N, std::move(out), {usage},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b) {
                     const std::size_t* phi = order.data() + b * N;
                     const double* u = pu->value.data() + b * N;
                     const double* g = self.grad.data() + b * N;
                     double suffix = 0;  // sum over later positions, excluding the current usage
                     for (std::size_t jj = N; jj-- > 0;) {
                       const std::size_t k = phi[jj];
                       pu->grad[b * N + k] += prefix[b * N + jj] * (suffix - g[k]);
                       suffix = g[k] * (1.0 - u[k]) + u[k] * suffix;
                     }
                   }
                 },
                 "allocation_weights");
}

Tensor link_update(const Tensor& links, const Tensor& w, const Tensor& p) {
  const std::size_t B = w.rows(), N = w.cols();
  if (links.rows() != B * N || links.cols() != N || p.rows() != B || p.cols() != N)
    throw ShapeError("link_update: shape mismatch");
  std::vector<double> out(B * N * N, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        const double wi = w.value()[b * N + i], wj = w.value()[b * N + j];
        out[(b * N + i) * N + j] =
            (1.0 - wi - wj) * links.value()[(b * N + i) * N + j] + wi * p.value()[b * N + j];
      }
  Node* pl = links.node();
  Node* pw = w.node();
  Node* pp = p.node();
  return make_op(B * N, N, std::move(out), {links, w, p},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t i = 0; i < N; ++i)
                       for (std::size_t j = 0; j < N; ++j) {
                         if (i == j) continue;
                         const std::size_t li = (b * N + i) * N + j;
                         const double g = self.grad[li];
                         if (g == 0) continue;
                         const double l = pl->value[li];
                         const double wi = pw->value[b * N + i], wj = pw->value[b * N + j];
                         if (pl->requires_grad) pl->grad[li] += g * (1.0 - wi - wj);
                         if (pw->requires_grad) {
                           pw->grad[b * N + i] += g * (pp->value[b * N + j] - l);
                           pw->grad[b * N + j] -= g * l;
                         }
                         if (pp->requires_grad) pp->grad[b * N + j] += g * wi;
                       }
                 },
                 "link_update");
}

Tensor batched_concat_slots(const Tensor& a, std::size_t na, const Tensor& c, std::size_t nb) {
  if (a.cols() != c.cols()) throw ShapeError("batched_concat_slots: width mismatch");
  if (na == 0 || nb == 0 || a.rows() % na != 0 || c.rows() % nb != 0 || a.rows() / na != c.rows() / nb)
    throw ShapeError("batched_concat_slots: batch mismatch");
  const std::size_t B = a.rows() / na, W = a.cols(), n = na + nb;
  std::vector<double> out(B * n * W);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(a.value().data() + b * na * W, na * W, out.data() + b * n * W);
    std::copy_n(c.value().data() + b * nb * W, nb * W, out.data() + (b * n + na) * W);
  }
  Node* pa = a.node();
  Node* pc = c.node();
  return make_op(B * n, W, std::move(out), {a, c},
                 [=](const Node& self) {
                   for (std::size_t b = 0; b < B; ++b) {
                     if (pa->requires_grad)
                       for (std::size_t k = 0; k < na * W; ++k) pa->grad[b * na * W + k] += self.grad[b * n * W + k];
                     if (pc->requires_grad)
                       for (std::size_t k = 0; k < nb * W; ++k)
                         pc->grad[b * nb * W + k] += self.grad[(b * n + na) * W + k];
                   }
                 },
                 "batched_concat_slots");
}

}  // namespace memkit::ad
