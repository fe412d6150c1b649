#include "memkit/classic/hrr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "memkit/errors.hpp"

namespace memkit::classic {

HrrTrace::HrrTrace(std::size_t dim, std::size_t copies, std::mt19937_64& rng) : dim_(dim) {
  if (dim == 0 || copies == 0) throw ArgumentError("HrrTrace: dim and copies must be positive");
  for (std::size_t s = 0; s < copies; ++s) {
    std::vector<std::size_t> p(dim);
    std::iota(p.begin(), p.end(), std::size_t{0});
    if (s > 0) std::shuffle(p.begin(), p.end(), rng);
    perms_.push_back(std::move(p));
    traces_.emplace_back(dim, std::complex<double>(0.0, 0.0));
  }
}

CVector HrrTrace::permute(const CVector& x, std::size_t s) const {
  CVector out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = x[perms_[s][i]];
  return out;
}

void HrrTrace::encode(const CVector& key, const CVector& value) {
  if (key.size() != dim_ || value.size() != dim_) throw ShapeError("HrrTrace::encode: length mismatch");
  for (std::size_t s = 0; s < copies(); ++s) {
    const CVector k = permute(key, s);
    for (std::size_t i = 0; i < dim_; ++i) traces_[s][i] += k[i] * value[i];
  }
}

HrrTrace::Decode HrrTrace::decode(const CVector& key) const {
  if (key.size() != dim_) throw ShapeError("HrrTrace::decode: length mismatch");
  Decode d;
  d.value.assign(dim_, std::complex<double>(0.0, 0.0));
  for (const auto& z : key) {
    const double a = std::abs(z);
    if (a == 0.0) throw DomainError("HrrTrace::decode: key has a zero element");
    if (std::abs(a - 1.0) > 1e-9) d.nonunit_warning = true;
  }
  const double inv_s = 1.0 / static_cast<double>(copies());
  for (std::size_t s = 0; s < copies(); ++s) {
    const CVector k = permute(key, s);
    for (std::size_t i = 0; i < dim_; ++i) d.value[i] += inv_s * traces_[s][i] / k[i];
  }
  return d;
}

CVector random_phase_vector(std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(-M_PI, M_PI);
  CVector v(dim);
  for (auto& z : v) z = std::polar(1.0, phase(rng));
  return v;
}

CVector bind(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw ShapeError("bind: length mismatch");
  CVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double complex_cosine(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw ShapeError("complex_cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += (a[i] * std::conj(b[i])).real();
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace memkit::classic
