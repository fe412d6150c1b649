#include "memkit/classic/sdm.hpp"

#include <cmath>
#include <string>

#include "memkit/errors.hpp"

namespace memkit::classic {

namespace {

void check_bits(const BitVector& v, std::size_t n, const char* what) {
  if (v.size() != n) throw ShapeError(std::string(what) + ": length mismatch");
  for (auto b : v)
    if (b > 1) throw ArgumentError(std::string(what) + ": entries must be 0 or 1");
}

}  // namespace

std::size_t hamming(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw ShapeError("hamming: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

SdmMemory::SdmMemory(std::vector<BitVector> addresses, std::size_t content_dim, std::size_t radius)
    : addresses_(std::move(addresses)), content_dim_(content_dim), radius_(radius) {
  if (addresses_.empty() || content_dim == 0) throw ArgumentError("SdmMemory: empty memory");
  const std::size_t d = addresses_.front().size();
  for (const auto& a : addresses_) check_bits(a, d, "SdmMemory");
  counters_.assign(addresses_.size() * content_dim, 0);
}

SdmMemory SdmMemory::random(std::size_t locations, std::size_t address_dim, std::size_t content_dim,
                            std::size_t radius, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<BitVector> addrs(locations, BitVector(address_dim));
  for (auto& a : addrs)
    for (auto& b : a) b = coin(rng);
  return SdmMemory(std::move(addrs), content_dim, radius);
}

std::vector<std::size_t> SdmMemory::active(const BitVector& addr) const {
  check_bits(addr, addresses_.front().size(), "SdmMemory::active");
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < addresses_.size(); ++m)
    if (hamming(addresses_[m], addr) < radius_) out.push_back(m);
  return out;
}

std::size_t SdmMemory::write(const BitVector& addr, const BitVector& content) {
  check_bits(content, content_dim_, "SdmMemory::write");
  const auto act = active(addr);
  for (auto m : act) {
    long* row = counters_.data() + m * content_dim_;
    for (std::size_t j = 0; j < content_dim_; ++j) row[j] += content[j] ? 1 : -1;
  }
  return act.size();
}

SdmMemory::Read SdmMemory::read(const BitVector& cue) const {
  const auto act = active(cue);
  Read r;
  r.sums.assign(content_dim_, 0);
  r.active = act.size();
  r.degenerate = act.empty();
  for (auto m : act) {
    const long* row = counters_.data() + m * content_dim_;
    for (std::size_t j = 0; j < content_dim_; ++j) r.sums[j] += row[j];
  }
  r.bits.resize(content_dim_);
  for (std::size_t j = 0; j < content_dim_; ++j) r.bits[j] = r.sums[j] >= 0 ? 1 : 0;
  return r;
}

double sdm_access_probability(std::size_t address_dim, std::size_t radius) {
  // sum_{k < r} C(D, k) / 2^D, accumulated in log space.
  double p = 0.0;
  const double n = static_cast<double>(address_dim);
  for (std::size_t k = 0; k < radius && k <= address_dim; ++k) {
    const double kk = static_cast<double>(k);
    p += std::exp(std::lgamma(n + 1) - std::lgamma(kk + 1) - std::lgamma(n - kk + 1) - n * std::log(2.0));
  }
  return std::min(p, 1.0);
}

std::size_t sdm_radius_for_access(std::size_t address_dim, double target_fraction) {
  if (!(target_fraction > 0.0 && target_fraction <= 1.0))
    throw ArgumentError("sdm_radius_for_access: target must lie in (0, 1]");
  std::size_t best = 0;
  double best_gap = 2.0;
  for (std::size_t r = 0; r <= address_dim + 1; ++r) {
    const double gap = std::abs(sdm_access_probability(address_dim, r) - target_fraction);
    if (gap < best_gap) {
      best_gap = gap;
      best = r;
    }
  }
  return best;
}

}  // namespace memkit::classic
