#pragma once

#include <complex>
#include <cstddef>
#include <random>
#include <vector>

namespace memkit::classic {

using CVector = std::vector<std::complex<double>>;

// Element-wise complex binding trace with S permuted copies of every key.
// Copy 0 uses the identity permutation.
class HrrTrace {
 public:
  HrrTrace(std::size_t dim, std::size_t copies, std::mt19937_64& rng);

  void encode(const CVector& key, const CVector& value);

  struct Decode {
    CVector value;
    bool nonunit_warning = false;  // some key element has modulus != 1
  };
  // Averages inverse-key decodes over the copies.
  Decode decode(const CVector& key) const;

  std::size_t dim() const { return dim_; }
  std::size_t copies() const { return perms_.size(); }
  const CVector& trace(std::size_t s) const { return traces_.at(s); }

 private:
  CVector permute(const CVector& x, std::size_t s) const;

  std::size_t dim_;
  std::vector<std::vector<std::size_t>> perms_;
  std::vector<CVector> traces_;
};

CVector random_phase_vector(std::size_t dim, std::mt19937_64& rng);
CVector bind(const CVector& a, const CVector& b);

// Re<a, b> / (|a| |b|).
double complex_cosine(const CVector& a, const CVector& b);

}  // namespace memkit::classic
