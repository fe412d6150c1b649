#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace memkit::classic {

using BitVector = std::vector<std::uint8_t>;

// Kanerva-style sparse distributed memory over binary addresses. A location
// is active when its Hamming distance to the query is strictly below r.
class SdmMemory {
 public:
  SdmMemory(std::vector<BitVector> addresses, std::size_t content_dim, std::size_t radius);
  static SdmMemory random(std::size_t locations, std::size_t address_dim, std::size_t content_dim,
                          std::size_t radius, std::mt19937_64& rng);

  std::vector<std::size_t> active(const BitVector& addr) const;
  // Counters move +1 for a 1 bit and -1 for a 0 bit. Returns the number of
  // locations touched.
  std::size_t write(const BitVector& addr, const BitVector& content);

  struct Read {
    BitVector bits;
    std::vector<long> sums;
    std::size_t active = 0;
    bool degenerate = false;  // no location in radius
  };
  // Sums counters over active locations; a sum >= 0 reads as 1.
  Read read(const BitVector& cue) const;

  std::size_t locations() const { return addresses_.size(); }
  std::size_t radius() const { return radius_; }
  const std::vector<long>& counters() const { return counters_; }

 private:
  std::vector<BitVector> addresses_;
  std::vector<long> counters_;  // locations x content_dim
  std::size_t content_dim_;
  std::size_t radius_;
};

std::size_t hamming(const BitVector& a, const BitVector& b);

// P(Binomial(D, 1/2) < r): chance a random location is active.
double sdm_access_probability(std::size_t address_dim, std::size_t radius);

// Radius whose access probability is closest to target_fraction.
std::size_t sdm_radius_for_access(std::size_t address_dim, double target_fraction);

}  // namespace memkit::classic
