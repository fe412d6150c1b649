#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "memkit/autodiff/ops.hpp"

namespace memkit::vmed {

using ad::Tensor;

struct GaussianDiag {
  std::vector<double> mu, sigma;
  std::size_t dim() const { return mu.size(); }
};

struct MixtureLatent {
  std::vector<double> pi;
  std::vector<GaussianDiag> components;
  bool degenerate = false;  // every read weight was zero; pi is uniform
  std::size_t modes() const { return components.size(); }
};

// Mode i: mu = first half of read i, sigma = softplus(second half),
// pi_i = max(w_i) / sum_j max(w_j).
MixtureLatent build_mog_prior(const std::vector<std::vector<double>>& reads,
                              const std::vector<std::vector<double>>& read_weights);

double gaussian_kl(const GaussianDiag& f, const GaussianDiag& g);
// -log sum_i pi_i exp(-KL(f || g_i)).
double d_var(const GaussianDiag& f, const MixtureLatent& g);
std::vector<double> sample_reparameterized(const GaussianDiag& f, std::mt19937_64& rng);
double timestep_elbo_loss(const std::vector<GaussianDiag>& posteriors, const std::vector<MixtureLatent>& priors,
                          const std::vector<double>& log_liks);

double log_density(const GaussianDiag& g, const std::vector<double>& z);
double log_density(const MixtureLatent& g, const std::vector<double>& z);

struct MonteCarloEstimate {
  double mean = 0.0, std_error = 0.0;
};
// KL(f || g) estimated from samples of f.
MonteCarloEstimate monte_carlo_kl(const GaussianDiag& f, const MixtureLatent& g, std::size_t samples,
                                  std::mt19937_64& rng);

// Product of two mixtures as an unnormalised mixture: weights pi_i rho_j c_ij
// with c_ij = N(m1_i; m2_j, S1_i + S2_j), covariance (S1^-1 + S2^-1)^-1.
struct ScaledMixture {
  std::vector<double> weights;
  std::vector<GaussianDiag> components;
  double density(const std::vector<double>& z) const;
};
ScaledMixture mog_product(const MixtureLatent& g1, const MixtureLatent& g2);

struct GridSpec {
  double lo = -4, hi = 4;
  std::size_t points = 201;  // per dimension
};
struct ProductReport {
  ScaledMixture product;
  double max_abs_err = 0.0;
  std::size_t points = 0;
};
// Compares g1(z) g2(z) with the combined mixture on a grid; dim <= 2.
ProductReport mog_product_oracle(const MixtureLatent& g1, const MixtureLatent& g2, const GridSpec& grid = {});

// Batched tensor forms. Means and sigmas are B x d.
struct GaussianBatch {
  Tensor mu, sigma;
};
struct MixtureBatch {
  Tensor pi;  // B x K
  std::vector<GaussianBatch> components;
};

MixtureBatch build_mog_prior(const std::vector<Tensor>& reads, const std::vector<Tensor>& read_weights);
Tensor gaussian_kl(const GaussianBatch& f, const GaussianBatch& g);  // B x 1
Tensor d_var(const GaussianBatch& f, const MixtureBatch& g);         // B x 1
// mu + sigma * eps with eps drawn from rng.
Tensor sample_reparameterized(const GaussianBatch& f, std::mt19937_64& rng);

// Linear ramp 0 -> 1 over the first 20% of training.
double kl_annealing(std::size_t step, std::size_t total_steps);

}  // namespace memkit::vmed
