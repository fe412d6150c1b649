#include "memkit/vmed/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "memkit/errors.hpp"

namespace memkit::vmed {

namespace {

double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

void check(const GaussianDiag& g) {
  if (g.mu.size() != g.sigma.size()) throw ShapeError("gaussian: mu and sigma differ in length");
  for (double s : g.sigma)
    if (!(s > 0)) throw ArgumentError("gaussian: sigma must be positive");
}

void check(const MixtureLatent& m) {
  if (m.components.empty() || m.pi.size() != m.components.size()) throw ShapeError("mixture: modes mismatch");
  for (const auto& c : m.components) check(c);
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

MixtureLatent build_mog_prior(const std::vector<std::vector<double>>& reads,
                              const std::vector<std::vector<double>>& read_weights) {
  if (reads.empty() || reads.size() != read_weights.size()) throw ShapeError("mog prior: one weight per read");
  MixtureLatent m;
  double total = 0;
  for (std::size_t i = 0; i < reads.size(); ++i) {
    const auto& r = reads[i];
    if (r.empty() || r.size() % 2) throw ShapeError("mog prior: read length must be even");
    if (r.size() != reads[0].size()) throw ShapeError("mog prior: reads differ in length");
    const std::size_t d = r.size() / 2;
    GaussianDiag g;
    g.mu.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(d));
    for (std::size_t k = d; k < r.size(); ++k) g.sigma.push_back(softplus(r[k]));
    m.components.push_back(std::move(g));
    const double mx = read_weights[i].empty() ? 0.0 : *std::max_element(read_weights[i].begin(), read_weights[i].end());
    m.pi.push_back(mx);
    total += mx;
  }
  if (total <= 0) {
    m.degenerate = true;
    std::fill(m.pi.begin(), m.pi.end(), 1.0 / static_cast<double>(m.pi.size()));
  } else {
    for (double& p : m.pi) p /= total;
  }
  return m;
}

double gaussian_kl(const GaussianDiag& f, const GaussianDiag& g) {
  check(f);
  check(g);
  if (f.dim() != g.dim()) throw ShapeError("kl: dimensions differ");
  double kl = 0;
  for (std::size_t d = 0; d < f.dim(); ++d) {
    const double dm = f.mu[d] - g.mu[d];
    kl += std::log(g.sigma[d] / f.sigma[d]) + (f.sigma[d] * f.sigma[d] + dm * dm) / (2 * g.sigma[d] * g.sigma[d]) - 0.5;
  }
  return kl;
}

double d_var(const GaussianDiag& f, const MixtureLatent& g) {
  check(g);
  if (g.modes() == 1) return gaussian_kl(f, g.components[0]);
  std::vector<double> terms;
  for (std::size_t i = 0; i < g.modes(); ++i)
    terms.push_back(std::log(g.pi[i]) - gaussian_kl(f, g.components[i]));
  return -log_sum_exp(terms);
}

std::vector<double> sample_reparameterized(const GaussianDiag& f, std::mt19937_64& rng) {
  check(f);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> z(f.dim());
  for (std::size_t d = 0; d < f.dim(); ++d) z[d] = f.mu[d] + f.sigma[d] * n(rng);
  return z;
}

double timestep_elbo_loss(const std::vector<GaussianDiag>& posteriors, const std::vector<MixtureLatent>& priors,
                          const std::vector<double>& log_liks) {
  if (posteriors.size() != priors.size() || priors.size() != log_liks.size())
    throw ShapeError("elbo: sequence lengths differ");
  double loss = 0;
  for (std::size_t t = 0; t < priors.size(); ++t) loss += d_var(posteriors[t], priors[t]) - log_liks[t];
  return loss;
}

double log_density(const GaussianDiag& g, const std::vector<double>& z) {
  if (z.size() != g.dim()) throw ShapeError("density: dimension");
  double s = 0;
  for (std::size_t d = 0; d < z.size(); ++d) {
    const double u = (z[d] - g.mu[d]) / g.sigma[d];
    s += -0.5 * u * u - std::log(g.sigma[d]) - 0.5 * std::log(2 * std::numbers::pi);
  }
  return s;
}

double log_density(const MixtureLatent& g, const std::vector<double>& z) {
  std::vector<double> terms;
  for (std::size_t i = 0; i < g.modes(); ++i) {
    if (g.pi[i] <= 0) continue;
    terms.push_back(std::log(g.pi[i]) + log_density(g.components[i], z));
  }
  return log_sum_exp(terms);
}

MonteCarloEstimate monte_carlo_kl(const GaussianDiag& f, const MixtureLatent& g, std::size_t samples,
                                  std::mt19937_64& rng) {
  check(f);
  check(g);
  if (samples < 2) throw ArgumentError("monte carlo: need at least two samples");
  double mean = 0, m2 = 0;
  for (std::size_t n = 1; n <= samples; ++n) {
    const auto z = sample_reparameterized(f, rng);
    const double x = log_density(f, z) - log_density(g, z);
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

double ScaledMixture::density(const std::vector<double>& z) const {
  double s = 0;
  for (std::size_t i = 0; i < components.size(); ++i) s += weights[i] * std::exp(log_density(components[i], z));
  return s;
}

ScaledMixture mog_product(const MixtureLatent& g1, const MixtureLatent& g2) {
  check(g1);
  check(g2);
  const std::size_t dim = g1.components[0].dim();
  ScaledMixture out;
  for (std::size_t i = 0; i < g1.modes(); ++i)
    for (std::size_t j = 0; j < g2.modes(); ++j) {
      const auto& a = g1.components[i];
      const auto& b = g2.components[j];
      if (a.dim() != dim || b.dim() != dim) throw ShapeError("mog product: dimensions differ");
      GaussianDiag c, joint;
      for (std::size_t d = 0; d < dim; ++d) {
        const double va = a.sigma[d] * a.sigma[d], vb = b.sigma[d] * b.sigma[d];
        const double vc = 1.0 / (1.0 / va + 1.0 / vb);
        c.sigma.push_back(std::sqrt(vc));
        c.mu.push_back(vc * (a.mu[d] / va + b.mu[d] / vb));
        joint.mu.push_back(b.mu[d]);
        joint.sigma.push_back(std::sqrt(va + vb));
      }
      out.weights.push_back(g1.pi[i] * g2.pi[j] * std::exp(log_density(joint, a.mu)));
      out.components.push_back(std::move(c));
    }
  return out;
}

ProductReport mog_product_oracle(const MixtureLatent& g1, const MixtureLatent& g2, const GridSpec& grid) {
  const std::size_t dim = g1.components.at(0).dim();
  if (dim == 0 || dim > 2) throw ArgumentError("mog product oracle: grid needs dimension 1 or 2");
  if (grid.points < 2 || !(grid.hi > grid.lo)) throw ArgumentError("mog product oracle: bad grid");
  ProductReport rep;
  rep.product = mog_product(g1, g2);
  auto density = [](const MixtureLatent& g, const std::vector<double>& z) {
    double s = 0;
    for (std::size_t i = 0; i < g.modes(); ++i) s += g.pi[i] * std::exp(log_density(g.components[i], z));
    return s;
  };
  const double step = (grid.hi - grid.lo) / static_cast<double>(grid.points - 1);
  const std::size_t ny = dim == 2 ? grid.points : 1;
  for (std::size_t ix = 0; ix < grid.points; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy) {
      std::vector<double> z{grid.lo + step * static_cast<double>(ix)};
      if (dim == 2) z.push_back(grid.lo + step * static_cast<double>(iy));
      const double err = std::abs(density(g1, z) * density(g2, z) - rep.product.density(z));
      rep.max_abs_err = std::max(rep.max_abs_err, err);
      ++rep.points;
    }
  return rep;
}

MixtureBatch build_mog_prior(const std::vector<Tensor>& reads, const std::vector<Tensor>& read_weights) {
  if (reads.empty() || reads.size() != read_weights.size()) throw ShapeError("mog prior: one weight per read");
  const std::size_t B = reads[0].rows(), w = reads[0].cols();
  if (w == 0 || w % 2) throw ShapeError("mog prior: read length must be even");
  MixtureBatch m;
  std::vector<Tensor> maxes;
  for (std::size_t i = 0; i < reads.size(); ++i) {
    if (reads[i].rows() != B || reads[i].cols() != w) throw ShapeError("mog prior: read shapes differ");
    m.components.push_back({ad::slice_cols(reads[i], 0, w / 2), ad::softplus(ad::slice_cols(reads[i], w / 2, w / 2))});
    maxes.push_back(ad::row_max(read_weights[i]));
  }
  Tensor mx = ad::concat_cols(maxes);
  const std::size_t K = reads.size();
  std::vector<double> totals(B, 0.0);
  bool degenerate = false;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t k = 0; k < K; ++k) totals[b] += mx.at(b, k);
    degenerate = degenerate || totals[b] <= 0;
  }
  if (degenerate) {
    // Rows with no attention mass fall back to uniform weights.
    std::vector<double> fix(B * K, 0.0), mask(B * K, 1.0);
    for (std::size_t b = 0; b < B; ++b)
      if (totals[b] <= 0)
        for (std::size_t k = 0; k < K; ++k) fix[b * K + k] = 1.0, mask[b * K + k] = 0.0;
    mx = ad::add(ad::mul(mx, Tensor::constant(B, K, mask)), Tensor::constant(B, K, fix));
  }
  m.pi = ad::div(mx, ad::sum_cols(mx));
  return m;
}

Tensor gaussian_kl(const GaussianBatch& f, const GaussianBatch& g) {
  Tensor vf = ad::square(f.sigma), vg = ad::square(g.sigma);
  Tensor dm = ad::sub(f.mu, g.mu);
  Tensor quad = ad::div(ad::add(vf, ad::square(dm)), ad::scale(vg, 2.0));
  Tensor terms = ad::add_scalar(ad::add(ad::sub(ad::log(g.sigma), ad::log(f.sigma)), quad), -0.5);
  return ad::sum_cols(terms);
}

Tensor d_var(const GaussianBatch& f, const MixtureBatch& g) {
  const std::size_t K = g.components.size();
  if (K == 1) return gaussian_kl(f, g.components[0]);
  std::vector<Tensor> kls;
  for (const auto& c : g.components) kls.push_back(gaussian_kl(f, c));
  // log pi - KL, stabilised by its row maximum.
  Tensor logits = ad::sub(ad::log(g.pi), ad::concat_cols(kls));
  Tensor m = ad::row_max(logits);
  Tensor lse = ad::add(m, ad::log(ad::sum_cols(ad::exp(ad::sub(logits, m)))));
  return ad::neg(lse);
}

Tensor sample_reparameterized(const GaussianBatch& f, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> eps(f.mu.size());
  for (auto& e : eps) e = n(rng);
  return ad::add(f.mu, ad::mul(f.sigma, Tensor::constant(f.mu.rows(), f.mu.cols(), eps)));
}

double kl_annealing(std::size_t step, std::size_t total_steps) {
  const double ramp = 0.2 * static_cast<double>(total_steps);
  if (ramp <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(step) / ramp);
}

}  // namespace memkit::vmed
