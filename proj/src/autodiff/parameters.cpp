#include "memkit/autodiff/parameters.hpp"

#include "memkit/errors.hpp"

namespace memkit::ad {

Tensor ParameterSet::add(const std::string& name, std::size_t rows, std::size_t cols,
                         std::vector<double> values) {
  if (contains(name)) throw ArgumentError("duplicate parameter name: " + name);
  Tensor t = Tensor::leaf(rows, cols, std::move(values));
  items_.push_back({name, t});
  return t;
}

Tensor ParameterSet::uniform(const std::string& name, std::size_t rows, std::size_t cols, double scale,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return add(name, rows, cols, std::move(v));
}

Tensor ParameterSet::zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, rows, cols, std::vector<double>(rows * cols, 0.0));
}

void ParameterSet::adopt(const std::string& prefix, const ParameterSet& other) {
  for (const auto& it : other.items()) {
    const std::string name = prefix + "." + it.name;
    if (contains(name)) throw ArgumentError("duplicate parameter name: " + name);
    items_.push_back({name, it.tensor});
  }
}

Tensor ParameterSet::get(const std::string& name) const {
  for (auto& it : items_)
    if (it.name == name) return it.tensor;
  throw ArgumentError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (auto& it : items_)
    if (it.name == name) return true;
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (auto& it : items_) n += it.tensor.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& it : items_) it.tensor.mutable_grad().assign(it.tensor.size(), 0.0);
}

}  // namespace memkit::ad
