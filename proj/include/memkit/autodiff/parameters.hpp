#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "memkit/autodiff/tensor.hpp"

namespace memkit::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered, named trainable leaves. Order is registration order and is what
// checkpoints and optimizers iterate over.
class ParameterSet {
 public:
  Tensor add(const std::string& name, std::size_t rows, std::size_t cols, std::vector<double> values);
  // Uniform(-scale, scale) initialisation.
  Tensor uniform(const std::string& name, std::size_t rows, std::size_t cols, double scale,
                 std::mt19937_64& rng);
  Tensor zeros(const std::string& name, std::size_t rows, std::size_t cols);
  // Shares every tensor of other under prefix + "." + name.
  void adopt(const std::string& prefix, const ParameterSet& other);

  const std::vector<NamedTensor>& items() const { return items_; }
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> items_;
};

}  // namespace memkit::ad
