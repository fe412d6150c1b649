#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "memkit/autodiff/ops.hpp"
#include "memkit/autodiff/parameters.hpp"

namespace memkit::ctrl {

using ad::Tensor;

inline constexpr double kInitScale = 0.1;

// Elman cell in row convention: h = f(h_prev W + x U + b), o = g(h V + c).
struct RnnCell {
  RnnCell() = default;
  RnnCell(ad::ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
          std::size_t output, std::mt19937_64& rng, ad::Activation f = ad::Activation::Tanh,
          bool softmax_output = true);

  std::size_t input = 0, hidden = 0, output = 0;
  Tensor W, U, b, V, c;
  ad::Activation f = ad::Activation::Tanh;
  bool softmax_output = true;
};

struct RnnOutput {
  Tensor h, o;
};

RnnOutput elman_step(const RnnCell& cell, const Tensor& x, const Tensor& h_prev);

enum class Gate { Forget = 0, Input = 1, Output = 2, Candidate = 3 };

// LSTM with the four gate blocks fused in gate order forget, input, output,
// candidate: W is 4H x H (acts on h), U is 4H x in (acts on x), b is 1 x 4H.
struct LstmCell {
  LstmCell() = default;
  LstmCell(ad::ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
           std::mt19937_64& rng);

  std::size_t input = 0, hidden = 0;
  Tensor W, U, b;

  void set_gate_bias(Gate g, double value);
};

struct LstmState {
  Tensor h, c;
};

LstmState lstm_zero_state(const LstmCell& cell, std::size_t batch);
LstmState lstm_step(const LstmCell& cell, const Tensor& x, const LstmState& prev);
// Same update with the recurrent input h replaced, cell state kept.
LstmState lstm_step(const LstmCell& cell, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev);

// Gates r, z act as sigma(x W + h U + b); candidate tanh(x W_h + (r*h) U_h + b_h),
// all stored out x in and applied through linear().
struct GruCell {
  GruCell() = default;
  GruCell(ad::ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
          std::mt19937_64& rng);

  std::size_t input = 0, hidden = 0;
  Tensor W_r, U_r, b_r, W_z, U_z, b_z, W_h, U_h, b_h;
};

Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev);

// Single dense layer, out x in weights.
struct Dense {
  Dense() = default;
  Dense(ad::ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t output,
        std::mt19937_64& rng, bool bias = true);
  std::size_t input = 0, output = 0;
  Tensor W, b;
  Tensor operator()(const Tensor& x) const { return ad::linear(x, W, b); }
};

}  // namespace memkit::ctrl
