#include "memkit/controllers/cells.hpp"

#include <cmath>

#include "memkit/errors.hpp"

namespace memkit::ctrl {

namespace {

void check_input(const Tensor& x, std::size_t width, const char* what) {
  if (!x.defined() || x.cols() != width)
    throw ShapeError(std::string(what) + ": expected width " + std::to_string(width));
}

double sig(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Fused LSTM pointwise stage: pre B x 4H and c_prev B x H -> [h | c] B x 2H.
Tensor lstm_pointwise(const Tensor& pre, const Tensor& c_prev) {
  const std::size_t B = pre.rows(), H = c_prev.cols();
  if (pre.cols() != 4 * H || c_prev.rows() != B) throw ShapeError("lstm: state shape mismatch");
  std::vector<double> out(B * 2 * H), gates(B * 4 * H), tc(B * H);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j = 0; j < H; ++j) {
      const double* p = pre.value().data() + b * 4 * H;
      double* g = gates.data() + b * 4 * H;
      g[j] = sig(p[j]);
      g[H + j] = sig(p[H + j]);
      g[2 * H + j] = sig(p[2 * H + j]);
      g[3 * H + j] = std::tanh(p[3 * H + j]);
      const double c = g[j] * c_prev.value()[b * H + j] + g[H + j] * g[3 * H + j];
      tc[b * H + j] = std::tanh(c);
      out[b * 2 * H + j] = g[2 * H + j] * tc[b * H + j];
      out[b * 2 * H + H + j] = c;
    }
  ad::Node* pp = pre.node();
  ad::Node* pc = c_prev.node();
  return ad::make_op(B, 2 * H, std::move(out), {pre, c_prev},
                     [=](const ad::Node& self) {
                       for (std::size_t b = 0; b < B; ++b)
                         for (std::size_t j = 0; j < H; ++j) {
                           const double* g = gates.data() + b * 4 * H;
                           const double gh = self.grad[b * 2 * H + j];
                           const double t = tc[b * H + j];
                           const double dc = self.grad[b * 2 * H + H + j] + gh * g[2 * H + j] * (1 - t * t);
                           const double cp = pc->value[b * H + j];
                           if (pp->requires_grad) {
                             double* d = pp->grad.data() + b * 4 * H;
                             d[j] += dc * cp * g[j] * (1 - g[j]);
                             d[H + j] += dc * g[3 * H + j] * g[H + j] * (1 - g[H + j]);
                             d[2 * H + j] += gh * t * g[2 * H + j] * (1 - g[2 * H + j]);
                             d[3 * H + j] += dc * g[H + j] * (1 - g[3 * H + j] * g[3 * H + j]);
                           }
                           if (pc->requires_grad) pc->grad[b * H + j] += dc * g[j];
                         }
                     },
                     "lstm_pointwise");
}

}  // namespace

RnnCell::RnnCell(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t hid,
                 std::size_t out, std::mt19937_64& rng, ad::Activation act, bool softmax_out)
    : input(in), hidden(hid), output(out), f(act), softmax_output(softmax_out) {
  W = params.uniform(prefix + ".W", hid, hid, kInitScale, rng);
  U = params.uniform(prefix + ".U", in, hid, kInitScale, rng);
  b = params.zeros(prefix + ".b", 1, hid);
  V = params.uniform(prefix + ".V", hid, out, kInitScale, rng);
  c = params.zeros(prefix + ".c", 1, out);
}

RnnOutput elman_step(const RnnCell& cell, const Tensor& x, const Tensor& h_prev) {
  check_input(x, cell.input, "elman_step input");
  check_input(h_prev, cell.hidden, "elman_step state");
  Tensor pre = ad::add(ad::add(ad::matmul(h_prev, cell.W), ad::matmul(x, cell.U)), cell.b);
  Tensor h = ad::apply_activation(cell.f, pre);
  Tensor logits = ad::add(ad::matmul(h, cell.V), cell.c);
  return {h, cell.softmax_output ? ad::softmax_rows(logits) : logits};
}

LstmCell::LstmCell(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t hid,
                   std::mt19937_64& rng)
    : input(in), hidden(hid) {
  W = params.uniform(prefix + ".W", 4 * hid, hid, kInitScale, rng);
  U = params.uniform(prefix + ".U", 4 * hid, in, kInitScale, rng);
  b = params.zeros(prefix + ".b", 1, 4 * hid);
  set_gate_bias(Gate::Forget, 1.0);
}

void LstmCell::set_gate_bias(Gate g, double value) {
  auto& v = b.mutable_value();
  const std::size_t off = static_cast<std::size_t>(g) * hidden;
  for (std::size_t j = 0; j < hidden; ++j) v[off + j] = value;
}

LstmState lstm_zero_state(const LstmCell& cell, std::size_t batch) {
  return {Tensor::constant(batch, cell.hidden), Tensor::constant(batch, cell.hidden)};
}

LstmState lstm_step(const LstmCell& cell, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev) {
  check_input(x, cell.input, "lstm_step input");
  check_input(h_prev, cell.hidden, "lstm_step hidden state");
  check_input(c_prev, cell.hidden, "lstm_step cell state");
  if (x.rows() != h_prev.rows()) throw ShapeError("lstm_step: batch mismatch");
  Tensor pre = ad::add(ad::linear(x, cell.U, cell.b), ad::linear(h_prev, cell.W, Tensor()));
  Tensor hc = lstm_pointwise(pre, c_prev);
  return {ad::slice_cols(hc, 0, cell.hidden), ad::slice_cols(hc, cell.hidden, cell.hidden)};
}

LstmState lstm_step(const LstmCell& cell, const Tensor& x, const LstmState& prev) {
  return lstm_step(cell, x, prev.h, prev.c);
}

GruCell::GruCell(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t hid,
                 std::mt19937_64& rng)
    : input(in), hidden(hid) {
  W_r = params.uniform(prefix + ".W_r", hid, in, kInitScale, rng);
  U_r = params.uniform(prefix + ".U_r", hid, hid, kInitScale, rng);
  b_r = params.zeros(prefix + ".b_r", 1, hid);
  W_z = params.uniform(prefix + ".W_z", hid, in, kInitScale, rng);
  U_z = params.uniform(prefix + ".U_z", hid, hid, kInitScale, rng);
  b_z = params.zeros(prefix + ".b_z", 1, hid);
  W_h = params.uniform(prefix + ".W_h", hid, in, kInitScale, rng);
  U_h = params.uniform(prefix + ".U_h", hid, hid, kInitScale, rng);
  b_h = params.zeros(prefix + ".b_h", 1, hid);
}

Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev) {
  check_input(x, cell.input, "gru_step input");
  check_input(h_prev, cell.hidden, "gru_step state");
  Tensor none;
  Tensor r = ad::sigmoid(ad::add(ad::linear(x, cell.W_r, cell.b_r), ad::linear(h_prev, cell.U_r, none)));
  Tensor z = ad::sigmoid(ad::add(ad::linear(x, cell.W_z, cell.b_z), ad::linear(h_prev, cell.U_z, none)));
  Tensor cand =
      ad::tanh(ad::add(ad::linear(x, cell.W_h, cell.b_h), ad::linear(ad::mul(r, h_prev), cell.U_h, none)));
  return ad::add(ad::mul(z, h_prev), ad::mul(ad::one_minus(z), cand));
}

Dense::Dense(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
             std::mt19937_64& rng, bool bias)
    : input(in), output(out) {
  W = params.uniform(prefix + ".W", out, in, kInitScale, rng);
  if (bias) b = params.zeros(prefix + ".b", 1, out);
}

}  // namespace memkit::ctrl
