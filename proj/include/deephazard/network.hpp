#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "deephazard/activation.hpp"
#include "deephazard/rng.hpp"

namespace deephazard {

// Row-major matrix, just enough for the dense layers here.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct DenseLayer {
  Matrix weights;            // (out x in)
  std::vector<double> bias;  // out
  ActivationSpec activation;
  double dropout = 0.0;      // in [0, 1)
};

// One interval's risk network: dense hidden layers, then a plain weighted
// combination of the last hidden layer (no output activation).
struct IntervalNetwork {
  std::size_t input_dim = 0;
  std::vector<DenseLayer> hidden;
  std::vector<double> out_weights;
  double out_bias = 0.0;

  std::size_t last_width() const {
    return hidden.empty() ? input_dim : hidden.back().bias.size();
  }
};

// He-normal: N(0, 2/fan_in) entries drawn row-major; biases stay zero.
inline Matrix init_he_normal(std::size_t out, std::size_t in, Rng& rng) {
  if (in == 0) throw std::invalid_argument("init_he_normal: fan_in must be >= 1");
  Matrix w(out, in);
  const double sd = std::sqrt(2.0 / static_cast<double>(in));
  for (auto& v : w.data) v = rng.normal(0.0, sd);
  return w;
}

inline IntervalNetwork make_network(std::size_t input_dim, const std::vector<std::size_t>& widths,
                                    const std::vector<ActivationSpec>& activations,
                                    const std::vector<double>& dropout, Rng& rng) {
  if (activations.size() != widths.size() || dropout.size() != widths.size())
    throw std::invalid_argument("make_network: per-layer spec lengths must match widths");
  IntervalNetwork net;
  net.input_dim = input_dim;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    if (widths[l] == 0) throw std::invalid_argument("make_network: zero-width layer");
    if (dropout[l] < 0.0 || dropout[l] >= 1.0)
      throw std::invalid_argument("make_network: dropout rate must lie in [0,1)");
    DenseLayer layer;
    layer.weights = init_he_normal(widths[l], in, rng);
    layer.bias.assign(widths[l], 0.0);
    layer.activation = activations[l];
    layer.dropout = dropout[l];
    net.hidden.push_back(std::move(layer));
    in = widths[l];
  }
  Matrix wout = init_he_normal(1, in, rng);
  net.out_weights = std::move(wout.data);
  net.out_bias = 0.0;
  return net;
}

// Cached intermediates from one batched forward pass, enough to replay the
// exact gradient (including the dropout masks as they were applied).
struct ForwardTape {
  Matrix input;
  std::vector<Matrix> pre;      // per layer: pre-activation
  std::vector<Matrix> post;     // per layer: activation output, mask applied
  std::vector<Matrix> mask;     // per layer: empty when no dropout
};

enum class ForwardMode { Train, Eval };

// Batched forward pass; rows of `input` are records. Train mode applies
// inverted dropout (kept units scaled by 1/(1-rate)), so eval mode needs no
// rescaling and is mask-free.
inline std::vector<double> forward(const IntervalNetwork& net, const Matrix& input,
                                   ForwardMode mode, Rng* rng, ForwardTape* tape) {
  if (input.cols != net.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");
  if (mode == ForwardMode::Train && rng == nullptr)
    throw std::invalid_argument("forward: train mode needs a random stream");

  const std::size_t n = input.rows;
  if (tape) {
    tape->input = input;
    tape->pre.clear();
    tape->post.clear();
    tape->mask.clear();
  }
  Matrix act = input;
  for (const auto& layer : net.hidden) {
    const std::size_t out = layer.bias.size();
    Matrix z(n, out);
    for (std::size_t r = 0; r < n; ++r) {
      const double* in_row = &act.data[r * act.cols];
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = &layer.weights.data[o * layer.weights.cols];
        double s = layer.bias[o];
        for (std::size_t c = 0; c < act.cols; ++c) s += w[c] * in_row[c];
        z.at(r, o) = s;
      }
    }
    Matrix a(n, out);
    for (std::size_t k = 0; k < z.data.size(); ++k)
      a.data[k] = activate(layer.activation, z.data[k]);
    Matrix m;
    if (mode == ForwardMode::Train && layer.dropout > 0.0) {
      m = Matrix(n, out);
      const double keep_scale = 1.0 / (1.0 - layer.dropout);
      for (std::size_t k = 0; k < m.data.size(); ++k)
        m.data[k] = rng->uniform() >= layer.dropout ? keep_scale : 0.0;
      for (std::size_t k = 0; k < a.data.size(); ++k) a.data[k] *= m.data[k];
    }
    if (tape) {
      tape->pre.push_back(z);
      tape->post.push_back(a);
      tape->mask.push_back(std::move(m));
    }
    act = std::move(a);
  }

  std::vector<double> risk(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* in_row = &act.data[r * act.cols];
    double s = net.out_bias;
    for (std::size_t c = 0; c < act.cols; ++c) s += net.out_weights[c] * in_row[c];
    risk[r] = s;
  }
  return risk;
}

inline std::vector<double> forward_eval(const IntervalNetwork& net, const Matrix& input) {
  return forward(net, input, ForwardMode::Eval, nullptr, nullptr);
}

// Gradients shaped like the network parameters.
struct NetworkGrad {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
  std::vector<double> out_weights;
  double out_bias = 0.0;
};

// Reverse-mode pass: `upstream` holds dLoss/dRisk per record of the taped batch.
inline NetworkGrad backward(const IntervalNetwork& net, const ForwardTape& tape,
                            const std::vector<double>& upstream) {
  const std::size_t n = tape.input.rows;
  if (upstream.size() != n) throw std::invalid_argument("backward: upstream size mismatch");
  if (tape.pre.size() != net.hidden.size())
    throw std::invalid_argument("backward: tape does not match network");

  NetworkGrad g;
  g.weights.resize(net.hidden.size());
  g.bias.resize(net.hidden.size());

  const Matrix& last = net.hidden.empty() ? tape.input : tape.post.back();
  g.out_weights.assign(last.cols, 0.0);
  g.out_bias = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    g.out_bias += upstream[r];
    const double* row = &last.data[r * last.cols];
    for (std::size_t c = 0; c < last.cols; ++c) g.out_weights[c] += upstream[r] * row[c];
  }

  // d(post of last hidden layer)
  Matrix d(n, last.cols);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < last.cols; ++c)
      d.at(r, c) = upstream[r] * net.out_weights[c];

  for (std::size_t li = net.hidden.size(); li-- > 0;) {
    const auto& layer = net.hidden[li];
    const Matrix& z = tape.pre[li];
    const Matrix& m = tape.mask[li];
    Matrix dz(n, z.cols);
    for (std::size_t k = 0; k < dz.data.size(); ++k) {
      double v = d.data[k];
      if (!m.data.empty()) v *= m.data[k];
      dz.data[k] = v * activate_deriv(layer.activation, z.data[k]);
    }
    const Matrix& prev = li == 0 ? tape.input : tape.post[li - 1];
    Matrix gw(z.cols, prev.cols);
    std::vector<double> gb(z.cols, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const double* prow = &prev.data[r * prev.cols];
      for (std::size_t o = 0; o < z.cols; ++o) {
        const double dval = dz.at(r, o);
        gb[o] += dval;
        double* grow = &gw.data[o * gw.cols];
        for (std::size_t c = 0; c < prev.cols; ++c) grow[c] += dval * prow[c];
      }
    }
    g.weights[li] = std::move(gw);
    g.bias[li] = std::move(gb);
    if (li > 0) {
      Matrix dprev(n, prev.cols);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < z.cols; ++o) {
          const double dval = dz.at(r, o);
          if (dval == 0.0) continue;
          const double* w = &layer.weights.data[o * layer.weights.cols];
          double* drow = &dprev.data[r * dprev.cols];
          for (std::size_t c = 0; c < prev.cols; ++c) drow[c] += dval * w[c];
        }
      d = std::move(dprev);
    }
  }
  return g;
}

}  // namespace deephazard
