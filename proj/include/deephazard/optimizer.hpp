#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "deephazard/network.hpp"

namespace deephazard {

// Flat views over a network's parameters and a matching gradient, block by
// block. Blocks alternate weights/biases so penalties can skip the biases.
struct ParamBlock {
  double* value = nullptr;
  const double* grad = nullptr;
  std::size_t size = 0;
  bool is_weight = false;
};

inline std::vector<ParamBlock> param_blocks(IntervalNetwork& net, const NetworkGrad& g) {
  std::vector<ParamBlock> blocks;
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    blocks.push_back({net.hidden[l].weights.data.data(), g.weights[l].data.data(),
                      net.hidden[l].weights.data.size(), true});
    blocks.push_back({net.hidden[l].bias.data(), g.bias[l].data(),
                      net.hidden[l].bias.size(), false});
  }
  blocks.push_back({net.out_weights.data(), g.out_weights.data(), net.out_weights.size(), true});
  blocks.push_back({&net.out_bias, &g.out_bias, 1, false});
  return blocks;
}

enum class OptimizerKind { Adam, Sgd };

// Plain SGD, or Adam with the standard bias-corrected update
// (beta1=0.9, beta2=0.999, eps=1e-8).
class Optimizer {
public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("optimizer: learning rate must be positive");
  }

  void step(std::vector<ParamBlock>& blocks) {
    if (m_.empty() && kind_ == OptimizerKind::Adam) {
      m_.resize(blocks.size());
      v_.resize(blocks.size());
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        m_[b].assign(blocks[b].size, 0.0);
        v_[b].assign(blocks[b].size, 0.0);
      }
    }
    for (auto& blk : blocks)
      for (std::size_t k = 0; k < blk.size; ++k)
        if (!std::isfinite(blk.grad[k]))
          throw std::runtime_error("optimizer: non-finite gradient (training diverged)");

    if (kind_ == OptimizerKind::Sgd) {
      for (auto& blk : blocks)
        for (std::size_t k = 0; k < blk.size; ++k) blk.value[k] -= lr_ * blk.grad[k];
      return;
    }
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto& blk = blocks[b];
      for (std::size_t k = 0; k < blk.size; ++k) {
        const double gk = blk.grad[k];
        m_[b][k] = b1 * m_[b][k] + (1.0 - b1) * gk;
        v_[b][k] = b2 * v_[b][k] + (1.0 - b2) * gk * gk;
        const double mhat = m_[b][k] / c1;
        const double vhat = v_[b][k] / c2;
        blk.value[k] -= lr_ * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

private:
  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// lambda * ||theta||_p over the weight blocks only (biases are not penalized).
// p=2 is the squared norm lambda*sum(theta^2); p=1 uses subgradient sign(0)=0.
struct PenaltySpec {
  double lambda = 0.0;
  int p = 2;
};

inline double penalty_value(const PenaltySpec& spec, const IntervalNetwork& net) {
  if (spec.lambda == 0.0) return 0.0;
  double acc = 0.0;
  auto add = [&](const std::vector<double>& w) {
    for (double v : w) acc += spec.p == 2 ? v * v : std::abs(v);
  };
  for (const auto& layer : net.hidden) add(layer.weights.data);
  add(net.out_weights);
  return spec.lambda * acc;
}

// Adds the penalty gradient into `g` (weights only).
inline void add_penalty_grad(const PenaltySpec& spec, const IntervalNetwork& net, NetworkGrad& g) {
  if (spec.lambda == 0.0) return;
  auto add = [&](const std::vector<double>& w, std::vector<double>& gw) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (spec.p == 2)
        gw[k] += 2.0 * spec.lambda * w[k];
      else if (w[k] != 0.0)
        gw[k] += spec.lambda * (w[k] > 0.0 ? 1.0 : -1.0);
    }
  };
  for (std::size_t l = 0; l < net.hidden.size(); ++l)
    add(net.hidden[l].weights.data, g.weights[l].data);
  add(net.out_weights, g.out_weights);
}

}  // namespace deephazard
