#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace deephazard {

enum class Activation { Atan, Elu, LeakyRelu, LogLog, Relu, Selu, Tanh };

// Elu takes its alpha from configuration; the others ignore it.
struct ActivationSpec {
  Activation kind = Activation::Relu;
  double alpha = 1.0;
};

namespace detail {
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kLeakySlope = 0.01;
}  // namespace detail

inline double activate(const ActivationSpec& a, double x) {
  switch (a.kind) {
    case Activation::Atan:      return std::atan(x);
    case Activation::Elu:       return x > 0.0 ? x : a.alpha * std::expm1(x);
    case Activation::LeakyRelu: return x > 0.0 ? x : detail::kLeakySlope * x;
    case Activation::LogLog:    return 1.0 - std::exp(-std::exp(x));
    case Activation::Relu:      return x > 0.0 ? x : 0.0;
    case Activation::Selu:
      return x > 0.0 ? detail::kSeluLambda * x
                     : detail::kSeluLambda * detail::kSeluAlpha * std::expm1(x);
    case Activation::Tanh:      return std::tanh(x);
  }
  throw std::logic_error("activate: unknown kind");
}

// Derivative at the Relu/LeakyRelu kink is taken as 0.
inline double activate_deriv(const ActivationSpec& a, double x) {
  switch (a.kind) {
    case Activation::Atan:      return 1.0 / (1.0 + x * x);
    case Activation::Elu:       return x > 0.0 ? 1.0 : a.alpha * std::exp(x);
    case Activation::LeakyRelu: return x > 0.0 ? 1.0 : (x < 0.0 ? detail::kLeakySlope : 0.0);
    case Activation::LogLog:    return std::exp(x - std::exp(x));
    case Activation::Relu:      return x > 0.0 ? 1.0 : 0.0;
    case Activation::Selu:
      return x > 0.0 ? detail::kSeluLambda
                     : detail::kSeluLambda * detail::kSeluAlpha * std::exp(x);
    case Activation::Tanh: {
      const double th = std::tanh(x);
      return 1.0 - th * th;
    }
  }
  throw std::logic_error("activate_deriv: unknown kind");
}

inline std::string activation_name(Activation k) {
  switch (k) {
    case Activation::Atan:      return "atan";
    case Activation::Elu:       return "elu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::LogLog:    return "loglog";
    case Activation::Relu:      return "relu";
    case Activation::Selu:      return "selu";
    case Activation::Tanh:      return "tanh";
  }
  throw std::logic_error("activation_name: unknown kind");
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "atan") return Activation::Atan;
  if (s == "elu") return Activation::Elu;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "loglog") return Activation::LogLog;
  if (s == "relu") return Activation::Relu;
  if (s == "selu") return Activation::Selu;
  if (s == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

}  // namespace deephazard
