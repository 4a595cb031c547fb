// Copyright 2026 The QuadMech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fully connected models f(x, θ) over a flat parameter vector.
//
// Packing is layer-major; within a layer the weight matrix (out x in,
// row-major) precedes the bias vector. A spec with no hidden layers is the
// linear model f(x) = W x + b. The activation applies to hidden layers only;
// the output layer is affine. The ReLU derivative at exactly 0 is taken as 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"

namespace quadmech {

enum class Activation { Relu, Tanh, Identity };

inline std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  fail(ErrorCode::ConfigInvalid, "unknown activation '" + std::string(name) + "'");
}

struct ModelSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::Relu;

  // input, hidden..., output
  std::vector<std::size_t> layer_widths() const {
    std::vector<std::size_t> w{input_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(output_dim);
    return w;
  }

  std::size_t param_count() const {
    const auto w = layer_widths();
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) p += (w[l] + 1) * w[l + 1];
    return p;
  }

  void validate() const {
    require(input_dim >= 1 && output_dim >= 1, ErrorCode::InvalidInputs,
            "model dims must be >= 1");
    for (std::size_t h : hidden)
      require(h >= 1, ErrorCode::InvalidInputs, "hidden widths must be >= 1");
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// θ together with the spec that defines its layout.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(ModelSpec spec, Vector values)
      : spec_(std::move(spec)), values_(std::move(values)) {
    spec_.validate();
    require(values_.size() == spec_.param_count(), ErrorCode::DimensionMismatch,
            "ParamVector has " + std::to_string(values_.size()) + " values, spec needs " +
                std::to_string(spec_.param_count()));
  }

  static ParamVector zeros(const ModelSpec& spec) {
    return ParamVector(spec, Vector(spec.param_count(), 0.0));
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  ModelSpec spec_;
  Vector values_;
};

// Evaluator with reusable scratch buffers. forward() must precede backward()
// or tangent() for the same (θ, x). One instance per thread.
class Network {
 public:
  explicit Network(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const auto w = spec_.layer_widths();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      Layer layer{w[l], w[l + 1], offset, offset + w[l] * w[l + 1]};
      offset = layer.b_offset + layer.out;
      layers_.push_back(layer);
    }
    param_count_ = offset;
    act_.resize(layers_.size() + 1);
    pre_.resize(layers_.size());
    act_[0].resize(spec_.input_dim);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      pre_[l].resize(layers_[l].out);
      act_[l + 1].resize(layers_[l].out);
    }
    delta_ = pre_;
    dact_ = act_;
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t param_count() const noexcept { return param_count_; }
  std::size_t output_dim() const noexcept { return spec_.output_dim; }

  std::span<const double> forward(std::span<const double> theta,
                                  std::span<const double> x) {
    check_theta(theta);
    require(x.size() == spec_.input_dim, ErrorCode::DimensionMismatch,
            "input has length " + std::to_string(x.size()) + ", model expects " +
                std::to_string(spec_.input_dim));
    std::copy(x.begin(), x.end(), act_[0].begin());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& L = layers_[l];
      const double* w = theta.data() + L.w_offset;
      const double* b = theta.data() + L.b_offset;
      const double* a = act_[l].data();
      for (std::size_t i = 0; i < L.out; ++i) {
        double s = b[i];
        const double* wi = w + i * L.in;
        for (std::size_t j = 0; j < L.in; ++j) s += wi[j] * a[j];
        pre_[l][i] = s;
        act_[l + 1][i] = is_hidden(l) ? activate(s) : s;
      }
    }
    return act_.back();
  }

  // grad += scale * Jᵀ w for the last forward() point.
  void backward(std::span<const double> theta, std::span<const double> w,
                std::span<double> grad, double scale = 1.0) {
    require(w.size() == spec_.output_dim, ErrorCode::DimensionMismatch,
            "vjp weight length");
    require(grad.size() == param_count_, ErrorCode::DimensionMismatch,
            "gradient buffer length");
    std::copy(w.begin(), w.end(), delta_.back().begin());
    for (std::size_t ll = layers_.size(); ll-- > 0;) {
      const Layer& L = layers_[ll];
      const double* a = act_[ll].data();
      const Vector& d = delta_[ll];
      double* gw = grad.data() + L.w_offset;
      double* gb = grad.data() + L.b_offset;
      for (std::size_t i = 0; i < L.out; ++i) {
        const double di = scale * d[i];
        if (di == 0.0) continue;
        double* gwi = gw + i * L.in;
        for (std::size_t j = 0; j < L.in; ++j) gwi[j] += di * a[j];
        gb[i] += di;
      }
      if (ll == 0) break;
      Vector& prev = delta_[ll - 1];
      std::fill(prev.begin(), prev.end(), 0.0);
      const double* wt = theta.data() + L.w_offset;
      for (std::size_t i = 0; i < L.out; ++i) {
        const double di = d[i];
        if (di == 0.0) continue;
        const double* wi = wt + i * L.in;
        for (std::size_t j = 0; j < L.in; ++j) prev[j] += wi[j] * di;
      }
      for (std::size_t j = 0; j < prev.size(); ++j) prev[j] *= derivative(pre_[ll - 1][j]);
    }
  }

  // J v for the last forward() point (forward-mode sweep).
  std::span<const double> tangent(std::span<const double> theta,
                                  std::span<const double> v) {
    require(v.size() == param_count_, ErrorCode::DimensionMismatch,
            "jvp direction has length " + std::to_string(v.size()) + ", expected " +
                std::to_string(param_count_));
    std::fill(dact_[0].begin(), dact_[0].end(), 0.0);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& L = layers_[l];
      const double* w = theta.data() + L.w_offset;
      const double* dw = v.data() + L.w_offset;
      const double* db = v.data() + L.b_offset;
      const double* a = act_[l].data();
      const double* da = dact_[l].data();
      for (std::size_t i = 0; i < L.out; ++i) {
        double s = db[i];
        const double* dwi = dw + i * L.in;
        for (std::size_t j = 0; j < L.in; ++j) s += dwi[j] * a[j];
        if (l > 0) {
          const double* wi = w + i * L.in;
          for (std::size_t j = 0; j < L.in; ++j) s += wi[j] * da[j];
        }
        dact_[l + 1][i] = is_hidden(l) ? derivative(pre_[l][i]) * s : s;
      }
    }
    return dact_.back();
  }

  // Smallest |pre-activation| over hidden units at the last forward() point.
  double min_abs_preactivation() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l)
      for (double z : pre_[l]) m = std::min(m, std::abs(z));
    return m;
  }

 private:
  struct Layer {
    std::size_t in, out, w_offset, b_offset;
  };

  bool is_hidden(std::size_t l) const { return l + 1 < layers_.size(); }

  double activate(double z) const {
    switch (spec_.activation) {
      case Activation::Relu: return z > 0.0 ? z : 0.0;
      case Activation::Tanh: return std::tanh(z);
      case Activation::Identity: return z;
    }
    return z;
  }

  double derivative(double z) const {
    switch (spec_.activation) {
      case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
      case Activation::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
      }
      case Activation::Identity: return 1.0;
    }
    return 1.0;
  }

  void check_theta(std::span<const double> theta) const {
    require(theta.size() == param_count_, ErrorCode::DimensionMismatch,
            "θ has length " + std::to_string(theta.size()) + ", spec needs " +
                std::to_string(param_count_));
  }

  ModelSpec spec_;
  std::vector<Layer> layers_;
  std::size_t param_count_ = 0;
  std::vector<Vector> pre_, act_, delta_, dact_;
};

inline Vector forward(const ModelSpec& spec, std::span<const double> theta,
                      std::span<const double> x) {
  Network net(spec);
  const auto out = net.forward(theta, x);
  return Vector(out.begin(), out.end());
}

inline Vector jvp(const ModelSpec& spec, std::span<const double> theta,
                  std::span<const double> x, std::span<const double> v) {
  Network net(spec);
  net.forward(theta, x);
  const auto out = net.tangent(theta, v);
  return Vector(out.begin(), out.end());
}

inline Vector vjp(const ModelSpec& spec, std::span<const double> theta,
                  std::span<const double> x, std::span<const double> w) {
  Network net(spec);
  net.forward(theta, x);
  Vector grad(net.param_count(), 0.0);
  net.backward(theta, w, grad);
  return grad;
}

// m x p Jacobian, one reverse sweep per output component.
inline Matrix jacobian(Network& net, std::span<const double> theta,
                       std::span<const double> x) {
  const std::size_t m = net.output_dim();
  Matrix j(m, net.param_count());
  net.forward(theta, x);
  Vector e(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    e[k] = 1.0;
    net.backward(theta, e, j.row(k));
    e[k] = 0.0;
  }
  return j;
}

inline Matrix jacobian(const ModelSpec& spec, std::span<const double> theta,
                       std::span<const double> x) {
  Network net(spec);
  return jacobian(net, theta, x);
}

inline Vector forward(const ParamVector& theta, std::span<const double> x) {
  return forward(theta.spec(), theta.values(), x);
}
inline Matrix jacobian(const ParamVector& theta, std::span<const double> x) {
  return jacobian(theta.spec(), theta.values(), x);
}
inline Vector jvp(const ParamVector& theta, std::span<const double> x,
                  std::span<const double> v) {
  return jvp(theta.spec(), theta.values(), x, v);
}
inline Vector vjp(const ParamVector& theta, std::span<const double> x,
                  std::span<const double> w) {
  return vjp(theta.spec(), theta.values(), x, w);
}

}  // namespace quadmech
