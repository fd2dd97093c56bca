/*
 * Copyright 2026 The MAMMO Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mammo/random.hpp"

// Fully connected network with rectifier hidden layers and a final linear
// layer split into activated heads (softmax groups or single sigmoids).
// Forward and backward passes are written out by hand over the kernels in
// mammo/simd/kernels.hpp. All matrices are row-major; a batch is a
// (batch x features) matrix.
namespace mammo::nn {

enum class HeadKind { kSoftmax, kSigmoid };

struct HeadSpec {
  std::string name;
  HeadKind kind = HeadKind::kSoftmax;
  std::size_t size = 1;

  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

struct MlpArch {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::vector<HeadSpec> heads;
  double dropout = 0.0;

  std::size_t output_size() const noexcept;
  // Offset of head h within the output vector.
  std::size_t head_offset(std::size_t h) const noexcept;
  void validate() const;

  friend bool operator==(const MlpArch&, const MlpArch&) = default;
};

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in
  std::vector<double> bias;    // out

  friend bool operator==(const Dense&, const Dense&) = default;
};

// Cached intermediate values of a training-mode forward pass.
struct ForwardCache {
  std::size_t batch = 0;
  // pre_activation[l]: batch x hidden[l]; hidden_out[l]: after ReLU and
  // dropout, i.e. the input of layer l + 1.
  std::vector<std::vector<double>> pre_activation;
  std::vector<std::vector<double>> hidden_out;
  // Inverted-dropout multipliers (0 or 1 / (1 - rate)); empty if disabled.
  std::vector<std::vector<double>> dropout_scale;
  std::vector<double> logits;   // batch x output
  std::vector<double> outputs;  // activated heads
};

class Gradients;

class Mlp {
 public:
  Mlp() = default;

  // Glorot-uniform weights, zero biases; deterministic in seed.
  static Mlp glorot(const MlpArch& arch, std::uint64_t seed);
  static Mlp zeros(const MlpArch& arch);

  const MlpArch& arch() const noexcept { return arch_; }
  std::vector<Dense>& layers() noexcept { return layers_; }
  const std::vector<Dense>& layers() const noexcept { return layers_; }
  std::size_t parameter_count() const noexcept;
  bool all_finite() const noexcept;

  // Inference: dropout disabled. Returns batch x output activated values.
  std::vector<double> predict(std::span<const double> x, std::size_t batch) const;
  std::vector<double> predict_one(std::span<const double> x) const {
    return predict(x, 1);
  }

  // Training-mode pass. Dropout masks are drawn from dropout_rng when the
  // architecture has a positive rate and the pointer is non-null.
  ForwardCache forward_train(std::span<const double> x, std::size_t batch,
                             Rng* dropout_rng) const;

  // Accumulates parameter gradients given d loss / d logits.
  void backward(const ForwardCache& cache, std::span<const double> x,
                std::span<const double> dlogits, Gradients& grads) const;

  // Applies the head activations to a batch of logits in place.
  void activate(std::span<double> logits, std::size_t batch) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  MlpArch arch_;
  std::vector<Dense> layers_;
};

class Gradients {
 public:
  explicit Gradients(const Mlp& net);

  void zero() noexcept;
  std::vector<Dense>& layers() noexcept { return layers_; }
  const std::vector<Dense>& layers() const noexcept { return layers_; }
  void scale(double factor) noexcept;

 private:
  std::vector<Dense> layers_;
};

// Stochastic gradient descent with classical momentum:
// v <- momentum * v - lr * g;  w <- w + v.
class Sgd {
 public:
  Sgd(const Mlp& net, double momentum);
  void step(Mlp& net, const Gradients& grads, double lr);
  double momentum() const noexcept { return momentum_; }

 private:
  double momentum_;
  std::vector<Dense> velocity_;
};

nlohmann::json arch_to_json(const MlpArch& arch);
MlpArch arch_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

// Versioned model file: {"format", "component", "network", ...extra}.
inline constexpr int kModelFormatVersion = 1;
nlohmann::json model_envelope(std::string_view component, const Mlp& net,
                              const nlohmann::json& extra = nlohmann::json::object());
// Checks the version and component tag, then loads the network.
Mlp open_envelope(const nlohmann::json& j, std::string_view component);

}  // namespace mammo::nn
