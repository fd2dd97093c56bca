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

#include "mammo/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "mammo/error.hpp"
#include "mammo/simd/kernels.hpp"

namespace mammo::nn {
namespace {

Dense make_dense(std::size_t in, std::size_t out) {
  Dense d;
  d.in = in;
  d.out = out;
  d.weight.assign(in * out, 0.0);
  d.bias.assign(out, 0.0);
  return d;
}

std::vector<Dense> shape_like(const MlpArch& arch) {
  std::vector<Dense> layers;
  std::size_t in = arch.input;
  for (std::size_t h : arch.hidden) {
    layers.push_back(make_dense(in, h));
    in = h;
  }
  layers.push_back(make_dense(in, arch.output_size()));
  return layers;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::size_t MlpArch::output_size() const noexcept {
  std::size_t n = 0;
  for (const auto& h : heads) n += h.size;
  return n;
}

std::size_t MlpArch::head_offset(std::size_t h) const noexcept {
  std::size_t off = 0;
  for (std::size_t i = 0; i < h && i < heads.size(); ++i) off += heads[i].size;
  return off;
}

void MlpArch::validate() const {
  if (input == 0) fail("architecture input size must be positive");
  if (hidden.empty()) fail("architecture needs at least one hidden layer");
  for (std::size_t h : hidden) {
    if (h == 0) fail("hidden layer sizes must be positive");
  }
  if (heads.empty()) fail("architecture needs at least one head");
  for (const auto& h : heads) {
    if (h.kind == HeadKind::kSoftmax && h.size < 2) {
      fail("softmax head '" + h.name + "' needs at least two classes");
    }
    if (h.kind == HeadKind::kSigmoid && h.size != 1) {
      fail("sigmoid head '" + h.name + "' must have size 1");
    }
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout rate must be in [0, 1)");
}

Mlp Mlp::zeros(const MlpArch& arch) {
  arch.validate();
  Mlp net;
  net.arch_ = arch;
  net.layers_ = shape_like(arch);
  return net;
}

Mlp Mlp::glorot(const MlpArch& arch, std::uint64_t seed) {
  Mlp net = zeros(arch);
  Rng rng(seed);
  for (auto& layer : net.layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& w : layer.weight) w = rng.uniform(-limit, limit);
  }
  return net;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool Mlp::all_finite() const noexcept {
  for (const auto& l : layers_) {
    for (double w : l.weight) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : l.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

void Mlp::activate(std::span<double> logits, std::size_t batch) const {
  const std::size_t width = arch_.output_size();
  for (std::size_t s = 0; s < batch; ++s) {
    double* row = logits.data() + s * width;
    std::size_t off = 0;
    for (const auto& head : arch_.heads) {
      double* z = row + off;
      if (head.kind == HeadKind::kSigmoid) {
        z[0] = sigmoid(z[0]);
      } else {
        const double mx = *std::max_element(z, z + head.size);
        double sum = 0.0;
        for (std::size_t i = 0; i < head.size; ++i) {
          z[i] = std::exp(z[i] - mx);
          sum += z[i];
        }
        for (std::size_t i = 0; i < head.size; ++i) z[i] /= sum;
      }
      off += head.size;
    }
  }
}

std::vector<double> Mlp::predict(std::span<const double> x,
                                 std::size_t batch) const {
  if (x.size() != batch * arch_.input) fail("input dimension mismatch");
  const auto& k = simd::kernels();
  std::vector<double> current(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Dense& d = layers_[l];
    next.assign(batch * d.out, 0.0);
    k.gemm_nt(batch, d.out, d.in, current.data(), d.weight.data(),
              d.bias.data(), next.data());
    if (l + 1 < layers_.size()) {
      for (double& v : next) v = std::max(v, 0.0);
    }
    current.swap(next);
  }
  activate(current, batch);
  return current;
}

ForwardCache Mlp::forward_train(std::span<const double> x, std::size_t batch,
                                Rng* dropout_rng) const {
  if (x.size() != batch * arch_.input) fail("input dimension mismatch");
  const auto& k = simd::kernels();
  const bool use_dropout = dropout_rng != nullptr && arch_.dropout > 0.0;
  const double keep_scale = 1.0 / (1.0 - arch_.dropout);

  ForwardCache cache;
  cache.batch = batch;
  const std::size_t hidden_layers = layers_.size() - 1;
  cache.pre_activation.resize(hidden_layers);
  cache.hidden_out.resize(hidden_layers);
  if (use_dropout) cache.dropout_scale.resize(hidden_layers);

  const double* input = x.data();
  for (std::size_t l = 0; l < hidden_layers; ++l) {
    const Dense& d = layers_[l];
    auto& z = cache.pre_activation[l];
    z.assign(batch * d.out, 0.0);
    k.gemm_nt(batch, d.out, d.in, input, d.weight.data(), d.bias.data(),
              z.data());
    auto& a = cache.hidden_out[l];
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::max(z[i], 0.0);
    if (use_dropout) {
      auto& mask = cache.dropout_scale[l];
      mask.resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) {
        mask[i] = dropout_rng->uniform() < arch_.dropout ? 0.0 : keep_scale;
        a[i] *= mask[i];
      }
    }
    input = a.data();
  }
  const Dense& out = layers_.back();
  cache.logits.assign(batch * out.out, 0.0);
  k.gemm_nt(batch, out.out, out.in, input, out.weight.data(), out.bias.data(),
            cache.logits.data());
  cache.outputs = cache.logits;
  activate(cache.outputs, batch);
  return cache;
}

void Mlp::backward(const ForwardCache& cache, std::span<const double> x,
                   std::span<const double> dlogits, Gradients& grads) const {
  const std::size_t batch = cache.batch;
  if (dlogits.size() != batch * arch_.output_size()) {
    fail("logit gradient dimension mismatch");
  }
  const auto& k = simd::kernels();
  std::vector<double> delta(dlogits.begin(), dlogits.end());
  std::vector<double> delta_in;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Dense& d = layers_[l];
    Dense& g = grads.layers()[l];
    const double* input =
        l == 0 ? x.data() : cache.hidden_out[l - 1].data();
    // dW += delta^T * input ; db += column sums of delta.
    for (std::size_t r = 0; r < d.out; ++r) {
      double* grow = g.weight.data() + r * d.in;
      double bsum = 0.0;
      for (std::size_t s = 0; s < batch; ++s) {
        const double dv = delta[s * d.out + r];
        if (dv != 0.0) k.axpy(dv, input + s * d.in, grow, d.in);
        bsum += dv;
      }
      g.bias[r] += bsum;
    }
    if (l == 0) break;
    // Propagate to the previous hidden layer through W, dropout and ReLU.
    delta_in.assign(batch * d.in, 0.0);
    for (std::size_t s = 0; s < batch; ++s) {
      double* din = delta_in.data() + s * d.in;
      for (std::size_t r = 0; r < d.out; ++r) {
        const double dv = delta[s * d.out + r];
        if (dv != 0.0) k.axpy(dv, d.weight.data() + r * d.in, din, d.in);
      }
    }
    const auto& z = cache.pre_activation[l - 1];
    const bool masked = !cache.dropout_scale.empty();
    for (std::size_t i = 0; i < delta_in.size(); ++i) {
      double v = z[i] > 0.0 ? delta_in[i] : 0.0;
      if (masked) v *= cache.dropout_scale[l - 1][i];
      delta_in[i] = v;
    }
    delta.swap(delta_in);
  }
}

Gradients::Gradients(const Mlp& net) : layers_(shape_like(net.arch())) {}

void Gradients::zero() noexcept {
  for (auto& l : layers_) {
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

void Gradients::scale(double factor) noexcept {
  for (auto& l : layers_) {
    for (double& w : l.weight) w *= factor;
    for (double& b : l.bias) b *= factor;
  }
}

Sgd::Sgd(const Mlp& net, double momentum)
    : momentum_(momentum), velocity_(shape_like(net.arch())) {
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
}

void Sgd::step(Mlp& net, const Gradients& grads, double lr) {
  auto& layers = net.layers();
  if (layers.size() != velocity_.size()) fail("optimizer/network shape mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l];
    auto& v = velocity_[l];
    const auto& g = grads.layers()[l];
    for (std::size_t i = 0; i < w.weight.size(); ++i) {
      v.weight[i] = momentum_ * v.weight[i] - lr * g.weight[i];
      w.weight[i] += v.weight[i];
    }
    for (std::size_t i = 0; i < w.bias.size(); ++i) {
      v.bias[i] = momentum_ * v.bias[i] - lr * g.bias[i];
      w.bias[i] += v.bias[i];
    }
  }
}

nlohmann::json arch_to_json(const MlpArch& arch) {
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& h : arch.heads) {
    heads.push_back({{"name", h.name},
                     {"kind", h.kind == HeadKind::kSoftmax ? "softmax" : "sigmoid"},
                     {"size", h.size}});
  }
  return {{"input", arch.input},
          {"hidden", arch.hidden},
          {"heads", heads},
          {"dropout", arch.dropout}};
}

MlpArch arch_from_json(const nlohmann::json& j) {
  try {
    MlpArch arch;
    arch.input = j.at("input").get<std::size_t>();
    arch.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    arch.dropout = j.at("dropout").get<double>();
    for (const auto& h : j.at("heads")) {
      HeadSpec spec;
      spec.name = h.at("name").get<std::string>();
      const auto kind = h.at("kind").get<std::string>();
      if (kind == "softmax") {
        spec.kind = HeadKind::kSoftmax;
      } else if (kind == "sigmoid") {
        spec.kind = HeadKind::kSigmoid;
      } else {
        fail(ErrorKind::kParse, "unknown head kind '" + kind + "'");
      }
      spec.size = h.at("size").get<std::size_t>();
      arch.heads.push_back(std::move(spec));
    }
    arch.validate();
    return arch;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed architecture: ") + e.what());
  }
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weight", l.weight}, {"bias", l.bias}});
  }
  return {{"arch", arch_to_json(net.arch())}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  try {
    Mlp net = Mlp::zeros(arch_from_json(j.at("arch")));
    const auto& layers = j.at("layers");
    if (layers.size() != net.layers().size()) {
      fail(ErrorKind::kParse, "layer count does not match architecture");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& d = net.layers()[l];
      const auto& jl = layers[l];
      if (jl.at("in").get<std::size_t>() != d.in ||
          jl.at("out").get<std::size_t>() != d.out) {
        fail(ErrorKind::kParse, "layer " + std::to_string(l) + " shape mismatch");
      }
      auto weight = jl.at("weight").get<std::vector<double>>();
      auto bias = jl.at("bias").get<std::vector<double>>();
      if (weight.size() != d.weight.size() || bias.size() != d.bias.size()) {
        fail(ErrorKind::kParse, "layer " + std::to_string(l) + " parameter count mismatch");
      }
      d.weight = std::move(weight);
      d.bias = std::move(bias);
    }
    if (!net.all_finite()) fail(ErrorKind::kParse, "non-finite weights in model file");
    return net;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed network: ") + e.what());
  }
}

nlohmann::json model_envelope(std::string_view component, const Mlp& net,
                              const nlohmann::json& extra) {
  nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
  j["format"] = kModelFormatVersion;
  j["component"] = std::string(component);
  j["network"] = to_json(net);
  return j;
}

Mlp open_envelope(const nlohmann::json& j, std::string_view component) {
  if (!j.is_object() || !j.contains("format") || !j.contains("component")) {
    fail(ErrorKind::kParse, "model file lacks format/component tags");
  }
  if (!j["format"].is_number_integer() || j["format"].get<int>() != kModelFormatVersion) {
    fail(ErrorKind::kParse, "unsupported model format version");
  }
  if (!j["component"].is_string() || j["component"].get<std::string>() != component) {
    fail(ErrorKind::kParse, "model file is not a '" + std::string(component) + "' model");
  }
  if (!j.contains("network")) fail(ErrorKind::kParse, "model file has no network");
  return mlp_from_json(j["network"]);
}

}  // namespace mammo::nn
