/* Copyright 2026 The salmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// A small dependency-free CNN: conv blocks (conv -> optional ReLU ->
// optional 2x2 max-pool) followed by global average pooling and a linear
// classifier. The GAP + linear head makes the class-score gradient at the
// last block a closed form, w[c,k] / (H*W).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "salmap/tensor.hpp"

namespace salmap::cnn {

struct ConvSpec {
  std::size_t out_channels = 8;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  bool relu = true;
  bool pool = true;

  bool operator==(const ConvSpec&) const = default;
};

struct Topology {
  std::size_t input_channels = 1;
  std::vector<ConvSpec> layers;
  std::size_t classes = 13;

  /// Channel count of the last conv block (the embedding width).
  std::size_t feature_channels() const;
  bool operator==(const Topology&) const = default;
};

/// 8 -> 16 -> 32 channels, 3x3 / stride 1 / pad 1, ReLU and 2x2 max-pool
/// each; a 64x64 input ends on an 8x8 grid.
Topology default_topology(std::size_t input_channels = 1, std::size_t classes = 13);

struct ConvLayer {
  ConvSpec spec;
  std::size_t in_channels = 0;
  std::vector<double> weights;  // out x in x k x k
  std::vector<double> bias;     // out

  double weight(std::size_t o, std::size_t i, std::size_t y, std::size_t x) const {
    return weights[((o * in_channels + i) * spec.kernel + y) * spec.kernel + x];
  }
  bool operator==(const ConvLayer&) const = default;
};

struct LinearHead {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> weights;  // classes x features
  std::vector<double> bias;     // classes

  double weight(std::size_t c, std::size_t k) const { return weights[c * features + k]; }
  bool operator==(const LinearHead&) const = default;
};

class Model {
 public:
  /// Fan-in scaled uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static Model initialize(const Topology& topology, std::uint64_t seed);

  /// Throws ConfigError when the parameter shapes disagree with the
  /// topology, NumericError on non-finite parameters.
  Model(Topology topology, std::vector<ConvLayer> layers, LinearHead head,
        std::uint64_t seed = 0);

  const Topology& topology() const { return topology_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }
  const LinearHead& head() const { return head_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t num_layers() const { return layers_.size(); }

  /// Parameter tensors in checkpoint order: per layer weight then bias,
  /// then head weight and bias.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::vector<std::vector<std::size_t>> parameter_shapes() const;
  std::size_t parameter_count() const;

  void set_head(LinearHead head);

  bool operator==(const Model&) const = default;

 private:
  void validate() const;

  Topology topology_;
  std::vector<ConvLayer> layers_;
  LinearHead head_;
  std::uint64_t seed_ = 0;
};

struct LayerTrace {
  Volume pre_activation;  // raw convolution output
  Volume output;          // after ReLU and pooling; feeds the next layer
  std::vector<std::uint32_t> pool_argmax;  // flat index into the pre-pool plane, per output cell
};

struct ForwardTrace {
  Volume input;
  std::vector<LayerTrace> layers;
  std::vector<double> embedding;  // GAP of the last block output
  std::vector<double> logits;

  /// The volume selected by `capture`.
  const Volume& captured(const CaptureConfig& capture) const;
};

/// Runs the whole network. Throws ConfigError on a channel mismatch or if
/// the input is too small for the layer stack.
ForwardTrace forward(const Model& model, const Volume& input);

/// Exact d logit[class] / d (captured volume). Throws ConfigError on an
/// invalid class or layer index.
Volume backward_class_score(const Model& model, const ForwardTrace& trace,
                            std::size_t class_index, const CaptureConfig& target);

/// Number of backward passes (class-score or training) run by this
/// process. Instrumentation for code paths that must stay gradient-free.
std::uint64_t backward_pass_count();

struct Sample {
  Volume image;
  std::size_t label = 0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct TrainResult {
  Model model;
  double initial_loss = 0.0;        // mean loss before the first update
  std::vector<double> epoch_loss;   // mean pre-update minibatch loss per epoch
};

/// Minibatch SGD on softmax cross-entropy. Per-sample gradients are summed
/// in sample order, so the result is bit-identical for any thread count.
/// Throws NumericError when the loss becomes non-finite.
TrainResult train_sgd(Model model, std::span<const Sample> dataset, const TrainConfig& config);

/// Mean softmax cross-entropy of `model` over `dataset`.
double mean_loss(const Model& model, std::span<const Sample> dataset);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_near_kink = 0;
};

/// Compares backward_class_score with central differences on a random
/// subsample of at least `min_coordinates` coordinates of the target
/// volume (all of them if fewer exist). Coordinates whose +-10*epsilon
/// perturbation flips any downstream ReLU or max-pool decision are
/// skipped. Relative error uses max(|a|, |b|, 1e-8) as denominator.
GradCheckResult grad_check(const Model& model, const Volume& input, std::size_t class_index,
                           double epsilon, const CaptureConfig& target, std::uint64_t seed = 0,
                           std::size_t min_coordinates = 200);

/// Text topology block followed by the parameters as concatenated .npy
/// arrays (float64), so a round trip is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace salmap::cnn
