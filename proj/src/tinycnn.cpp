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

#include "salmap/tinycnn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "salmap/error.hpp"
#include "salmap/npy.hpp"
#include "salmap/parallel.hpp"
#include "salmap/random.hpp"

namespace salmap::cnn {

namespace {

std::atomic<std::uint64_t> g_backward_passes{0};

struct Shape3 {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t plane() const { return h * w; }
  std::size_t size() const { return c * h * w; }
};

Shape3 shape_of(const Volume& v) { return {v.channels(), v.height(), v.width()}; }

Shape3 conv_output_shape(const ConvSpec& spec, const Shape3& in) {
  const std::size_t padded_h = in.h + 2 * spec.padding;
  const std::size_t padded_w = in.w + 2 * spec.padding;
  if (padded_h < spec.kernel || padded_w < spec.kernel) {
    throw ConfigError("tinycnn: input " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                      " too small for a " + std::to_string(spec.kernel) + "x" +
                      std::to_string(spec.kernel) + " kernel");
  }
  return {spec.out_channels, (padded_h - spec.kernel) / spec.stride + 1,
          (padded_w - spec.kernel) / spec.stride + 1};
}

Shape3 pool_output_shape(const Shape3& in) {
  if (in.h < 2 || in.w < 2) {
    throw ConfigError("tinycnn: " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                      " map is too small for 2x2 max-pooling");
  }
  return {in.c, in.h / 2, in.w / 2};
}

// Valid output range [lo, hi) along one axis for kernel tap `t`.
void tap_range(std::size_t t, std::size_t stride, std::size_t pad, std::size_t n_in,
               std::size_t n_out, std::size_t& lo, std::size_t& hi) {
  // input index = o * stride + t - pad must lie in [0, n_in)
  lo = 0;
  if (t < pad) lo = (pad - t + stride - 1) / stride;
  const std::ptrdiff_t max_o =
      (static_cast<std::ptrdiff_t>(n_in) - 1 + static_cast<std::ptrdiff_t>(pad) -
       static_cast<std::ptrdiff_t>(t));
  if (max_o < 0) {
    hi = lo;
    return;
  }
  hi = std::min(n_out, static_cast<std::size_t>(max_o) / stride + 1);
  if (hi < lo) hi = lo;
}

// Flat input offset of output row y, tap (ky, kx), at output column 0.
// May be negative; callers only index columns inside the valid range.
std::ptrdiff_t input_offset(const ConvSpec& s, const Shape3& is, std::size_t y, std::size_t ky,
                            std::size_t kx) {
  const auto row = static_cast<std::ptrdiff_t>(y * s.stride + ky) - static_cast<std::ptrdiff_t>(s.padding);
  return row * static_cast<std::ptrdiff_t>(is.w) + static_cast<std::ptrdiff_t>(kx) -
         static_cast<std::ptrdiff_t>(s.padding);
}

void conv_forward(const ConvLayer& layer, std::span<const double> in, const Shape3& is,
                  std::vector<double>& out, const Shape3& os) {
  const ConvSpec& s = layer.spec;
  out.assign(os.size(), 0.0);
  for (std::size_t o = 0; o < os.c; ++o) {
    double* dst = out.data() + o * os.plane();
    std::fill(dst, dst + os.plane(), layer.bias[o]);
    for (std::size_t i = 0; i < is.c; ++i) {
      const double* src = in.data() + i * is.plane();
      for (std::size_t ky = 0; ky < s.kernel; ++ky) {
        std::size_t y0, y1;
        tap_range(ky, s.stride, s.padding, is.h, os.h, y0, y1);
        for (std::size_t kx = 0; kx < s.kernel; ++kx) {
          std::size_t x0, x1;
          tap_range(kx, s.stride, s.padding, is.w, os.w, x0, x1);
          const double w = layer.weight(o, i, ky, kx);
          for (std::size_t y = y0; y < y1; ++y) {
            const std::ptrdiff_t off = input_offset(s, is, y, ky, kx);
            double* out_row = dst + y * os.w;
            for (std::size_t x = x0; x < x1; ++x) {
              out_row[x] += w * src[off + static_cast<std::ptrdiff_t>(x * s.stride)];
            }
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients (when non-null) and writes the input
// gradient (when non-null).
void conv_backward(const ConvLayer& layer, std::span<const double> in, const Shape3& is,
                   std::span<const double> grad_out, const Shape3& os, std::vector<double>* grad_in,
                   std::span<double> grad_w, std::span<double> grad_b) {
  const ConvSpec& s = layer.spec;
  const bool want_params = !grad_w.empty();
  if (grad_in) grad_in->assign(is.size(), 0.0);
  for (std::size_t o = 0; o < os.c; ++o) {
    const double* g = grad_out.data() + o * os.plane();
    if (want_params) {
      double b = 0.0;
      for (std::size_t n = 0; n < os.plane(); ++n) b += g[n];
      grad_b[o] += b;
    }
    for (std::size_t i = 0; i < is.c; ++i) {
      const double* src = in.data() + i * is.plane();
      double* gin = grad_in ? grad_in->data() + i * is.plane() : nullptr;
      for (std::size_t ky = 0; ky < s.kernel; ++ky) {
        std::size_t y0, y1;
        tap_range(ky, s.stride, s.padding, is.h, os.h, y0, y1);
        for (std::size_t kx = 0; kx < s.kernel; ++kx) {
          std::size_t x0, x1;
          tap_range(kx, s.stride, s.padding, is.w, os.w, x0, x1);
          const double w = layer.weight(o, i, ky, kx);
          double gw = 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            const std::ptrdiff_t off = input_offset(s, is, y, ky, kx);
            const double* g_row = g + y * os.w;
            if (want_params) {
              for (std::size_t x = x0; x < x1; ++x) {
                gw += g_row[x] * src[off + static_cast<std::ptrdiff_t>(x * s.stride)];
              }
            }
            if (gin) {
              for (std::size_t x = x0; x < x1; ++x) {
                gin[off + static_cast<std::ptrdiff_t>(x * s.stride)] += w * g_row[x];
              }
            }
          }
          if (want_params) {
            grad_w[((o * is.c + i) * s.kernel + ky) * s.kernel + kx] += gw;
          }
        }
      }
    }
  }
}

// ReLU and optional 2x2 max-pool over a conv output.
void activate(const ConvSpec& spec, std::span<const double> pre, const Shape3& ps,
              std::vector<double>& out, Shape3& out_shape, std::vector<std::uint32_t>& argmax) {
  std::vector<double> post(pre.begin(), pre.end());
  if (spec.relu) {
    for (double& v : post) v = v > 0.0 ? v : 0.0;
  }
  if (!spec.pool) {
    out = std::move(post);
    out_shape = ps;
    argmax.clear();
    return;
  }
  out_shape = pool_output_shape(ps);
  out.assign(out_shape.size(), 0.0);
  argmax.assign(out_shape.size(), 0);
  for (std::size_t c = 0; c < ps.c; ++c) {
    const double* src = post.data() + c * ps.plane();
    for (std::size_t y = 0; y < out_shape.h; ++y) {
      for (std::size_t x = 0; x < out_shape.w; ++x) {
        std::size_t best = (2 * y) * ps.w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * y + dy) * ps.w + 2 * x + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = c * out_shape.plane() + y * out_shape.w + x;
        out[o] = src[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

struct Head {
  std::vector<double> embedding;
  std::vector<double> logits;
};

Head run_head(const LinearHead& head, std::span<const double> last, const Shape3& ls) {
  Head out;
  out.embedding.assign(ls.c, 0.0);
  for (std::size_t k = 0; k < ls.c; ++k) {
    double sum = 0.0;
    for (std::size_t n = 0; n < ls.plane(); ++n) sum += last[k * ls.plane() + n];
    out.embedding[k] = sum / static_cast<double>(ls.plane());
  }
  out.logits.assign(head.classes, 0.0);
  for (std::size_t c = 0; c < head.classes; ++c) {
    double z = head.bias[c];
    for (std::size_t k = 0; k < head.features; ++k) z += head.weight(c, k) * out.embedding[k];
    out.logits[c] = z;
  }
  return out;
}

// Parameter gradients laid out like Model::parameters().
using ParamGrads = std::vector<std::vector<double>>;

ParamGrads zero_grads(const Model& model) {
  ParamGrads g;
  for (auto p : model.parameters()) g.emplace_back(p.size(), 0.0);
  return g;
}

// Backpropagates `d_logits`. With `stop` set, returns the gradient at that
// capture point; with `grads` set, accumulates every parameter gradient.
std::vector<double> backprop(const Model& model, const ForwardTrace& trace,
                             std::span<const double> d_logits, const CaptureConfig* stop,
                             ParamGrads* grads) {
  g_backward_passes.fetch_add(1, std::memory_order_relaxed);
  const LinearHead& head = model.head();
  const std::size_t L = model.num_layers();
  if (grads) {
    auto& gw = (*grads)[2 * L];
    auto& gb = (*grads)[2 * L + 1];
    for (std::size_t c = 0; c < head.classes; ++c) {
      for (std::size_t k = 0; k < head.features; ++k) gw[c * head.features + k] += d_logits[c] * trace.embedding[k];
      gb[c] += d_logits[c];
    }
  }
  std::vector<double> d_emb(head.features, 0.0);
  for (std::size_t c = 0; c < head.classes; ++c) {
    if (d_logits[c] == 0.0) continue;
    for (std::size_t k = 0; k < head.features; ++k) d_emb[k] += d_logits[c] * head.weight(c, k);
  }

  const Shape3 last = shape_of(trace.layers.back().output);
  std::vector<double> d_out(last.size());
  for (std::size_t k = 0; k < last.c; ++k) {
    const double g = d_emb[k] / static_cast<double>(last.plane());
    std::fill(d_out.begin() + static_cast<std::ptrdiff_t>(k * last.plane()),
              d_out.begin() + static_cast<std::ptrdiff_t>((k + 1) * last.plane()), g);
  }

  for (std::size_t l = L; l-- > 0;) {
    const ConvLayer& layer = model.layers()[l];
    const LayerTrace& lt = trace.layers[l];
    if (stop && stop->layer_index == l && stop->post_activation) return d_out;

    const Shape3 ps = shape_of(lt.pre_activation);
    std::vector<double> d_pre;
    if (layer.spec.pool) {
      d_pre.assign(ps.size(), 0.0);
      const Shape3 os = shape_of(lt.output);
      for (std::size_t c = 0; c < os.c; ++c) {
        for (std::size_t n = 0; n < os.plane(); ++n) {
          const std::size_t o = c * os.plane() + n;
          d_pre[c * ps.plane() + lt.pool_argmax[o]] += d_out[o];
        }
      }
    } else {
      d_pre = std::move(d_out);
    }
    if (layer.spec.relu) {
      auto pre = lt.pre_activation.values();
      for (std::size_t n = 0; n < d_pre.size(); ++n) {
        if (!(pre[n] > 0.0)) d_pre[n] = 0.0;
      }
    }
    if (stop && stop->layer_index == l && !stop->post_activation) return d_pre;

    const Volume& in = l == 0 ? trace.input : trace.layers[l - 1].output;
    std::vector<double> d_in;
    const bool need_input_grad = l > 0;
    if (!need_input_grad && !grads) break;
    std::span<double> gw, gb;
    if (grads) {
      gw = (*grads)[2 * l];
      gb = (*grads)[2 * l + 1];
    }
    conv_backward(layer, in.values(), shape_of(in), d_pre, ps, need_input_grad ? &d_in : nullptr,
                  gw, gb);
    d_out = std::move(d_in);
  }
  return {};
}

// Runs the network onward from a capture point whose captured values are
// `value`. Records the ReLU/pool decisions it takes in `pattern`.
std::vector<double> forward_from(const Model& model, const CaptureConfig& at,
                                 std::vector<double> value, Shape3 shape,
                                 std::vector<std::uint8_t>* pattern) {
  std::size_t l = at.layer_index;
  auto record = [&](const ConvSpec& spec, std::span<const double> pre,
                    const std::vector<std::uint32_t>& argmax) {
    if (!pattern) return;
    if (spec.relu) {
      for (double v : pre) pattern->push_back(v > 0.0 ? 1 : 0);
    }
    for (std::uint32_t a : argmax) {
      pattern->push_back(static_cast<std::uint8_t>(a & 0xff));
      pattern->push_back(static_cast<std::uint8_t>((a >> 8) & 0xff));
    }
  };
  std::vector<double> cur;
  Shape3 cur_shape;
  if (!at.post_activation) {
    std::vector<std::uint32_t> argmax;
    activate(model.layers()[l].spec, value, shape, cur, cur_shape, argmax);
    record(model.layers()[l].spec, value, argmax);
  } else {
    cur = std::move(value);
    cur_shape = shape;
  }
  for (++l; l < model.num_layers(); ++l) {
    const ConvLayer& layer = model.layers()[l];
    const Shape3 ps = conv_output_shape(layer.spec, cur_shape);
    std::vector<double> pre;
    conv_forward(layer, cur, cur_shape, pre, ps);
    std::vector<std::uint32_t> argmax;
    activate(layer.spec, pre, ps, cur, cur_shape, argmax);
    record(layer.spec, pre, argmax);
  }
  return run_head(model.head(), cur, cur_shape).logits;
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t label,
                             std::vector<double>* d_logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double lse = m + std::log(z);
  if (d_logits) {
    d_logits->resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      (*d_logits)[c] = std::exp(logits[c] - lse) - (c == label ? 1.0 : 0.0);
    }
  }
  return lse - logits[label];
}

}  // namespace

std::size_t Topology::feature_channels() const {
  return layers.empty() ? input_channels : layers.back().out_channels;
}

Topology default_topology(std::size_t input_channels, std::size_t classes) {
  Topology t;
  t.input_channels = input_channels;
  t.classes = classes;
  for (std::size_t c : {8, 16, 32}) t.layers.push_back(ConvSpec{c, 3, 1, 1, true, true});
  return t;
}

Model Model::initialize(const Topology& topology, std::uint64_t seed) {
  const std::uint64_t init_seed = rng::derive_seed(seed, "tinycnn.init");
  std::vector<ConvLayer> layers;
  std::size_t in = topology.input_channels;
  std::uint64_t stream_id = 0;
  for (const ConvSpec& spec : topology.layers) {
    ConvLayer layer;
    layer.spec = spec;
    layer.in_channels = in;
    const std::size_t fan_in = in * spec.kernel * spec.kernel;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    rng::Stream stream(init_seed, stream_id++);
    layer.weights.resize(spec.out_channels * fan_in);
    for (double& w : layer.weights) w = stream.uniform(-bound, bound);
    layer.bias.assign(spec.out_channels, 0.0);
    layers.push_back(std::move(layer));
    in = spec.out_channels;
  }
  LinearHead head;
  head.classes = topology.classes;
  head.features = in;
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  rng::Stream stream(init_seed, stream_id);
  head.weights.resize(head.classes * head.features);
  for (double& w : head.weights) w = stream.uniform(-bound, bound);
  head.bias.assign(head.classes, 0.0);
  return Model(topology, std::move(layers), std::move(head), seed);
}

Model::Model(Topology topology, std::vector<ConvLayer> layers, LinearHead head, std::uint64_t seed)
    : topology_(std::move(topology)), layers_(std::move(layers)), head_(std::move(head)), seed_(seed) {
  validate();
}

void Model::validate() const {
  if (topology_.layers.empty()) throw ConfigError("tinycnn: model needs at least one conv layer");
  if (topology_.input_channels == 0 || topology_.classes == 0) {
    throw ConfigError("tinycnn: input channels and classes must be >= 1");
  }
  if (layers_.size() != topology_.layers.size()) {
    throw ConfigError("tinycnn: layer count disagrees with topology");
  }
  std::size_t in = topology_.input_channels;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const ConvLayer& layer = layers_[l];
    const std::string where = "tinycnn: layer " + std::to_string(l);
    if (!(layer.spec == topology_.layers[l])) throw ConfigError(where + " spec disagrees with topology");
    if (layer.spec.out_channels == 0 || layer.spec.kernel == 0 || layer.spec.stride == 0) {
      throw ConfigError(where + " has a zero-sized dimension");
    }
    if (layer.in_channels != in) throw ConfigError(where + " input channels do not chain");
    if (layer.weights.size() != layer.spec.out_channels * in * layer.spec.kernel * layer.spec.kernel ||
        layer.bias.size() != layer.spec.out_channels) {
      throw ConfigError(where + " parameter sizes do not match its shape");
    }
    in = layer.spec.out_channels;
  }
  if (head_.features != in || head_.classes != topology_.classes ||
      head_.weights.size() != head_.classes * head_.features || head_.bias.size() != head_.classes) {
    throw ConfigError("tinycnn: head shape disagrees with topology");
  }
  for (auto p : parameters()) {
    for (double v : p) {
      if (!std::isfinite(v)) throw NumericError("tinycnn: non-finite parameter");
    }
  }
}

std::vector<std::span<double>> Model::parameters() {
  std::vector<std::span<double>> out;
  for (ConvLayer& layer : layers_) {
    out.emplace_back(layer.weights);
    out.emplace_back(layer.bias);
  }
  out.emplace_back(head_.weights);
  out.emplace_back(head_.bias);
  return out;
}

std::vector<std::span<const double>> Model::parameters() const {
  std::vector<std::span<const double>> out;
  for (const ConvLayer& layer : layers_) {
    out.emplace_back(layer.weights);
    out.emplace_back(layer.bias);
  }
  out.emplace_back(head_.weights);
  out.emplace_back(head_.bias);
  return out;
}

std::vector<std::vector<std::size_t>> Model::parameter_shapes() const {
  std::vector<std::vector<std::size_t>> out;
  for (const ConvLayer& layer : layers_) {
    out.push_back({layer.spec.out_channels, layer.in_channels, layer.spec.kernel, layer.spec.kernel});
    out.push_back({layer.spec.out_channels});
  }
  out.push_back({head_.classes, head_.features});
  out.push_back({head_.classes});
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (auto p : parameters()) n += p.size();
  return n;
}

void Model::set_head(LinearHead head) {
  head_ = std::move(head);
  validate();
}

const Volume& ForwardTrace::captured(const CaptureConfig& capture) const {
  if (capture.layer_index >= layers.size()) {
    throw ConfigError("tinycnn: layer index " + std::to_string(capture.layer_index) +
                      " out of range (model has " + std::to_string(layers.size()) + " layers)");
  }
  const LayerTrace& lt = layers[capture.layer_index];
  return capture.post_activation ? lt.output : lt.pre_activation;
}

ForwardTrace forward(const Model& model, const Volume& input) {
  if (input.channels() != model.topology().input_channels) {
    throw ConfigError("tinycnn: input has " + std::to_string(input.channels()) +
                      " channels, model expects " + std::to_string(model.topology().input_channels));
  }
  ForwardTrace trace{input, {}, {}, {}};
  trace.layers.reserve(model.num_layers());
  std::vector<double> cur(input.values().begin(), input.values().end());
  Shape3 cur_shape = shape_of(input);
  for (const ConvLayer& layer : model.layers()) {
    const Shape3 ps = conv_output_shape(layer.spec, cur_shape);
    std::vector<double> pre;
    conv_forward(layer, cur, cur_shape, pre, ps);
    std::vector<std::uint32_t> argmax;
    activate(layer.spec, pre, ps, cur, cur_shape, argmax);
    trace.layers.push_back(LayerTrace{Volume(ps.c, ps.h, ps.w, std::move(pre)),
                                      Volume(cur_shape.c, cur_shape.h, cur_shape.w, cur),
                                      std::move(argmax)});
  }
  Head head = run_head(model.head(), cur, cur_shape);
  trace.embedding = std::move(head.embedding);
  trace.logits = std::move(head.logits);
  for (double z : trace.logits) {
    if (!std::isfinite(z)) throw NumericError("tinycnn: non-finite logit");
  }
  return trace;
}

Volume backward_class_score(const Model& model, const ForwardTrace& trace, std::size_t class_index,
                            const CaptureConfig& target) {
  if (class_index >= model.head().classes) {
    throw ConfigError("tinycnn: class index " + std::to_string(class_index) + " out of range");
  }
  const Volume& captured = trace.captured(target);
  std::vector<double> d_logits(model.head().classes, 0.0);
  d_logits[class_index] = 1.0;
  std::vector<double> grad = backprop(model, trace, d_logits, &target, nullptr);
  return Volume(captured.channels(), captured.height(), captured.width(), std::move(grad));
}

std::uint64_t backward_pass_count() { return g_backward_passes.load(); }

double mean_loss(const Model& model, std::span<const Sample> dataset) {
  double total = 0.0;
  for (const Sample& s : dataset) {
    total += softmax_cross_entropy(forward(model, s.image).logits, s.label, nullptr);
  }
  return total / static_cast<double>(dataset.size());
}

TrainResult train_sgd(Model model, std::span<const Sample> dataset, const TrainConfig& config) {
  if (dataset.empty()) throw ConfigError("train_sgd: empty dataset");
  if (config.batch_size == 0) throw ConfigError("train_sgd: batch size must be >= 1");
  for (const Sample& s : dataset) {
    if (s.label >= model.head().classes) {
      throw ConfigError("train_sgd: label " + std::to_string(s.label) + " >= class count");
    }
  }

  TrainResult result{model, 0.0, {}};
  result.initial_loss = mean_loss(model, dataset);
  const std::uint64_t shuffle_seed = rng::derive_seed(config.seed, "tinycnn.shuffle");
  std::vector<std::size_t> order(dataset.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Stream stream(shuffle_seed, epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[stream.below(i)]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      std::vector<ParamGrads> grads(count);
      std::vector<double> losses(count);
      parallel_for(count, config.threads, [&](std::size_t b) {
        const Sample& s = dataset[order[start + b]];
        const ForwardTrace trace = forward(model, s.image);
        std::vector<double> d_logits;
        losses[b] = softmax_cross_entropy(trace.logits, s.label, &d_logits);
        grads[b] = zero_grads(model);
        backprop(model, trace, d_logits, nullptr, &grads[b]);
      });
      for (std::size_t b = 0; b < count; ++b) {
        if (!std::isfinite(losses[b])) {
          throw NumericError("train_sgd: non-finite loss in epoch " + std::to_string(epoch) +
                             " at sample " + std::to_string(order[start + b]));
        }
        epoch_loss += losses[b];
      }
      ParamGrads& total = grads[0];
      for (std::size_t b = 1; b < count; ++b) {
        for (std::size_t t = 0; t < total.size(); ++t) {
          for (std::size_t n = 0; n < total[t].size(); ++n) total[t][n] += grads[b][t][n];
        }
      }
      const double scale = config.learning_rate / static_cast<double>(count);
      auto params = model.parameters();
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t n = 0; n < params[t].size(); ++n) params[t][n] -= scale * total[t][n];
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.model = Model(model.topology(), model.layers(), model.head(), model.seed());
  return result;
}

GradCheckResult grad_check(const Model& model, const Volume& input, std::size_t class_index,
                           double epsilon, const CaptureConfig& target, std::uint64_t seed,
                           std::size_t min_coordinates) {
  if (!(epsilon > 0.0)) throw ConfigError("grad_check: epsilon must be > 0");
  const ForwardTrace trace = forward(model, input);
  const Volume analytic = backward_class_score(model, trace, class_index, target);
  const Volume& base = trace.captured(target);
  const Shape3 shape = shape_of(base);
  std::vector<double> values(base.values().begin(), base.values().end());

  std::vector<std::uint8_t> reference;
  forward_from(model, target, values, shape, &reference);

  std::vector<std::size_t> coords(values.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  rng::Stream stream(rng::derive_seed(seed, "tinycnn.gradcheck"), 0);
  std::shuffle(coords.begin(), coords.end(), stream);

  auto logit_at = [&](std::size_t idx, double delta, std::vector<std::uint8_t>* pattern) {
    std::vector<double> v = values;
    v[idx] += delta;
    return forward_from(model, target, std::move(v), shape, pattern)[class_index];
  };

  GradCheckResult result;
  for (std::size_t idx : coords) {
    if (result.checked >= min_coordinates) break;
    bool near_kink = false;
    for (double delta : {10.0 * epsilon, -10.0 * epsilon}) {
      std::vector<std::uint8_t> pattern;
      logit_at(idx, delta, &pattern);
      if (pattern != reference) near_kink = true;
    }
    if (near_kink) {
      ++result.skipped_near_kink;
      continue;
    }
    const double numeric =
        (logit_at(idx, epsilon, nullptr) - logit_at(idx, -epsilon, nullptr)) / (2.0 * epsilon);
    const double a = analytic.values()[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.checked;
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot create " + path.string());
  const Topology& t = model.topology();
  out << "salmap-checkpoint 1\n";
  out << "seed " << model.seed() << "\n";
  out << "input_channels " << t.input_channels << "\n";
  out << "classes " << t.classes << "\n";
  for (const ConvSpec& s : t.layers) {
    out << "conv " << s.out_channels << " " << s.kernel << " " << s.stride << " " << s.padding
        << " " << (s.relu ? "relu" : "linear") << " " << (s.pool ? "pool" : "nopool") << "\n";
  }
  out << "tensors " << model.parameters().size() << "\n";
  out << "end\n";
  const auto params = model.parameters();
  const auto shapes = model.parameter_shapes();
  for (std::size_t n = 0; n < params.size(); ++n) {
    npy::write(out, npy::Array{npy::DType::Float64, shapes[n], {params[n].begin(), params[n].end()}});
  }
  if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  auto bad = [&](const std::string& why) -> IoError {
    return IoError("checkpoint " + path.string() + ": " + why);
  };

  std::string line;
  if (!std::getline(in, line) || line != "salmap-checkpoint 1") throw bad("unrecognized header");
  Topology t;
  t.layers.clear();
  std::uint64_t seed = 0;
  std::size_t tensors = 0;
  bool done = false;
  while (!done && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "seed") {
      ls >> seed;
    } else if (key == "input_channels") {
      ls >> t.input_channels;
    } else if (key == "classes") {
      ls >> t.classes;
    } else if (key == "conv") {
      ConvSpec s;
      std::string relu, pool;
      ls >> s.out_channels >> s.kernel >> s.stride >> s.padding >> relu >> pool;
      if ((relu != "relu" && relu != "linear") || (pool != "pool" && pool != "nopool")) {
        throw bad("malformed conv line '" + line + "'");
      }
      s.relu = relu == "relu";
      s.pool = pool == "pool";
      t.layers.push_back(s);
    } else if (key == "tensors") {
      ls >> tensors;
    } else if (key == "end") {
      done = true;
      continue;
    } else {
      throw bad("unknown header line '" + line + "'");
    }
    if (ls.fail()) throw bad("malformed header line '" + line + "'");
  }
  if (!done) throw bad("missing end of header");
  if (tensors != 2 * t.layers.size() + 2) throw bad("tensor count disagrees with topology");

  std::vector<npy::Array> arrays;
  for (std::size_t n = 0; n < tensors; ++n) arrays.push_back(npy::read(in));

  std::vector<ConvLayer> layers;
  std::size_t in_ch = t.input_channels;
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    ConvLayer layer;
    layer.spec = t.layers[l];
    layer.in_channels = in_ch;
    layer.weights = std::move(arrays[2 * l].data);
    layer.bias = std::move(arrays[2 * l + 1].data);
    layers.push_back(std::move(layer));
    in_ch = t.layers[l].out_channels;
  }
  LinearHead head;
  head.classes = t.classes;
  head.features = in_ch;
  head.weights = std::move(arrays[2 * t.layers.size()].data);
  head.bias = std::move(arrays[2 * t.layers.size() + 1].data);
  Model model(t, std::move(layers), std::move(head), seed);
  const auto shapes = model.parameter_shapes();
  for (std::size_t n = 0; n < tensors; ++n) {
    if (arrays[n].shape != shapes[n]) throw bad("tensor " + std::to_string(n) + " has the wrong shape");
  }
  return model;
}

}  // namespace salmap::cnn
