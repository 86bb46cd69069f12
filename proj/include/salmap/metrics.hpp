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

// Localization and complexity metrics for saliency maps against binary
// ground-truth masks. Rankings break ties by (value desc, row-major index
// asc) everywhere.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "salmap/tensor.hpp"

namespace salmap {

class BinaryMask {
 public:
  BinaryMask(std::size_t height, std::size_t width);
  /// Nonzero entries become 1.
  BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return values_[i * width_ + j]; }
  std::span<const std::uint8_t> values() const { return values_; }
  std::size_t count() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> values_;
};

/// Default Top-K size; clamped to the pixel count at evaluation time.
inline constexpr std::size_t kDefaultTopK = 1000;

/// Indices of all pixels sorted by (value desc, index asc).
std::vector<std::size_t> rank_pixels(std::span<const double> values);

/// 1 iff any global-argmax pixel lies in the mask.
double pointing_game(const SaliencyMap& s, const BinaryMask& m);
/// |topk(s) n m| / k. Throws ConfigError unless 1 <= k <= H*W.
double top_k_intersection(const SaliencyMap& s, const BinaryMask& m, std::size_t k);
/// Mass inside the mask over total mass; 0 when the total is 0.
double relevance_mass_accuracy(const SaliencyMap& s, const BinaryMask& m);
/// |top|m|(s) n m| / |m|.
double relevance_rank_accuracy(const SaliencyMap& s, const BinaryMask& m);
/// Mann-Whitney AUC with average ranks for ties. Throws ConfigError when
/// the mask is empty or full.
double auc(const SaliencyMap& s, const BinaryMask& m);
/// Gini index of the values; 0 for an all-zero map.
double sparseness(std::span<const double> values);
inline double sparseness(const SaliencyMap& s) { return sparseness(s.values()); }

enum class Metric { PointingGame, Sparseness, RelevanceMass, RelevanceRank, TopK, AUC };

/// Row order of the report tables.
inline constexpr std::array<Metric, 6> kAllMetrics = {
    Metric::PointingGame, Metric::Sparseness, Metric::RelevanceMass,
    Metric::RelevanceRank, Metric::TopK, Metric::AUC};

/// Machine key, e.g. "pointing_game".
std::string metric_key(Metric metric);
/// Table label, e.g. "Pointing-Game".
std::string metric_label(Metric metric);

struct MetricRow {
  std::string sample_id;
  std::array<double, 6> values{};  // indexed like kAllMetrics

  double operator[](Metric metric) const { return values[static_cast<std::size_t>(metric)]; }
};

/// Computes every metric for one sample. Throws ConfigError when the
/// saliency and mask sizes differ or the mask is empty.
MetricRow evaluate_sample(const std::string& sample_id, const SaliencyMap& s, const BinaryMask& m,
                          std::size_t top_k = kDefaultTopK);

struct MetricReport {
  std::vector<MetricRow> rows;
  std::array<double, 6> mean{};          // arithmetic mean per metric
  std::array<double, 6> mean_percent{};  // mean x 100

  /// "%.2f" rendering of mean_percent, as printed in the tables.
  std::string formatted(Metric metric) const;
};

/// Pooled mean over all rows, in row order.
MetricReport aggregate(std::vector<MetricRow> rows);

/// Fixed-header CSV, one line per row, values printed with 17 significant
/// digits.
std::string rows_to_csv(std::span<const MetricRow> rows);

}  // namespace salmap
