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

#include "salmap/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "salmap/error.hpp"

namespace salmap {

namespace {

void check_pair(const SaliencyMap& s, const BinaryMask& m, const char* what) {
  if (s.height() != m.height() || s.width() != m.width()) {
    throw ConfigError(std::string(what) + ": saliency is " + std::to_string(s.height()) + "x" +
                      std::to_string(s.width()) + " but mask is " + std::to_string(m.height()) +
                      "x" + std::to_string(m.width()));
  }
}

void check_nonempty(const BinaryMask& m, const char* what) {
  if (m.count() == 0) throw ConfigError(std::string(what) + ": mask has no foreground pixels");
}

double hits_in_top(const SaliencyMap& s, const BinaryMask& m, std::size_t k) {
  const std::vector<std::size_t> order = rank_pixels(s.values());
  std::size_t hits = 0;
  for (std::size_t n = 0; n < k; ++n) hits += m.values()[order[n]];
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

BinaryMask::BinaryMask(std::size_t height, std::size_t width)
    : BinaryMask(height, width, std::vector<std::uint8_t>(height * width, 0)) {}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height == 0 || width == 0) throw ConfigError("BinaryMask: every dimension must be >= 1");
  if (values_.size() != height * width) throw ConfigError("BinaryMask: size mismatch");
  for (auto& v : values_) v = v != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> rank_pixels(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

double pointing_game(const SaliencyMap& s, const BinaryMask& m) {
  check_pair(s, m, "pointing_game");
  check_nonempty(m, "pointing_game");
  auto v = s.values();
  const double best = *std::max_element(v.begin(), v.end());
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (v[n] == best && m.values()[n]) return 1.0;
  }
  return 0.0;
}

double top_k_intersection(const SaliencyMap& s, const BinaryMask& m, std::size_t k) {
  check_pair(s, m, "top_k_intersection");
  check_nonempty(m, "top_k_intersection");
  if (k < 1 || k > s.size()) {
    throw ConfigError("top_k_intersection: k = " + std::to_string(k) + " outside [1, " +
                      std::to_string(s.size()) + "]");
  }
  return hits_in_top(s, m, k);
}

double relevance_mass_accuracy(const SaliencyMap& s, const BinaryMask& m) {
  check_pair(s, m, "relevance_mass_accuracy");
  check_nonempty(m, "relevance_mass_accuracy");
  double inside = 0.0, total = 0.0;
  auto v = s.values();
  for (std::size_t n = 0; n < v.size(); ++n) {
    total += v[n];
    if (m.values()[n]) inside += v[n];
  }
  if (total == 0.0) return 0.0;
  return std::min(inside / total, 1.0);
}

double relevance_rank_accuracy(const SaliencyMap& s, const BinaryMask& m) {
  check_pair(s, m, "relevance_rank_accuracy");
  check_nonempty(m, "relevance_rank_accuracy");
  return hits_in_top(s, m, m.count());
}

double auc(const SaliencyMap& s, const BinaryMask& m) {
  check_pair(s, m, "auc");
  const std::size_t n = s.size();
  const std::size_t pos = m.count();
  if (pos == 0 || pos == n) throw ConfigError("auc: mask must contain both classes");
  const std::size_t neg = n - pos;

  auto v = s.values();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  // Twice the rank sum of positives, with tied groups sharing their
  // average rank; integer arithmetic keeps this exact.
  std::uint64_t rank_sum_x2 = 0;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && v[order[end]] == v[order[start]]) ++end;
    // ranks start+1 .. end, average (start + 1 + end) / 2
    const std::uint64_t avg_x2 = start + 1 + end;
    for (std::size_t t = start; t < end; ++t) {
      if (m.values()[order[t]]) rank_sum_x2 += avg_x2;
    }
    start = end;
  }
  const double u = static_cast<double>(rank_sum_x2) / 2.0 -
                   static_cast<double>(pos) * static_cast<double>(pos + 1) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double sparseness(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total == 0.0) {
    spdlog::debug("sparseness: all-zero map, returning 0");
    return 0.0;
  }
  const auto n = static_cast<double>(v.size());
  double weighted = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    weighted += (2.0 * static_cast<double>(k + 1) - n - 1.0) * v[k];
  }
  return weighted / (n * total);
}

std::string metric_key(Metric metric) {
  switch (metric) {
    case Metric::PointingGame:
      return "pointing_game";
    case Metric::Sparseness:
      return "sparseness";
    case Metric::RelevanceMass:
      return "relevance_mass_accuracy";
    case Metric::RelevanceRank:
      return "relevance_rank_accuracy";
    case Metric::TopK:
      return "top_k_intersection";
    case Metric::AUC:
      return "auc";
  }
  return "unknown";
}

std::string metric_label(Metric metric) {
  switch (metric) {
    case Metric::PointingGame:
      return "Pointing-Game";
    case Metric::Sparseness:
      return "Sparseness";
    case Metric::RelevanceMass:
      return "Relevance Mass Accuracy";
    case Metric::RelevanceRank:
      return "Relevance Rank Accuracy";
    case Metric::TopK:
      return "Top-K Intersection";
    case Metric::AUC:
      return "AUC";
  }
  return "unknown";
}

MetricRow evaluate_sample(const std::string& sample_id, const SaliencyMap& s, const BinaryMask& m,
                          std::size_t top_k) {
  check_pair(s, m, "evaluate_sample");
  check_nonempty(m, "evaluate_sample");
  MetricRow row;
  row.sample_id = sample_id;
  auto set = [&](Metric metric, double v) { row.values[static_cast<std::size_t>(metric)] = v; };
  set(Metric::PointingGame, pointing_game(s, m));
  set(Metric::Sparseness, sparseness(s));
  set(Metric::RelevanceMass, relevance_mass_accuracy(s, m));
  set(Metric::RelevanceRank, relevance_rank_accuracy(s, m));
  set(Metric::TopK, top_k_intersection(s, m, std::min(top_k, s.size())));
  // A mask covering the whole image leaves nothing to separate.
  set(Metric::AUC, m.count() == m.size() ? 0.5 : auc(s, m));
  return row;
}

std::string MetricReport::formatted(Metric metric) const {
  return format_fixed(mean_percent[static_cast<std::size_t>(metric)], 2);
}

MetricReport aggregate(std::vector<MetricRow> rows) {
  MetricReport report;
  report.rows = std::move(rows);
  if (report.rows.empty()) return report;
  for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
    double sum = 0.0;
    for (const MetricRow& r : report.rows) sum += r.values[k];
    report.mean[k] = sum / static_cast<double>(report.rows.size());
    report.mean_percent[k] = 100.0 * report.mean[k];
  }
  return report;
}

std::string rows_to_csv(std::span<const MetricRow> rows) {
  std::string out = "sample_id";
  for (Metric metric : kAllMetrics) out += "," + metric_key(metric);
  out += "\n";
  for (const MetricRow& r : rows) {
    out += r.sample_id;
    for (double v : r.values) {
      char buf[64];
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace salmap
