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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace salmap::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kNumericError = 4 };

struct GenerateConfig {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::size_t train = 800;
  std::size_t eval = 200;
  std::size_t image_size = 64;
  double noise = 0.3;
  double two_object_fraction = 0.0;  // eval split only
};

struct TrainConfig {
  std::filesystem::path manifest;
  std::filesystem::path out;  // checkpoint file
  std::uint64_t seed = 0;
  std::size_t epochs = 6;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  std::size_t threads = 1;
};

struct AttributeConfig {
  std::string method = "lafam";
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> activations;
  std::filesystem::path out;  // directory, or a .npy file with --activations
  std::optional<std::size_t> layer;        // default: last conv layer
  std::optional<std::size_t> class_index;  // default: predicted class
  std::size_t masks_n = 2048;
  double masks_p = 0.5;
  std::size_t cells = 7;
  double fill_value = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<std::size_t> out_size;  // --activations only; default: volume size
  std::string split = "eval";
  bool png = false;
};

struct EvalConfig {
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> saliency_dir;
  std::optional<std::filesystem::path> saliency;  // single-file mode
  std::optional<std::filesystem::path> mask;      // single-file mode
  std::filesystem::path out;
  std::size_t top_k = 1000;
  std::string split = "eval";
  std::string name;  // method label; default taken from the provenance sidecars
  std::size_t threads = 1;
};

struct ReportConfig {
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;  // column name, aggregate.json
  std::filesystem::path out;
};

void cmd_generate_data(const GenerateConfig& config);
void cmd_train(const TrainConfig& config);
void cmd_attribute(const AttributeConfig& config);
void cmd_eval(const EvalConfig& config);
void cmd_report(const ReportConfig& config);

/// Parses argv, runs one subcommand, maps failures onto exit codes and
/// writes a one-line JSON error record to stderr.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace salmap::cli
