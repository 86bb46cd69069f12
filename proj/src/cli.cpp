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

#include "salmap/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "salmap/attribution.hpp"
#include "salmap/dataset.hpp"
#include "salmap/error.hpp"
#include "salmap/metrics.hpp"
#include "salmap/npy.hpp"
#include "salmap/parallel.hpp"
#include "salmap/random.hpp"
#include "salmap/tinycnn.hpp"

namespace salmap::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// Eval-split entries whose class map holds a single class, in manifest order.
std::vector<data::ManifestEntry> single_class_entries(const fs::path& manifest,
                                                      const std::string& split) {
  const fs::path root = manifest.parent_path();
  std::vector<data::ManifestEntry> entries;
  std::vector<data::MaskRecord> records;
  for (data::ManifestEntry& e : data::read_manifest(manifest)) {
    if (e.split != split) continue;
    data::MaskRecord record;
    if (!e.class_map.empty()) {
      const data::Image8 map = data::read_png(root / e.class_map);
      record = data::make_mask_record(e.id, map.pixels);
    } else {
      record.mask_path = e.id;
      record.classes.insert(e.classes.begin(), e.classes.end());
    }
    records.push_back(std::move(record));
    entries.push_back(std::move(e));
  }
  const std::vector<data::MaskRecord> kept = data::filter_single_class(records);
  std::vector<data::ManifestEntry> out;
  std::size_t next = 0;
  for (const data::MaskRecord& r : kept) {
    while (entries[next].id != r.mask_path) ++next;
    out.push_back(entries[next]);
  }
  spdlog::info("{} of {} '{}' samples hold a single class", out.size(), entries.size(), split);
  return out;
}

std::string resolved(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

}  // namespace

void cmd_generate_data(const GenerateConfig& config) {
  if (config.train + config.eval == 0) throw ConfigError("generate-data: nothing to generate");
  if (!(config.two_object_fraction >= 0.0 && config.two_object_fraction <= 1.0)) {
    throw ConfigError("generate-data: --two-object-fraction must lie in [0, 1]");
  }
  ensure_dir(config.out / "images");
  ensure_dir(config.out / "masks");

  struct Job {
    std::string split;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < config.train; ++i) jobs.push_back({"train", i});
  for (std::size_t i = 0; i < config.eval; ++i) jobs.push_back({"eval", i});

  const std::uint64_t layout_seed = rng::derive_seed(config.seed, "generate.layout");
  std::vector<data::ManifestEntry> entries;
  for (const Job& job : jobs) {
    const std::string tag = job.split + "." + std::to_string(job.index);
    data::SceneConfig scene;
    scene.image_size = config.image_size;
    scene.noise_level = config.noise;
    if (job.split == "eval" && config.two_object_fraction > 0.0) {
      rng::Stream s(rng::derive_seed(layout_seed, tag), 0);
      scene.two_objects = s.uniform() < config.two_object_fraction;
    }
    const std::uint64_t seed = rng::derive_seed(config.seed, "generate.scene." + tag);
    const data::SceneSample sample = data::generate_scene(seed, scene);

    char id[64];
    std::snprintf(id, sizeof id, "%s_%05zu", job.split.c_str(), job.index);
    data::ManifestEntry e;
    e.id = id;
    e.split = job.split;
    e.image = "images/" + e.id + ".png";
    e.mask = "masks/" + e.id + ".png";
    e.class_map = "masks/" + e.id + "_classes.png";
    e.label = sample.label;
    e.seed = seed;
    e.classes = sample.labels;
    std::sort(e.classes.begin(), e.classes.end());
    e.descriptor = sample.descriptor;

    data::save_image_png(config.out / e.image, sample.image);
    data::save_mask_png(config.out / e.mask, sample.gt_mask);
    data::write_png(config.out / e.class_map,
                    data::Image8{config.image_size, config.image_size, 1, sample.class_map});
    entries.push_back(std::move(e));
  }
  data::write_manifest(config.out / "manifest.jsonl", entries);
  spdlog::info("wrote {} samples to {}", entries.size(), config.out.string());
}

void cmd_train(const TrainConfig& config) {
  require_file(config.manifest, "manifest");
  const fs::path root = config.manifest.parent_path();
  std::vector<cnn::Sample> samples;
  std::size_t classes = data::kDefaultClassCount;
  std::size_t channels = 0;
  for (const data::ManifestEntry& e : data::read_manifest(config.manifest)) {
    if (e.split != "train") continue;
    Volume image = data::load_image(root / e.image);
    if (channels == 0) channels = image.channels();
    if (image.channels() != channels) throw ConfigError("train: images mix channel counts");
    classes = std::max(classes, e.label + 1);
    samples.push_back(cnn::Sample{std::move(image), e.label});
  }
  if (samples.empty()) throw ConfigError("train: manifest has no 'train' samples");

  cnn::Model model = cnn::Model::initialize(cnn::default_topology(channels, classes),
                                            rng::derive_seed(config.seed, "train.init"));
  cnn::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.learning_rate = config.learning_rate;
  tc.batch_size = config.batch_size;
  tc.seed = rng::derive_seed(config.seed, "train.sgd");
  tc.threads = config.threads;
  spdlog::info("training on {} samples, {} epochs", samples.size(), config.epochs);
  const cnn::TrainResult result = cnn::train_sgd(std::move(model), samples, tc);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    spdlog::info("epoch {} loss {:.6f}", e + 1, result.epoch_loss[e]);
  }

  std::size_t correct = 0;
  for (const cnn::Sample& s : samples) {
    const auto logits = cnn::forward(result.model, s.image).logits;
    correct += static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin()) == s.label;
  }
  if (!config.out.parent_path().empty()) ensure_dir(config.out.parent_path());
  cnn::save_checkpoint(config.out, result.model);

  json log;
  log["samples"] = samples.size();
  log["initial_loss"] = result.initial_loss;
  log["epoch_loss"] = result.epoch_loss;
  log["train_accuracy"] = static_cast<double>(correct) / static_cast<double>(samples.size());
  fs::path log_path = config.out;
  log_path += ".log.json";
  write_text(log_path, log.dump(2) + "\n");
  spdlog::info("train accuracy {:.4f}", log["train_accuracy"].get<double>());
}

void cmd_attribute(const AttributeConfig& config) {
  const Method method = parse_method(config.method);
  if (config.masks_n == 0) throw ConfigError("attribute: --masks-n must be >= 1");
  if (!(config.masks_p > 0.0 && config.masks_p < 1.0)) throw ConfigError("attribute: --masks-p must lie in (0, 1)");
  if (config.cells == 0) throw ConfigError("attribute: --cells must be >= 1");

  if (config.activations) {
    // Label-free path: an exported activation volume is all LaFAM needs.
    if (method != Method::LaFAM) {
      throw ConfigError("attribute: --activations supports only --method lafam (" + config.method +
                        " needs --checkpoint and --manifest)");
    }
    if (config.checkpoint || config.manifest) {
      throw ConfigError("attribute: --activations excludes --checkpoint and --manifest");
    }
    require_file(*config.activations, "activation tensor");
    const Volume volume = npy::to_volume(npy::read(*config.activations));
    const std::size_t out_h = config.out_size.value_or(volume.height());
    const std::size_t out_w = config.out_size.value_or(volume.width());
    const AttributionResult result = lafam(volume, out_h, out_w, config.layer.value_or(0));
    fs::path stem = config.out;
    if (stem.extension() == ".npy") stem.replace_extension();
    if (!stem.parent_path().empty()) ensure_dir(stem.parent_path());
    save_result(stem, result);
    if (config.png) {
      fs::path png = stem;
      png += ".png";
      data::save_saliency_png(png, result.saliency);
    }
    return;
  }

  if (!config.checkpoint || !config.manifest) {
    throw ConfigError("attribute: need --checkpoint and --manifest (or --activations for lafam)");
  }
  require_file(*config.checkpoint, "checkpoint");
  require_file(*config.manifest, "manifest");
  const cnn::Model model = cnn::load_checkpoint(*config.checkpoint);
  const std::size_t layer = config.layer.value_or(model.num_layers() - 1);
  if (layer >= model.num_layers()) {
    throw ConfigError("attribute: --layer " + std::to_string(layer) + " out of range (model has " +
                      std::to_string(model.num_layers()) + " conv layers)");
  }
  if (config.class_index && *config.class_index >= model.head().classes) {
    throw ConfigError("attribute: --class out of range");
  }
  const CaptureConfig capture{layer, true};
  const std::vector<data::ManifestEntry> entries = single_class_entries(*config.manifest, config.split);
  const fs::path root = config.manifest->parent_path();
  ensure_dir(config.out);

  std::optional<OcclusionMaskBatch> masks;
  const cnn::Model* model_ptr = &model;
  const Encoder encoder = [model_ptr](const Volume& x) { return cnn::forward(*model_ptr, x).embedding; };

  std::vector<std::optional<AttributionResult>> results(entries.size());
  const bool per_sample_parallel = method != Method::RELAX;
  auto attribute_one = [&](std::size_t n) {
    const Volume image = data::load_image(root / entries[n].image);
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    switch (method) {
      case Method::LaFAM: {
        const cnn::ForwardTrace trace = cnn::forward(model, image);
        results[n] = lafam(trace.captured(capture), h, w, layer);
        break;
      }
      case Method::GradCAM: {
        const cnn::ForwardTrace trace = cnn::forward(model, image);
        const std::size_t cls = config.class_index.value_or(static_cast<std::size_t>(
            std::max_element(trace.logits.begin(), trace.logits.end()) - trace.logits.begin()));
        const Volume grads = cnn::backward_class_score(model, trace, cls, capture);
        results[n] = gradcam(trace.captured(capture), grads, h, w, layer, cls);
        break;
      }
      case Method::RELAX: {
        if (!masks || masks->height() != h || masks->width() != w) {
          MaskConfig mc;
          mc.count = config.masks_n;
          mc.p = config.masks_p;
          mc.cells_h = config.cells;
          mc.cells_w = config.cells;
          mc.seed = rng::derive_seed(config.seed, "attribute.relax.masks");
          masks = sample_masks(mc, h, w);
        }
        RelaxConfig rc;
        rc.fill_value = config.fill_value;
        rc.threads = config.threads;
        results[n] = relax(image, encoder, *masks, rc);
        break;
      }
    }
  };
  if (per_sample_parallel) {
    parallel_for(entries.size(), config.threads, attribute_one);
  } else {
    for (std::size_t n = 0; n < entries.size(); ++n) attribute_one(n);
  }

  for (std::size_t n = 0; n < entries.size(); ++n) {
    save_result(config.out / entries[n].id, *results[n]);
    if (config.png) data::save_saliency_png(config.out / (entries[n].id + ".png"), results[n]->saliency);
  }
  spdlog::info("{}: wrote {} saliency maps to {}", config.method, entries.size(), config.out.string());
}

void cmd_eval(const EvalConfig& config) {
  struct Item {
    std::string id;
    fs::path saliency;
    fs::path mask;
  };
  std::vector<Item> items;
  std::string name = config.name;
  if (config.saliency || config.mask) {
    if (!config.saliency || !config.mask) throw ConfigError("eval: --saliency and --mask go together");
    if (config.manifest || config.saliency_dir) {
      throw ConfigError("eval: single-file mode excludes --manifest and --saliency-dir");
    }
    items.push_back({config.saliency->stem().string(), *config.saliency, *config.mask});
  } else {
    if (!config.manifest || !config.saliency_dir) {
      throw ConfigError("eval: need --manifest and --saliency-dir (or --saliency and --mask)");
    }
    require_file(*config.manifest, "manifest");
    const fs::path root = config.manifest->parent_path();
    for (const data::ManifestEntry& e : single_class_entries(*config.manifest, config.split)) {
      items.push_back({e.id, *config.saliency_dir / (e.id + ".npy"), root / e.mask});
    }
  }
  if (items.empty()) throw ConfigError("eval: no samples to evaluate");
  if (config.top_k == 0) throw ConfigError("eval: --top-k must be >= 1");
  if (name.empty()) {
    fs::path sidecar = items.front().saliency;
    sidecar.replace_extension(".json");
    name = fs::is_regular_file(sidecar) ? read_json(sidecar).value("method", std::string("saliency"))
                                        : std::string("saliency");
  }

  std::vector<MetricRow> rows(items.size());
  parallel_for(items.size(), config.threads, [&](std::size_t n) {
    require_file(items[n].saliency, "saliency");
    require_file(items[n].mask, "mask");
    const BinaryMask mask = data::load_mask(items[n].mask);
    const RawGrid grid = npy::to_grid(npy::read(items[n].saliency));
    SaliencyMap s(grid.height(), grid.width(), {grid.values().begin(), grid.values().end()});
    if (s.height() != mask.height() || s.width() != mask.width()) {
      s = upsample_nearest(s, mask.height(), mask.width());
    }
    rows[n] = evaluate_sample(items[n].id, s, mask, config.top_k);
  });
  const MetricReport report = aggregate(std::move(rows));

  ensure_dir(config.out);
  write_text(config.out / "metrics.csv", rows_to_csv(report.rows));
  json agg;
  agg["method"] = name;
  agg["samples"] = report.rows.size();
  json metrics = json::object();
  json means = json::object();
  for (Metric m : kAllMetrics) {
    metrics[metric_key(m)] = report.formatted(m);
    means[metric_key(m)] = report.mean[static_cast<std::size_t>(m)];
  }
  agg["percent"] = metrics;
  agg["mean"] = means;
  write_text(config.out / "aggregate.json", agg.dump(2) + "\n");
  spdlog::info("{}: evaluated {} samples", name, report.rows.size());
}

void cmd_report(const ReportConfig& config) {
  if (config.inputs.empty()) throw ConfigError("report: need at least one --input NAME=PATH");
  std::vector<std::string> names;
  std::vector<json> aggregates;
  for (const auto& [name, path] : config.inputs) {
    require_file(path, "aggregate");
    json agg = read_json(path);
    if (!agg.contains("percent")) throw IoError(path.string() + ": missing 'percent' block");
    names.push_back(name);
    aggregates.push_back(std::move(agg));
  }
  auto cell = [&](std::size_t col, Metric m) {
    return aggregates[col]["percent"].value(metric_key(m), std::string("-"));
  };

  std::string csv = "metric";
  for (const auto& n : names) csv += "," + n;
  csv += "\n";
  for (Metric m : kAllMetrics) {
    csv += metric_label(m);
    for (std::size_t c = 0; c < names.size(); ++c) csv += "," + cell(c, m);
    csv += "\n";
  }

  std::size_t label_w = std::string("Metric").size();
  for (Metric m : kAllMetrics) label_w = std::max(label_w, metric_label(m).size());
  std::vector<std::size_t> col_w;
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::size_t w = names[c].size();
    for (Metric m : kAllMetrics) w = std::max(w, cell(c, m).size());
    col_w.push_back(w);
  }
  auto pad_left = [](const std::string& s, std::size_t w) { return std::string(w - s.size(), ' ') + s; };
  auto pad_right = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  std::string rule = std::string(label_w + 1, '-');
  for (std::size_t w : col_w) rule += "+" + std::string(w + 2, '-');
  std::string txt = "Saliency map comparison (higher values are better)\n" + rule + "\n";
  txt += pad_left("Metric", label_w) + " ";
  for (std::size_t c = 0; c < names.size(); ++c) txt += "| " + pad_right(names[c], col_w[c]) + " ";
  txt += "\n" + rule + "\n";
  for (Metric m : kAllMetrics) {
    txt += pad_left(metric_label(m), label_w) + " ";
    for (std::size_t c = 0; c < names.size(); ++c) txt += "| " + pad_left(cell(c, m), col_w[c]) + " ";
    txt += "\n";
  }
  txt += rule + "\n";

  ensure_dir(config.out);
  write_text(config.out / "report.csv", csv);
  write_text(config.out / "report.txt", txt);
}

namespace {

void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("salmap");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SALMAP_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

void report_error(int code, const char* kind, const std::string& message) {
  json j;
  j["error"] = kind;
  j["code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

void echo_config(const CLI::App& sub, const fs::path& dir) {
  ensure_dir(dir);
  write_text(dir / (sub.get_name() + ".config.toml"), sub.config_to_str(true, false));
}

}  // namespace

int run(int argc, const char* const* argv) {
  configure_logging();
  CLI::App app{"salmap: label-free activation-map saliency toolkit"};
  app.set_config("--config", "", "TOML/INI file with option defaults (command-line flags win)");
  app.require_subcommand(1);

  GenerateConfig gen;
  auto* gen_cmd = app.add_subcommand("generate-data", "Generate the synthetic scene dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--train", gen.train, "Number of training samples");
  gen_cmd->add_option("--eval", gen.eval, "Number of evaluation samples");
  gen_cmd->add_option("--image-size", gen.image_size, "Image side length");
  gen_cmd->add_option("--noise", gen.noise, "Pixel noise amplitude in [0, 1)");
  gen_cmd->add_option("--two-object-fraction", gen.two_object_fraction,
                      "Fraction of eval scenes with a second object");

  TrainConfig train;
  auto* train_cmd = app.add_subcommand("train", "Train the embedded CNN");
  train_cmd->add_option("--manifest", train.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--seed", train.seed, "Random seed");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--lr", train.learning_rate, "SGD learning rate");
  train_cmd->add_option("--batch-size", train.batch_size, "Minibatch size");
  train_cmd->add_option("--threads", train.threads, "Worker threads");

  AttributeConfig attr;
  std::string attr_layer, attr_class, attr_out_size;
  auto* attr_cmd = app.add_subcommand("attribute", "Compute saliency maps");
  attr_cmd->add_option("--method", attr.method, "lafam, gradcam or relax")
      ->check(CLI::IsMember({"lafam", "gradcam", "relax"}));
  attr_cmd->add_option("--checkpoint", attr.checkpoint, "Model checkpoint");
  attr_cmd->add_option("--manifest", attr.manifest, "Dataset manifest");
  attr_cmd->add_option("--activations", attr.activations, "Activation volume (.npy, K x H x W)");
  attr_cmd->add_option("--out", attr.out, "Output directory (or .npy file with --activations)")->required();
  attr_cmd->add_option("--layer", attr.layer, "Conv layer index (default: last)");
  attr_cmd->add_option("--class", attr.class_index, "Grad-CAM class (default: predicted)");
  attr_cmd->add_option("--masks-n", attr.masks_n, "RELAX mask count");
  attr_cmd->add_option("--masks-p", attr.masks_p, "RELAX Bernoulli keep probability");
  attr_cmd->add_option("--cells", attr.cells, "RELAX mask grid side");
  attr_cmd->add_option("--fill-value", attr.fill_value, "Value of occluded pixels");
  attr_cmd->add_option("--seed", attr.seed, "Random seed");
  attr_cmd->add_option("--threads", attr.threads, "Worker threads");
  attr_cmd->add_option("--out-size", attr.out_size, "Output side length (--activations only)");
  attr_cmd->add_option("--split", attr.split, "Manifest split to attribute");
  attr_cmd->add_flag("--png", attr.png, "Also write 8-bit PNG renderings");

  EvalConfig ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score saliency maps against ground-truth masks");
  eval_cmd->add_option("--manifest", ev.manifest, "Dataset manifest");
  eval_cmd->add_option("--saliency-dir", ev.saliency_dir, "Directory of <id>.npy saliency maps");
  eval_cmd->add_option("--saliency", ev.saliency, "Single saliency map (.npy)");
  eval_cmd->add_option("--mask", ev.mask, "Single ground-truth mask (.png or .npy)");
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->add_option("--top-k", ev.top_k, "Top-K size (clamped to the pixel count)");
  eval_cmd->add_option("--split", ev.split, "Manifest split to evaluate");
  eval_cmd->add_option("--name", ev.name, "Method label for the report");
  eval_cmd->add_option("--threads", ev.threads, "Worker threads");

  ReportConfig rep;
  std::vector<std::string> rep_inputs;
  auto* rep_cmd = app.add_subcommand("report", "Side-by-side method x metric table");
  rep_cmd->add_option("--input", rep_inputs, "NAME=path/to/aggregate.json (repeatable)")->required();
  rep_cmd->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(kConfigError, "config", e.what());
    return kConfigError;
  }

  try {
    if (gen_cmd->parsed()) {
      gen.out = resolved(gen.out);
      echo_config(*gen_cmd, gen.out);
      cmd_generate_data(gen);
    } else if (train_cmd->parsed()) {
      train.manifest = resolved(train.manifest);
      train.out = resolved(train.out);
      echo_config(*train_cmd, train.out.parent_path());
      cmd_train(train);
    } else if (attr_cmd->parsed()) {
      attr.out = resolved(attr.out);
      if (attr.checkpoint) attr.checkpoint = resolved(*attr.checkpoint);
      if (attr.manifest) attr.manifest = resolved(*attr.manifest);
      if (attr.activations) attr.activations = resolved(*attr.activations);
      echo_config(*attr_cmd, attr.activations ? attr.out.parent_path() : attr.out);
      cmd_attribute(attr);
    } else if (eval_cmd->parsed()) {
      ev.out = resolved(ev.out);
      echo_config(*eval_cmd, ev.out);
      cmd_eval(ev);
    } else if (rep_cmd->parsed()) {
      for (const std::string& in : rep_inputs) {
        const auto eq = in.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw ConfigError("report: --input expects NAME=PATH, got '" + in + "'");
        }
        rep.inputs.emplace_back(in.substr(0, eq), resolved(in.substr(eq + 1)));
      }
      rep.out = resolved(rep.out);
      echo_config(*rep_cmd, rep.out);
      cmd_report(rep);
    }
  } catch (const ConfigError& e) {
    report_error(kConfigError, "config", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    report_error(kIoError, "io", e.what());
    return kIoError;
  } catch (const NumericError& e) {
    report_error(kNumericError, "numeric", e.what());
    return kNumericError;
  }
  return kOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("salmap");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace salmap::cli
