#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "posthoc/calibration.hpp"
#include "posthoc/data_model.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/model_io.hpp"
#include "posthoc/offload.hpp"
#include "posthoc/pipeline.hpp"
#include "posthoc/selection.hpp"
#include "posthoc/shift.hpp"
#include "posthoc/synthetic.hpp"
#include "posthoc/text_io.hpp"

namespace fs = std::filesystem;

namespace {

using posthoc::ValidationError;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) {
    throw ValidationError("expected a comma-separated list, got '" + text + "'");
  }
  return out;
}

std::vector<double> double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("not a number in list: '" + item + "'");
    }
  }
  return out;
}

std::vector<int> int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("not an integer in list: '" + item + "'");
    }
  }
  return out;
}

// One manifest per run: the echoed arguments plus content digests of every
// input, written next to the outputs (inside out-dirs, or as a sidecar for
// single-file outputs). Contains nothing run-dependent, so identical runs
// produce identical manifests.
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> arguments;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  void add_arg(const std::string& key, const std::string& value) {
    arguments.emplace_back(key, value);
  }

  void write(const fs::path& location) const {
    nlohmann::ordered_json out;
    out["command"] = command;
    auto args = nlohmann::ordered_json::object();
    for (const auto& [key, value] : arguments) args[key] = value;
    out["arguments"] = std::move(args);
    auto digests = nlohmann::ordered_json::object();
    for (const auto& input : inputs) {
      digests[input.string()] =
          posthoc::fnv1a64_hex(posthoc::read_text_file(input));
    }
    out["inputs"] = std::move(digests);
    auto names = nlohmann::ordered_json::array();
    for (const auto& output : outputs) names.push_back(output.string());
    out["outputs"] = std::move(names);
    posthoc::write_text_file(location, out.dump(2) + "\n");
  }
};

fs::path sidecar_manifest(const fs::path& output_file) {
  fs::path out = output_file;
  out += ".manifest.json";
  return out;
}

void ensure_parent_dir(const fs::path& file) {
  const auto parent = file.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// Options shared by every estimator-training command.
struct TrainingFlags {
  std::uint64_t seed = 0;
  int rounds = 300;
  int max_depth = 5;
  double subsample = 0.7;
  double learning_rate = 0.1;
  int min_samples_leaf = 5;
  int epochs = 500;
  int batch_size = 32;
  double mlp_learning_rate = 0.03;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for every stochastic step");
    cmd->add_option("--rounds", rounds, "Boosting rounds");
    cmd->add_option("--max-depth", max_depth, "Tree depth limit");
    cmd->add_option("--subsample", subsample, "Boosting row subsample ratio");
    cmd->add_option("--learning-rate", learning_rate, "Boosting learning rate");
    cmd->add_option("--min-samples-leaf", min_samples_leaf,
                    "Minimum rows per leaf");
    cmd->add_option("--epochs", epochs, "MLP training epochs");
    cmd->add_option("--batch-size", batch_size, "MLP batch size");
    cmd->add_option("--mlp-learning-rate", mlp_learning_rate,
                    "MLP learning rate");
  }

  posthoc::BoostConfig boost() const {
    posthoc::BoostConfig config;
    config.rounds = rounds;
    config.max_depth = max_depth;
    config.subsample = subsample;
    config.learning_rate = learning_rate;
    config.min_samples_leaf = min_samples_leaf;
    config.seed = seed;
    return config;
  }

  posthoc::MlpConfig mlp() const {
    posthoc::MlpConfig config;
    config.learning_rate = mlp_learning_rate;
    config.epochs = epochs;
    config.batch_size = batch_size;
    config.seed = seed;
    return config;
  }
};

posthoc::Corpus load_corpus(const fs::path& path, posthoc::Task task) {
  return posthoc::ingest_jsonl_file(path, task);
}

posthoc::Corpus corpus_for_split(const posthoc::Corpus& corpus,
                                 const std::string& which) {
  if (which == "all") return corpus;
  if (!corpus.has_splits()) {
    throw ValidationError("corpus has no split assignments; use --split all");
  }
  return split_subset(corpus, posthoc::parse_split(which));
}

std::string fmt(double value) { return posthoc::format_double(value); }

// ---------------------------------------------------------------------------
// Command bodies. Each returns after writing its outputs and manifest.

void cmd_synth(const fs::path& config_path, std::uint64_t seed,
               const fs::path& out) {
  const auto config = posthoc::synthetic_config_from_json(
      posthoc::read_text_file(config_path));
  const auto corpus = posthoc::generate_synthetic(config, seed);
  ensure_parent_dir(out);
  posthoc::serialize_jsonl_file(corpus, out);

  Manifest manifest;
  manifest.command = "synth";
  manifest.add_arg("config", config_path.string());
  manifest.add_arg("seed", std::to_string(seed));
  manifest.add_arg("out", out.string());
  manifest.inputs = {config_path};
  manifest.outputs = {out};
  manifest.write(sidecar_manifest(out));
}

void cmd_split(const fs::path& in, const std::string& task,
               const std::string& fractions, std::uint64_t seed,
               const fs::path& out) {
  const auto parts = double_list(fractions);
  if (parts.size() != 3) {
    throw ValidationError("--fractions needs exactly three values");
  }
  const auto corpus = load_corpus(in, posthoc::parse_task(task));
  const auto split = posthoc::assign_splits(
      corpus, posthoc::SplitFractions{parts[0], parts[1], parts[2]}, seed);
  ensure_parent_dir(out);
  posthoc::serialize_jsonl_file(split, out);

  Manifest manifest;
  manifest.command = "split";
  manifest.add_arg("in", in.string());
  manifest.add_arg("task", task);
  manifest.add_arg("fractions", fractions);
  manifest.add_arg("seed", std::to_string(seed));
  manifest.add_arg("out", out.string());
  manifest.inputs = {in};
  manifest.outputs = {out};
  manifest.write(sidecar_manifest(out));
}

void cmd_resample(const fs::path& in, const std::string& classes,
                  const std::string& freqs, std::uint64_t seed,
                  const fs::path& out) {
  const auto corpus = load_corpus(in, posthoc::Task::classification);
  const auto resampled = posthoc::resample_shift(corpus, int_list(classes),
                                                 double_list(freqs), seed);
  ensure_parent_dir(out);
  posthoc::serialize_jsonl_file(resampled, out);

  Manifest manifest;
  manifest.command = "resample";
  manifest.add_arg("in", in.string());
  manifest.add_arg("classes", classes);
  manifest.add_arg("freqs", freqs);
  manifest.add_arg("seed", std::to_string(seed));
  manifest.add_arg("out", out.string());
  manifest.inputs = {in};
  manifest.outputs = {out};
  manifest.write(sidecar_manifest(out));
}

void cmd_eval_metrics(const fs::path& in, const std::string& task,
                      const std::string& model, const std::string& metric,
                      double iou, const fs::path& out) {
  const auto parsed_task = posthoc::parse_task(task);
  const auto corpus = load_corpus(in, parsed_task);
  const auto metric_kind = posthoc::parse_metric(metric);

  std::string csv;
  if (parsed_task == posthoc::Task::detection) {
    // validates that the metric fits the task; columns carry all three anyway
    (void)posthoc::metric_values(corpus, model, metric_kind, iou);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(corpus.records.size());
    for (const auto& record : corpus.records) {
      const auto it = record.models.find(model);
      if (it == record.models.end()) {
        throw ValidationError("record " + record.image_id +
                              ": no output for model '" + model + "'");
      }
      const auto stats = posthoc::image_metrics(it->second.dets, record.gt, iou);
      const auto fp = stats.num_dets - stats.true_positives;
      const auto fn = stats.num_gt - stats.true_positives;
      rows.push_back({record.image_id, std::to_string(stats.true_positives),
                      std::to_string(fp), std::to_string(fn),
                      fmt(stats.precision), fmt(stats.recall), fmt(stats.f1)});
    }
    csv = posthoc::to_csv(
        {"image_id", "tp", "fp", "fn", "precision", "recall", "f1"}, rows);
  } else {
    const auto values = posthoc::metric_values(corpus, model, metric_kind, iou);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      rows.push_back({corpus.records[i].image_id, fmt(values[i])});
    }
    csv = posthoc::to_csv({"image_id", "accuracy"}, rows);
  }
  ensure_parent_dir(out);
  posthoc::write_text_file(out, csv);

  Manifest manifest;
  manifest.command = "eval-metrics";
  manifest.add_arg("in", in.string());
  manifest.add_arg("task", task);
  manifest.add_arg("model", model);
  manifest.add_arg("metric", metric);
  manifest.add_arg("iou", fmt(iou));
  manifest.add_arg("out", out.string());
  manifest.inputs = {in};
  manifest.outputs = {out};
  manifest.write(sidecar_manifest(out));
}

void cmd_train(const fs::path& in, const std::string& task,
               const std::string& model, const std::string& metric,
               const std::string& estimator, const std::string& profile,
               double iou, double lambda, const TrainingFlags& flags,
               const fs::path& out) {
  const auto corpus = load_corpus(in, posthoc::parse_task(task));

  posthoc::PredictorOptions options;
  options.estimator = posthoc::parse_estimator(estimator);
  options.metric = posthoc::parse_metric(metric);
  options.iou_threshold = iou;
  options.profile = posthoc::parse_profile(profile);
  options.ridge_lambda = lambda;
  options.boost = flags.boost();
  options.mlp = flags.mlp();

  const auto predictor = posthoc::train_predictor(corpus, model, options);
  ensure_parent_dir(out);
  posthoc::save_predictor(predictor, out);

  Manifest manifest;
  manifest.command = "train";
  manifest.add_arg("in", in.string());
  manifest.add_arg("task", task);
  manifest.add_arg("model", model);
  manifest.add_arg("metric", metric);
  manifest.add_arg("estimator", estimator);
  manifest.add_arg("profile", profile);
  manifest.add_arg("iou", fmt(iou));
  manifest.add_arg("lambda", fmt(lambda));
  manifest.add_arg("seed", std::to_string(flags.seed));
  manifest.inputs = {in};
  manifest.outputs = {out};
  manifest.write(sidecar_manifest(out));
}

void cmd_predict(const fs::path& in, const fs::path& model_file,
                 const std::string& which_split, const fs::path& out) {
  const auto predictor = posthoc::load_predictor(model_file);
  const auto corpus = corpus_for_split(
      load_corpus(in, predictor.task), which_split);
  const auto predicted = posthoc::predict_scores(predictor, corpus);
  const auto truth = posthoc::true_scores(predictor, corpus);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    rows.push_back({corpus.records[i].image_id, fmt(predicted[i]),
                    fmt(truth[i])});
  }
  ensure_parent_dir(out);
  posthoc::write_text_file(
      out, posthoc::to_csv({"image_id", "prediction", "true_metric"}, rows));

  Manifest manifest;
  manifest.command = "predict";
  manifest.add_arg("in", in.string());
  manifest.add_arg("model-file", model_file.string());
  manifest.add_arg("split", which_split);
  manifest.add_arg("out", out.string());
  manifest.inputs = {in, model_file};
  manifest.outputs = {out};
  manifest.write(sidecar_manifest(out));
}

struct PredictionTable {
  std::vector<double> predicted;
  std::vector<double> truth;
};

PredictionTable read_predictions(const fs::path& path) {
  const auto text = posthoc::read_text_file(path);
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) {
    throw ValidationError("predictions file is empty: " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image_id,prediction,true_metric") {
    throw ValidationError(
        "predictions file must have header image_id,prediction,true_metric");
  }
  PredictionTable table;
  std::size_t line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_list(line);
    if (cells.size() != 3) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected 3 columns");
    }
    try {
      table.predicted.push_back(std::stod(cells[1]));
      table.truth.push_back(std::stod(cells[2]));
    } catch (const std::exception&) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": malformed number");
    }
  }
  return table;
}

void cmd_report(const fs::path& pred, int bins, const std::string& sensitivity,
                const fs::path& out_dir) {
  const auto table = read_predictions(pred);
  const auto report = posthoc::make_report(table.predicted, table.truth, bins);
  fs::create_directories(out_dir);
  posthoc::write_text_file(out_dir / "report.json",
                           posthoc::report_to_json(report));
  posthoc::write_text_file(out_dir / "bins.csv",
                           posthoc::bins_to_csv(report.bins));

  std::vector<fs::path> outputs = {out_dir / "report.json",
                                   out_dir / "bins.csv"};
  if (!sensitivity.empty()) {
    const auto counts = int_list(sensitivity);
    const auto cells =
        posthoc::bin_sensitivity(table.predicted, table.truth, counts);
    std::vector<std::vector<std::string>> rows;
    for (const auto& [count, ece] : cells) {
      rows.push_back({std::to_string(count), fmt(ece)});
    }
    posthoc::write_text_file(out_dir / "bin_sensitivity.csv",
                             posthoc::to_csv({"bins", "ece"}, rows));
    outputs.push_back(out_dir / "bin_sensitivity.csv");
  }

  Manifest manifest;
  manifest.command = "report";
  manifest.add_arg("pred", pred.string());
  manifest.add_arg("bins", std::to_string(bins));
  manifest.add_arg("sensitivity", sensitivity);
  manifest.add_arg("out-dir", out_dir.string());
  manifest.inputs = {pred};
  manifest.outputs = outputs;
  manifest.write(out_dir / "manifest.json");
}

void cmd_offload(const fs::path& in, const std::string& client,
                 const std::string& servers, const std::string& metric,
                 double iou, const std::string& profile, double lambda,
                 const std::string& rhos, bool no_gap_guard,
                 const TrainingFlags& flags, const fs::path& out_dir) {
  const auto corpus = load_corpus(in, posthoc::Task::detection);

  posthoc::OffloadOptions options;
  options.metric = posthoc::parse_metric(metric);
  options.iou_threshold = iou;
  options.profile = posthoc::parse_profile(profile);
  options.ridge_lambda = lambda;
  options.boost = flags.boost();
  options.gap_guard = !no_gap_guard;
  if (!rhos.empty()) options.rhos = double_list(rhos);

  const auto result =
      posthoc::run_offload_sweep(corpus, client, split_list(servers), options);

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> sweep_rows;
  for (const auto& row : result.rows) {
    sweep_rows.push_back({fmt(row.rho), fmt(row.threshold), fmt(row.fraction),
                          fmt(row.policy_metric), fmt(row.confidence_metric),
                          fmt(row.oracle_metric)});
  }
  posthoc::write_text_file(
      out_dir / "sweep.csv",
      posthoc::to_csv({"rho", "threshold", "fraction", "mean_policy",
                       "mean_confidence", "mean_oracle"},
                      sweep_rows));

  std::vector<std::vector<std::string>> gap_rows;
  for (std::size_t i = 0; i < result.image_ids.size(); ++i) {
    gap_rows.push_back({result.image_ids[i], fmt(result.predicted_gap[i]),
                        fmt(result.true_gap[i])});
  }
  posthoc::write_text_file(
      out_dir / "gaps.csv",
      posthoc::to_csv({"image_id", "predicted_gap", "true_gap"}, gap_rows));

  nlohmann::ordered_json summary;
  summary["client_mean"] = result.client_mean;
  summary["all_offload_mean"] = result.all_offload_mean;
  posthoc::write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

  Manifest manifest;
  manifest.command = "offload-sweep";
  manifest.add_arg("in", in.string());
  manifest.add_arg("client", client);
  manifest.add_arg("servers", servers);
  manifest.add_arg("metric", metric);
  manifest.add_arg("iou", fmt(iou));
  manifest.add_arg("profile", profile);
  manifest.add_arg("lambda", fmt(lambda));
  manifest.add_arg("rho", rhos.empty() ? std::string("default") : rhos);
  manifest.add_arg("gap-guard", no_gap_guard ? "off" : "on");
  manifest.add_arg("seed", std::to_string(flags.seed));
  manifest.inputs = {in};
  manifest.outputs = {out_dir / "sweep.csv", out_dir / "gaps.csv",
                      out_dir / "summary.json"};
  manifest.write(out_dir / "manifest.json");
}

void cmd_select(const fs::path& in, const std::string& models,
                const std::string& metric, double iou,
                const std::string& profile, double lambda,
                const TrainingFlags& flags, const fs::path& out_dir) {
  const auto corpus = load_corpus(in, posthoc::Task::detection);

  posthoc::SelectionOptions options;
  options.metric = posthoc::parse_metric(metric);
  options.iou_threshold = iou;
  options.profile = posthoc::parse_profile(profile);
  options.ridge_lambda = lambda;
  options.boost = flags.boost();

  const auto model_ids = split_list(models);
  const auto result = posthoc::run_model_selection(corpus, model_ids, options);

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < result.image_ids.size(); ++i) {
    rows.push_back({result.image_ids[i],
                    result.model_ids[static_cast<std::size_t>(result.chosen[i])],
                    result.model_ids[static_cast<std::size_t>(result.oracle[i])],
                    fmt(result.chosen_metric[i])});
  }
  posthoc::write_text_file(
      out_dir / "selection.csv",
      posthoc::to_csv({"image_id", "chosen", "oracle", "metric"}, rows));

  // per-model means plus the assignment histogram
  std::vector<std::size_t> chosen_count(result.model_ids.size(), 0);
  std::vector<std::size_t> oracle_count(result.model_ids.size(), 0);
  for (const int pick : result.chosen) {
    ++chosen_count[static_cast<std::size_t>(pick)];
  }
  for (const int pick : result.oracle) {
    ++oracle_count[static_cast<std::size_t>(pick)];
  }
  std::vector<std::vector<std::string>> model_rows;
  for (std::size_t m = 0; m < result.model_ids.size(); ++m) {
    model_rows.push_back({result.model_ids[m], fmt(result.individual_mean[m]),
                          std::to_string(chosen_count[m]),
                          std::to_string(oracle_count[m])});
  }
  posthoc::write_text_file(
      out_dir / "models.csv",
      posthoc::to_csv({"model_id", "mean_metric", "chosen_count",
                       "oracle_count"},
                      model_rows));

  nlohmann::ordered_json summary;
  auto individual = nlohmann::ordered_json::object();
  for (std::size_t m = 0; m < result.model_ids.size(); ++m) {
    individual[result.model_ids[m]] = result.individual_mean[m];
  }
  summary["individual_mean"] = std::move(individual);
  summary["combined_mean"] = result.combined_mean;
  summary["oracle_mean"] = result.oracle_mean;
  posthoc::write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

  Manifest manifest;
  manifest.command = "select-model";
  manifest.add_arg("in", in.string());
  manifest.add_arg("models", models);
  manifest.add_arg("metric", metric);
  manifest.add_arg("iou", fmt(iou));
  manifest.add_arg("profile", profile);
  manifest.add_arg("lambda", fmt(lambda));
  manifest.add_arg("seed", std::to_string(flags.seed));
  manifest.inputs = {in};
  manifest.outputs = {out_dir / "selection.csv", out_dir / "models.csv",
                      out_dir / "summary.json"};
  manifest.write(out_dir / "manifest.json");
}

void write_shift_method(const fs::path& out_dir, const std::string& name,
                        const posthoc::ShiftMethodResult& method,
                        std::vector<fs::path>& outputs) {
  const auto report_path = out_dir / ("report_" + name + ".json");
  posthoc::write_text_file(report_path, posthoc::report_to_json(method.report));
  outputs.push_back(report_path);

  std::vector<std::vector<std::string>> rows;
  const auto& histogram = method.histogram;
  for (int j = 0; j < histogram.num_bins; ++j) {
    const double lo = static_cast<double>(j) / histogram.num_bins;
    const double hi = static_cast<double>(j + 1) / histogram.num_bins;
    rows.push_back({fmt(lo), fmt(hi),
                    std::to_string(histogram.correct[static_cast<std::size_t>(j)]),
                    std::to_string(
                        histogram.incorrect[static_cast<std::size_t>(j)])});
  }
  const auto histogram_path = out_dir / ("histogram_" + name + ".csv");
  posthoc::write_text_file(
      histogram_path,
      posthoc::to_csv({"bin_lo", "bin_hi", "correct", "incorrect"}, rows));
  outputs.push_back(histogram_path);
}

void cmd_shift(const fs::path& in, const std::string& model, int bins,
               const TrainingFlags& flags, const fs::path& out_dir) {
  const auto corpus = load_corpus(in, posthoc::Task::classification);

  posthoc::ShiftOptions options;
  options.num_bins = bins;
  options.boost = flags.boost();
  options.mlp = flags.mlp();

  const auto result = posthoc::run_dataset_shift(corpus, model, options);

  fs::create_directories(out_dir);
  std::vector<fs::path> outputs;
  write_shift_method(out_dir, "confidence", result.confidence, outputs);
  write_shift_method(out_dir, "boost", result.boost, outputs);
  write_shift_method(out_dir, "mlp", result.mlp, outputs);

  nlohmann::ordered_json summary;
  const std::vector<std::pair<std::string, const posthoc::ShiftMethodResult*>>
      methods = {{"confidence", &result.confidence},
                 {"boost", &result.boost},
                 {"mlp", &result.mlp}};
  for (const auto& [name, method] : methods) {
    nlohmann::ordered_json entry;
    entry["ece"] = method->report.ece;
    if (method->report.spearman) {
      entry["spearman"] = *method->report.spearman;
    } else {
      entry["spearman"] = nullptr;
    }
    summary[name] = std::move(entry);
  }
  posthoc::write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
  outputs.push_back(out_dir / "summary.json");

  Manifest manifest;
  manifest.command = "shift";
  manifest.add_arg("in", in.string());
  manifest.add_arg("model", model);
  manifest.add_arg("bins", std::to_string(bins));
  manifest.add_arg("seed", std::to_string(flags.seed));
  manifest.inputs = {in};
  manifest.outputs = outputs;
  manifest.write(out_dir / "manifest.json");
}

void cmd_sample_complexity(const fs::path& in, const std::string& task,
                           const std::string& model, const std::string& metric,
                           double iou, double lambda, const std::string& sizes,
                           int bins, const TrainingFlags& flags,
                           const fs::path& out_dir) {
  const auto corpus = load_corpus(in, posthoc::parse_task(task));

  posthoc::PredictorOptions options;
  options.estimator = posthoc::EstimatorKind::boost;
  options.metric = posthoc::parse_metric(metric);
  options.iou_threshold = iou;
  options.ridge_lambda = lambda;
  options.boost = flags.boost();

  std::vector<std::size_t> train_sizes;
  for (const int size : int_list(sizes)) {
    if (size < 2) throw ValidationError("--sizes entries must be >= 2");
    train_sizes.push_back(static_cast<std::size_t>(size));
  }
  const auto cells = posthoc::run_sample_complexity(
      corpus, model, train_sizes, options, flags.seed, bins);

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  for (const auto& cell : cells) {
    rows.push_back({std::to_string(cell.train_size),
                    posthoc::to_string(cell.profile), fmt(cell.ece),
                    cell.spearman ? fmt(*cell.spearman) : "nan"});
  }
  posthoc::write_text_file(
      out_dir / "complexity.csv",
      posthoc::to_csv({"train_size", "profile", "ece", "spearman"}, rows));

  Manifest manifest;
  manifest.command = "sample-complexity";
  manifest.add_arg("in", in.string());
  manifest.add_arg("task", task);
  manifest.add_arg("model", model);
  manifest.add_arg("metric", metric);
  manifest.add_arg("iou", fmt(iou));
  manifest.add_arg("lambda", fmt(lambda));
  manifest.add_arg("sizes", sizes);
  manifest.add_arg("bins", std::to_string(bins));
  manifest.add_arg("seed", std::to_string(flags.seed));
  manifest.inputs = {in};
  manifest.outputs = {out_dir / "complexity.csv"};
  manifest.write(out_dir / "manifest.json");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{
      "Per-image performance estimation for recorded model outputs: trains "
      "post-hoc estimators and applies them to model selection, offloading "
      "and dataset-shift analysis."};
  app.require_subcommand(1);

  try {
    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    fs::path synth_config;
    fs::path synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("--config", synth_config, "Generator config (JSON)")
        ->required();
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", synth_out, "Output corpus (JSONL)")->required();

    // split --------------------------------------------------------------
    auto* split = app.add_subcommand("split", "Assign train/test splits");
    fs::path split_in;
    fs::path split_out;
    std::string split_task = "detection";
    std::string split_fractions = "0.125,0.375,0.5";
    std::uint64_t split_seed = 0;
    split->add_option("--in", split_in, "Input corpus")->required();
    split->add_option("--task", split_task, "detection or classification");
    split->add_option("--fractions", split_fractions,
                      "train_fc,train_posthoc,test fractions");
    split->add_option("--seed", split_seed, "Permutation seed");
    split->add_option("--out", split_out, "Output corpus")->required();

    // resample -----------------------------------------------------------
    auto* resample =
        app.add_subcommand("resample", "Class-frequency resampling "
                                       "(classification)");
    fs::path resample_in;
    fs::path resample_out;
    std::string resample_classes;
    std::string resample_freqs;
    std::uint64_t resample_seed = 0;
    resample->add_option("--in", resample_in, "Input corpus")->required();
    resample->add_option("--classes", resample_classes, "Kept classes")
        ->required();
    resample->add_option("--freqs", resample_freqs, "Relative frequencies")
        ->required();
    resample->add_option("--seed", resample_seed, "Subsampling seed");
    resample->add_option("--out", resample_out, "Output corpus")->required();

    // eval-metrics ---------------------------------------------------------
    auto* eval = app.add_subcommand("eval-metrics",
                                    "Per-image true metric values");
    fs::path eval_in;
    fs::path eval_out;
    std::string eval_task = "detection";
    std::string eval_model;
    std::string eval_metric = "f1";
    double eval_iou = 0.5;
    eval->add_option("--in", eval_in, "Input corpus")->required();
    eval->add_option("--task", eval_task, "detection or classification");
    eval->add_option("--model", eval_model, "Model id")->required();
    eval->add_option("--metric", eval_metric,
                     "f1, precision, recall or accuracy");
    eval->add_option("--iou", eval_iou, "IoU threshold");
    eval->add_option("--out", eval_out, "Output CSV")->required();

    // train ----------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train a per-image estimator");
    fs::path train_in;
    fs::path train_out;
    std::string train_task = "detection";
    std::string train_model;
    std::string train_metric = "f1";
    std::string train_estimator = "boost";
    std::string train_profile = "full";
    double train_iou = 0.5;
    double train_lambda = 1e-3;
    TrainingFlags train_flags;
    train->add_option("--in", train_in, "Input corpus (with splits)")
        ->required();
    train->add_option("--task", train_task, "detection or classification");
    train->add_option("--model", train_model, "Model id")->required();
    train->add_option("--metric", train_metric,
                      "f1, precision, recall or accuracy");
    train->add_option("--estimator", train_estimator,
                      "boost, mlp, confidence, temp or vector");
    train->add_option("--profile", train_profile, "full or essential");
    train->add_option("--iou", train_iou, "IoU threshold");
    train->add_option("--lambda", train_lambda, "Ridge penalty for scorers");
    train_flags.attach(train);
    train->add_option("--out", train_out, "Output model file")->required();

    // predict ----------------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Apply a trained estimator");
    fs::path predict_in;
    fs::path predict_model;
    fs::path predict_out;
    std::string predict_split = "test";
    predict->add_option("--in", predict_in, "Input corpus")->required();
    predict->add_option("--model-file", predict_model, "Trained model file")
        ->required();
    predict->add_option("--split", predict_split,
                        "train_fc, train_posthoc, test or all");
    predict->add_option("--out", predict_out, "Output CSV")->required();

    // report ----------------------------------------------------------------
    auto* report = app.add_subcommand("report", "Calibration report from "
                                                "predictions");
    fs::path report_pred;
    fs::path report_dir;
    int report_bins = 10;
    std::string report_sensitivity;
    report->add_option("--pred", report_pred, "predictions CSV")->required();
    report->add_option("--bins", report_bins, "Reliability bin count");
    report->add_option("--sensitivity", report_sensitivity,
                       "Bin counts for the ECE sensitivity sweep");
    report->add_option("--out-dir", report_dir, "Output directory")
        ->required();

    // offload-sweep -----------------------------------------------------------
    auto* offload = app.add_subcommand("offload-sweep",
                                       "Device-server offloading sweep");
    fs::path offload_in;
    fs::path offload_dir;
    std::string offload_client;
    std::string offload_servers;
    std::string offload_metric = "f1";
    std::string offload_profile = "full";
    std::string offload_rhos;
    double offload_iou = 0.5;
    double offload_lambda = 1e-3;
    bool offload_no_guard = false;
    TrainingFlags offload_flags;
    offload->add_option("--in", offload_in, "Input corpus (with splits)")
        ->required();
    offload->add_option("--client", offload_client, "Client model id")
        ->required();
    offload->add_option("--servers", offload_servers,
                        "Comma-separated server model ids")
        ->required();
    offload->add_option("--metric", offload_metric,
                        "f1, precision, recall or accuracy");
    offload->add_option("--iou", offload_iou, "IoU threshold");
    offload->add_option("--profile", offload_profile, "full or essential");
    offload->add_option("--lambda", offload_lambda,
                        "Ridge penalty for scorers");
    offload->add_option("--rho", offload_rhos,
                        "Offload fractions (default 0,0.1,...,1)");
    offload->add_flag("--no-gap-guard", offload_no_guard,
                      "Allow offloading on negative predicted gaps");
    offload_flags.attach(offload);
    offload->add_option("--out-dir", offload_dir, "Output directory")
        ->required();

    // select-model ----------------------------------------------------------
    auto* select = app.add_subcommand("select-model",
                                      "Per-image model selection");
    fs::path select_in;
    fs::path select_dir;
    std::string select_models;
    std::string select_metric = "f1";
    std::string select_profile = "full";
    double select_iou = 0.5;
    double select_lambda = 1e-3;
    TrainingFlags select_flags;
    select->add_option("--in", select_in, "Input corpus (with splits)")
        ->required();
    select->add_option("--models", select_models,
                       "Comma-separated candidate model ids")
        ->required();
    select->add_option("--metric", select_metric,
                       "f1, precision, recall or accuracy");
    select->add_option("--iou", select_iou, "IoU threshold");
    select->add_option("--profile", select_profile, "full or essential");
    select->add_option("--lambda", select_lambda, "Ridge penalty for scorers");
    select_flags.attach(select);
    select->add_option("--out-dir", select_dir, "Output directory")
        ->required();

    // shift -------------------------------------------------------------------
    auto* shift = app.add_subcommand("shift", "Dataset-shift estimator "
                                              "comparison");
    fs::path shift_in;
    fs::path shift_dir;
    std::string shift_model;
    int shift_bins = 10;
    TrainingFlags shift_flags;
    shift->add_option("--in", shift_in, "Input corpus (with splits)")
        ->required();
    shift->add_option("--model", shift_model, "Model id")->required();
    shift->add_option("--bins", shift_bins, "Reliability bin count");
    shift_flags.attach(shift);
    shift->add_option("--out-dir", shift_dir, "Output directory")->required();

    // sample-complexity --------------------------------------------------------
    auto* complexity = app.add_subcommand(
        "sample-complexity", "Estimator quality vs training-set size");
    fs::path complexity_in;
    fs::path complexity_dir;
    std::string complexity_task = "detection";
    std::string complexity_model;
    std::string complexity_metric = "f1";
    std::string complexity_sizes;
    double complexity_iou = 0.5;
    double complexity_lambda = 1e-3;
    int complexity_bins = 10;
    TrainingFlags complexity_flags;
    complexity->add_option("--in", complexity_in, "Input corpus (with splits)")
        ->required();
    complexity->add_option("--task", complexity_task,
                           "detection or classification");
    complexity->add_option("--model", complexity_model, "Model id")
        ->required();
    complexity->add_option("--metric", complexity_metric,
                           "f1, precision, recall or accuracy");
    complexity->add_option("--iou", complexity_iou, "IoU threshold");
    complexity->add_option("--lambda", complexity_lambda,
                           "Ridge penalty for scorers");
    complexity->add_option("--sizes", complexity_sizes,
                           "Comma-separated train_posthoc sizes")
        ->required();
    complexity->add_option("--bins", complexity_bins, "Reliability bin count");
    complexity_flags.attach(complexity);
    complexity->add_option("--out-dir", complexity_dir, "Output directory")
        ->required();

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;  // usage problems are input validation failures
    }

    if (*synth) {
      cmd_synth(synth_config, synth_seed, synth_out);
    } else if (*split) {
      cmd_split(split_in, split_task, split_fractions, split_seed, split_out);
    } else if (*resample) {
      cmd_resample(resample_in, resample_classes, resample_freqs,
                   resample_seed, resample_out);
    } else if (*eval) {
      cmd_eval_metrics(eval_in, eval_task, eval_model, eval_metric, eval_iou,
                       eval_out);
    } else if (*train) {
      cmd_train(train_in, train_task, train_model, train_metric,
                train_estimator, train_profile, train_iou, train_lambda,
                train_flags, train_out);
    } else if (*predict) {
      cmd_predict(predict_in, predict_model, predict_split, predict_out);
    } else if (*report) {
      cmd_report(report_pred, report_bins, report_sensitivity, report_dir);
    } else if (*offload) {
      cmd_offload(offload_in, offload_client, offload_servers, offload_metric,
                  offload_iou, offload_profile, offload_lambda, offload_rhos,
                  offload_no_guard, offload_flags, offload_dir);
    } else if (*select) {
      cmd_select(select_in, select_models, select_metric, select_iou,
                 select_profile, select_lambda, select_flags, select_dir);
    } else if (*shift) {
      cmd_shift(shift_in, shift_model, shift_bins, shift_flags, shift_dir);
    } else if (*complexity) {
      cmd_sample_complexity(complexity_in, complexity_task, complexity_model,
                            complexity_metric, complexity_iou,
                            complexity_lambda, complexity_sizes,
                            complexity_bins, complexity_flags, complexity_dir);
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
