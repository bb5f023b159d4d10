#include "posthoc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "posthoc/errors.hpp"
#include "posthoc/rng.hpp"

namespace posthoc {

namespace {

void check_config(const SyntheticConfig& config) {
  if (config.num_images < 1) {
    throw ValidationError("synthetic: num_images must be >= 1");
  }
  if (config.num_classes < 1) {
    throw ValidationError("synthetic: num_classes must be >= 1");
  }
  if (config.min_objects < 0 || config.max_objects < config.min_objects) {
    throw ValidationError("synthetic: need 0 <= min_objects <= max_objects");
  }
  if (config.width < 16 || config.height < 16) {
    throw ValidationError("synthetic: width and height must be >= 16");
  }
  const bool detection = config.task == Task::detection;
  if (detection && config.det_models.empty()) {
    throw ValidationError("synthetic: detection task needs det_models");
  }
  if (!detection && config.cls_models.empty()) {
    throw ValidationError("synthetic: classification task needs cls_models");
  }
  std::set<std::string> ids;
  for (const auto& spec : config.det_models) {
    if (spec.model_id.empty() || !ids.insert(spec.model_id).second) {
      throw ValidationError("synthetic: model ids must be unique and non-empty");
    }
    const bool unit_ok =
        spec.miss_rate >= 0.0 && spec.miss_rate <= 1.0 &&
        spec.wrong_class_rate >= 0.0 && spec.wrong_class_rate <= 1.0 &&
        spec.conf_quality >= 0.0 && spec.conf_quality <= 1.0;
    if (!unit_ok || spec.fp_rate < 0.0) {
      throw ValidationError("synthetic: rates must lie in their unit ranges");
    }
    if (spec.jitter < 0.0 || spec.jitter > 0.15) {
      // Above 0.15 a shifted box can drop under IoU 0.5 with its source.
      throw ValidationError("synthetic: jitter must lie in [0, 0.15]");
    }
    if (spec.f1_link) {
      const auto& link = *spec.f1_link;
      if (!(link.conf_lo >= 0.0 && link.conf_lo <= link.conf_hi &&
            link.conf_hi <= 1.0) ||
          link.noise_sigma < 0.0) {
        throw ValidationError("synthetic: malformed f1_link spec");
      }
      if (config.num_classes < 2) {
        throw ValidationError(
            "synthetic: f1_link needs at least two classes to corrupt");
      }
    }
  }
  for (const auto& spec : config.cls_models) {
    if (spec.model_id.empty() || !ids.insert(spec.model_id).second) {
      throw ValidationError("synthetic: model ids must be unique and non-empty");
    }
    if (!(spec.distort_scale > 0.0) || !(spec.distort_power > 0.0)) {
      throw ValidationError(
          "synthetic: distort_scale and distort_power must be positive");
    }
    if (!spec.distort_shift.empty() &&
        spec.distort_shift.size() !=
            static_cast<std::size_t>(config.num_classes)) {
      throw ValidationError(
          "synthetic: distort_shift must have one entry per class");
    }
  }
  if (!detection && config.num_classes < 2) {
    throw ValidationError("synthetic: classification needs >= 2 classes");
  }
  if (!(config.logit_spread > 0.0)) {
    throw ValidationError("synthetic: logit_spread must be positive");
  }
}

// A box well inside the given grid cell; jitter up to 0.15 of the box size
// cannot push it into a same-cell conflict.
BBox box_in_cell(int row, int col, int grid, Rng& rng) {
  const double side = 1.0 / static_cast<double>(grid);
  const double inset = 0.05 * side;
  const double usable = side - 2.0 * inset;
  const double bw = rng.uniform(0.4, 0.8) * usable;
  const double bh = rng.uniform(0.4, 0.8) * usable;
  const double x0 =
      static_cast<double>(col) * side + inset + rng.uniform(0.0, usable - bw);
  const double y0 =
      static_cast<double>(row) * side + inset + rng.uniform(0.0, usable - bh);
  return BBox{x0, y0, x0 + bw, y0 + bh};
}

BBox jitter_box(const BBox& box, double jitter, Rng& rng) {
  const double dx = jitter * box.width() * rng.uniform(-1.0, 1.0);
  const double dy = jitter * box.height() * rng.uniform(-1.0, 1.0);
  BBox out{box.x0 + dx, box.y0 + dy, box.x1 + dx, box.y1 + dy};
  out.x0 = std::clamp(out.x0, 0.0, 1.0);
  out.y0 = std::clamp(out.y0, 0.0, 1.0);
  out.x1 = std::clamp(out.x1, 0.0, 1.0);
  out.y1 = std::clamp(out.y1, 0.0, 1.0);
  return out;
}

int wrong_class(int original, int num_classes, Rng& rng) {
  return static_cast<int>(
      (original + 1 + rng.uniform_int(0, num_classes - 2)) % num_classes);
}

double correctness_confidence(double quality, double correct, Rng& rng) {
  const double noise = rng.next_unit();
  return std::clamp(quality * correct + (1.0 - quality) * noise, 0.0, 1.0);
}

// Stable per-class weight in [-1, 1], independent of the corpus seed so the
// class effect is a fixed property of the class id.
double class_weight(int class_id) {
  Rng rng(0xC1A55EFFULL + static_cast<std::uint64_t>(class_id) * 0x9E3779B9ULL);
  return 2.0 * rng.next_unit() - 1.0;
}

void emit_f1_link(const std::vector<GroundTruthObject>& gt,
                  const F1LinkSpec& link, int num_classes, Rng& rng,
                  ModelOutput& output) {
  const auto k = gt.size();
  const double conf = rng.uniform(link.conf_lo, link.conf_hi);
  if (k == 0) return;  // empty image: perfect by convention, emit nothing

  double class_term = 0.0;
  if (link.class_effect != 0.0) {
    for (const auto& obj : gt) class_term += class_weight(obj.class_id);
    class_term = link.class_effect * class_term / static_cast<double>(k);
  }
  const double target = std::clamp(
      link.offset + link.slope * conf + class_term +
          rng.normal(0.0, link.noise_sigma),
      0.0, 1.0);
  const auto corrupted = static_cast<std::size_t>(std::clamp<long>(
      std::lround((1.0 - target) * static_cast<double>(k)), 0,
      static_cast<long>(k)));

  auto order = rng.permutation(k);
  std::vector<bool> corrupt(k, false);
  for (std::size_t i = 0; i < corrupted; ++i) corrupt[order[i]] = true;
  for (std::size_t i = 0; i < k; ++i) {
    Detection det;
    det.bbox = gt[i].bbox;
    det.class_id = corrupt[i] ? wrong_class(gt[i].class_id, num_classes, rng)
                              : gt[i].class_id;
    det.confidence = conf;
    output.dets.push_back(det);
  }
}

void emit_noisy_detections(const std::vector<GroundTruthObject>& gt,
                           const std::vector<std::size_t>& free_cells,
                           int grid, const DetectionModelSpec& spec,
                           int num_classes, Rng& rng, ModelOutput& output) {
  const auto k = static_cast<int>(gt.size());
  for (const auto& obj : gt) {
    if (spec.miss_rate > 0.0 && rng.next_unit() < spec.miss_rate) continue;
    Detection det;
    det.bbox = spec.jitter > 0.0 ? jitter_box(obj.bbox, spec.jitter, rng)
                                 : obj.bbox;
    bool correct = true;
    if (spec.wrong_class_rate > 0.0 && k > spec.corrupt_min_objects &&
        num_classes >= 2 && rng.next_unit() < spec.wrong_class_rate) {
      det.class_id = wrong_class(obj.class_id, num_classes, rng);
      correct = false;
    } else {
      det.class_id = obj.class_id;
    }
    det.confidence =
        correctness_confidence(spec.conf_quality, correct ? 1.0 : 0.0, rng);
    if (spec.with_objectness) {
      det.objectness =
          correctness_confidence(spec.conf_quality, correct ? 1.0 : 0.0, rng);
    }
    output.dets.push_back(det);
  }
  if (spec.fp_rate > 0.0) {
    const int wanted = rng.poisson(spec.fp_rate);
    const auto count =
        std::min<std::size_t>(static_cast<std::size_t>(wanted),
                              free_cells.size());
    for (std::size_t i = 0; i < count; ++i) {
      const auto cell = free_cells[i];
      Detection det;
      det.bbox = box_in_cell(static_cast<int>(cell) / grid,
                             static_cast<int>(cell) % grid, grid, rng);
      det.class_id = static_cast<int>(rng.uniform_int(0, num_classes - 1));
      det.confidence = correctness_confidence(spec.conf_quality, 0.0, rng);
      if (spec.with_objectness) {
        det.objectness = correctness_confidence(spec.conf_quality, 0.0, rng);
      }
      output.dets.push_back(det);
    }
  }
}

}  // namespace

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  check_config(config);

  Corpus corpus;
  corpus.task = config.task;
  corpus.num_classes = config.num_classes;

  Rng rng(seed);
  int class_cursor = 0;  // first C objects cover every class once
  for (int index = 0; index < config.num_images; ++index) {
    ImageRecord record;
    char id[32];
    std::snprintf(id, sizeof(id), "img_%06d", index);
    record.image_id = id;
    record.width = config.width;
    record.height = config.height;

    if (config.task == Task::detection) {
      const auto k = static_cast<std::size_t>(
          rng.uniform_int(config.min_objects, config.max_objects));
      const int grid = std::max(
          2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k) + 1.0))));
      auto cells = rng.permutation(static_cast<std::size_t>(grid) *
                                   static_cast<std::size_t>(grid));
      for (std::size_t i = 0; i < k; ++i) {
        GroundTruthObject obj;
        const auto cell = cells[i];
        obj.bbox = box_in_cell(static_cast<int>(cell) / grid,
                               static_cast<int>(cell) % grid, grid, rng);
        if (class_cursor < config.num_classes) {
          obj.class_id = class_cursor++;
        } else {
          obj.class_id =
              static_cast<int>(rng.uniform_int(0, config.num_classes - 1));
        }
        record.gt.push_back(obj);
      }
      const std::vector<std::size_t> free_cells(cells.begin() +
                                                    static_cast<std::ptrdiff_t>(k),
                                                cells.end());
      if (config.feature_stubs) {
        record.features["hist_entropy"] = rng.uniform(0.0, 3.4657);
        record.features["num_corners"] =
            static_cast<double>(rng.uniform_int(0, 400));
      }
      for (const auto& spec : config.det_models) {
        ModelOutput output;
        if (spec.f1_link) {
          emit_f1_link(record.gt, *spec.f1_link, config.num_classes, rng,
                       output);
        } else {
          emit_noisy_detections(record.gt, free_cells, grid, spec,
                                config.num_classes, rng, output);
        }
        record.models.emplace(spec.model_id, std::move(output));
      }
    } else {
      std::vector<double> base(static_cast<std::size_t>(config.num_classes));
      for (auto& z : base) z = rng.normal(0.0, config.logit_spread);
      // Draw the label from softmax(base), so the base logits are calibrated.
      double peak = *std::max_element(base.begin(), base.end());
      double total = 0.0;
      std::vector<double> probs(base.size());
      for (std::size_t j = 0; j < base.size(); ++j) {
        probs[j] = std::exp(base[j] - peak);
        total += probs[j];
      }
      const double pick = rng.next_unit() * total;
      double cumulative = 0.0;
      int label = config.num_classes - 1;
      for (std::size_t j = 0; j < probs.size(); ++j) {
        cumulative += probs[j];
        if (pick < cumulative) {
          label = static_cast<int>(j);
          break;
        }
      }
      record.true_class = label;
      if (config.feature_stubs) {
        record.features["hist_entropy"] = rng.uniform(0.0, 3.4657);
        record.features["num_corners"] =
            static_cast<double>(rng.uniform_int(0, 400));
      }
      for (const auto& spec : config.cls_models) {
        ModelOutput output;
        output.logits.resize(base.size());
        for (std::size_t j = 0; j < base.size(); ++j) {
          const double z = base[j];
          const double shaped =
              (z >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(z), spec.distort_power);
          const double shift =
              spec.distort_shift.empty() ? 0.0 : spec.distort_shift[j];
          output.logits[j] = spec.distort_scale * shaped + shift;
        }
        record.models.emplace(spec.model_id, std::move(output));
      }
    }
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::string& context,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, _] : object.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("synthetic config: " + context +
                            ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_into(const json& object, const char* key, T& out) {
  if (object.contains(key)) out = object.at(key).get<T>();
}

F1LinkSpec parse_f1_link(const json& object) {
  reject_unknown(object, "f1_link",
                 {"offset", "slope", "noise_sigma", "conf_lo", "conf_hi",
                  "class_effect"});
  F1LinkSpec link;
  read_into(object, "offset", link.offset);
  read_into(object, "slope", link.slope);
  read_into(object, "noise_sigma", link.noise_sigma);
  read_into(object, "conf_lo", link.conf_lo);
  read_into(object, "conf_hi", link.conf_hi);
  read_into(object, "class_effect", link.class_effect);
  return link;
}

}  // namespace

SyntheticConfig synthetic_config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("synthetic config: invalid JSON (") +
                          e.what() + ")");
  }
  if (!root.is_object()) {
    throw ValidationError("synthetic config: top level must be an object");
  }
  reject_unknown(root, "top level",
                 {"task", "num_images", "num_classes", "min_objects",
                  "max_objects", "width", "height", "feature_stubs",
                  "logit_spread", "models"});

  SyntheticConfig config;
  try {
    if (root.contains("task")) {
      config.task = parse_task(root.at("task").get<std::string>());
    }
    read_into(root, "num_images", config.num_images);
    read_into(root, "num_classes", config.num_classes);
    read_into(root, "min_objects", config.min_objects);
    read_into(root, "max_objects", config.max_objects);
    read_into(root, "width", config.width);
    read_into(root, "height", config.height);
    read_into(root, "feature_stubs", config.feature_stubs);
    read_into(root, "logit_spread", config.logit_spread);

    if (!root.contains("models") || !root.at("models").is_array()) {
      throw ValidationError("synthetic config: 'models' must be an array");
    }
    for (const auto& entry : root.at("models")) {
      if (!entry.is_object() || !entry.contains("model_id")) {
        throw ValidationError(
            "synthetic config: each model needs a 'model_id'");
      }
      if (config.task == Task::detection) {
        reject_unknown(entry, "model",
                       {"model_id", "miss_rate", "fp_rate", "jitter",
                        "conf_quality", "wrong_class_rate",
                        "corrupt_min_objects", "with_objectness", "f1_link"});
        DetectionModelSpec spec;
        spec.model_id = entry.at("model_id").get<std::string>();
        read_into(entry, "miss_rate", spec.miss_rate);
        read_into(entry, "fp_rate", spec.fp_rate);
        read_into(entry, "jitter", spec.jitter);
        read_into(entry, "conf_quality", spec.conf_quality);
        read_into(entry, "wrong_class_rate", spec.wrong_class_rate);
        read_into(entry, "corrupt_min_objects", spec.corrupt_min_objects);
        read_into(entry, "with_objectness", spec.with_objectness);
        if (entry.contains("f1_link")) {
          spec.f1_link = parse_f1_link(entry.at("f1_link"));
        }
        config.det_models.push_back(std::move(spec));
      } else {
        reject_unknown(entry, "model",
                       {"model_id", "distort_scale", "distort_power",
                        "distort_shift"});
        ClassificationModelSpec spec;
        spec.model_id = entry.at("model_id").get<std::string>();
        read_into(entry, "distort_scale", spec.distort_scale);
        read_into(entry, "distort_power", spec.distort_power);
        read_into(entry, "distort_shift", spec.distort_shift);
        config.cls_models.push_back(std::move(spec));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synthetic config: ") + e.what());
  }
  return config;
}

}  // namespace posthoc
