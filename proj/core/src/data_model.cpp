#include "posthoc/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "posthoc/errors.hpp"
#include "posthoc/rng.hpp"
#include "posthoc/text_io.hpp"

namespace posthoc {

using nlohmann::json;
using nlohmann::ordered_json;

Task parse_task(const std::string& name) {
  if (name == "detection") return Task::detection;
  if (name == "classification") return Task::classification;
  throw ValidationError("unknown task '" + name +
                        "' (expected detection or classification)");
}

std::string to_string(Task task) {
  return task == Task::detection ? "detection" : "classification";
}

Split parse_split(const std::string& name) {
  if (name == "train_fc") return Split::train_fc;
  if (name == "train_posthoc") return Split::train_posthoc;
  if (name == "test") return Split::test;
  throw ValidationError("unknown split '" + name +
                        "' (expected train_fc, train_posthoc or test)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train_fc: return "train_fc";
    case Split::train_posthoc: return "train_posthoc";
    default: return "test";
  }
}

std::vector<std::string> Corpus::model_ids() const {
  std::set<std::string> ids;
  for (const auto& record : records) {
    for (const auto& [id, _] : record.models) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

int predicted_class(const std::vector<double>& logits) {
  if (logits.empty()) throw ValidationError("predicted_class: empty logits");
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
    if (logits[static_cast<std::size_t>(i)] >
        logits[static_cast<std::size_t>(best)]) {
      best = i;
    }
  }
  return best;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ValidationError("line " + std::to_string(line) + ": " + message);
}

void require_keys(const json& object, std::size_t line,
                  const std::string& context,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, _] : object.items()) {
    if (!allowed.count(key)) {
      fail(line, context + ": unknown field '" + key + "'");
    }
  }
}

double number_field(const json& object, std::size_t line,
                    const std::string& field) {
  if (!object.contains(field)) fail(line, "missing field '" + field + "'");
  const auto& value = object.at(field);
  if (!value.is_number()) fail(line, "field '" + field + "' must be a number");
  const double out = value.get<double>();
  if (!std::isfinite(out)) fail(line, "field '" + field + "' must be finite");
  return out;
}

int int_field(const json& object, std::size_t line, const std::string& field) {
  if (!object.contains(field)) fail(line, "missing field '" + field + "'");
  const auto& value = object.at(field);
  if (!value.is_number_integer()) {
    fail(line, "field '" + field + "' must be an integer");
  }
  return value.get<int>();
}

double unit_field(const json& object, std::size_t line,
                  const std::string& field) {
  const double out = number_field(object, line, field);
  if (out < 0.0 || out > 1.0) {
    fail(line, "field '" + field + "' must lie in [0, 1]");
  }
  return out;
}

BBox parse_bbox(const json& value, std::size_t line,
                const std::string& context) {
  if (!value.is_array() || value.size() != 4) {
    fail(line, context + ": bbox must be an array of 4 numbers");
  }
  double c[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!value[i].is_number()) {
      fail(line, context + ": bbox must contain only numbers");
    }
    c[i] = value[i].get<double>();
    if (!std::isfinite(c[i]) || c[i] < 0.0 || c[i] > 1.0) {
      fail(line, context + ": bbox coordinates must lie in [0, 1]");
    }
  }
  if (c[0] > c[2] || c[1] > c[3]) {
    fail(line, context + ": bbox corners must satisfy x0 <= x1 and y0 <= y1");
  }
  return BBox{c[0], c[1], c[2], c[3]};
}

}  // namespace

Corpus ingest_jsonl(const std::string& text, Task task) {
  Corpus corpus;
  corpus.task = task;

  std::set<std::string> seen_ids;
  int logits_len = -1;
  int max_class_id = -1;
  bool any_split = false;

  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(line_no, std::string("invalid JSON (") + e.what() + ")");
    }
    if (!row.is_object()) fail(line_no, "record must be a JSON object");
    require_keys(row, line_no, "record",
                 {"image_id", "width", "height", "gt", "models", "image_path",
                  "features", "split"});

    ImageRecord record;
    if (!row.contains("image_id") || !row.at("image_id").is_string()) {
      fail(line_no, "field 'image_id' must be a string");
    }
    record.image_id = row.at("image_id").get<std::string>();
    if (record.image_id.empty()) fail(line_no, "field 'image_id' is empty");
    if (!seen_ids.insert(record.image_id).second) {
      fail(line_no, "duplicate image_id '" + record.image_id + "'");
    }

    record.width = int_field(row, line_no, "width");
    record.height = int_field(row, line_no, "height");
    if (record.width <= 0 || record.height <= 0) {
      fail(line_no, "fields 'width'/'height' must be positive");
    }

    if (task == Task::detection) {
      if (!row.contains("gt") || !row.at("gt").is_array()) {
        fail(line_no, "field 'gt' must be an array");
      }
      for (const auto& item : row.at("gt")) {
        if (!item.is_object()) fail(line_no, "gt entries must be objects");
        require_keys(item, line_no, "gt entry", {"bbox", "class"});
        GroundTruthObject obj;
        if (!item.contains("bbox")) fail(line_no, "gt entry: missing 'bbox'");
        obj.bbox = parse_bbox(item.at("bbox"), line_no, "gt entry");
        obj.class_id = int_field(item, line_no, "class");
        if (obj.class_id < 0) fail(line_no, "gt entry: 'class' must be >= 0");
        max_class_id = std::max(max_class_id, obj.class_id);
        record.gt.push_back(obj);
      }
    } else if (row.contains("gt")) {
      fail(line_no, "field 'gt' is not valid for classification records");
    }

    if (!row.contains("models") || !row.at("models").is_object()) {
      fail(line_no, "field 'models' must be an object");
    }
    if (row.at("models").empty()) {
      fail(line_no, "field 'models' must contain at least one model");
    }
    int record_true_class = -1;
    for (const auto& [model_id, payload] : row.at("models").items()) {
      if (model_id.empty()) fail(line_no, "empty model id");
      if (!payload.is_object()) {
        fail(line_no, "model '" + model_id + "': payload must be an object");
      }
      ModelOutput output;
      if (task == Task::detection) {
        require_keys(payload, line_no, "model '" + model_id + "'", {"dets"});
        if (!payload.contains("dets") || !payload.at("dets").is_array()) {
          fail(line_no, "model '" + model_id + "': 'dets' must be an array");
        }
        for (const auto& item : payload.at("dets")) {
          if (!item.is_object()) {
            fail(line_no, "model '" + model_id + "': det entries must be objects");
          }
          require_keys(item, line_no, "det entry",
                       {"bbox", "class", "conf", "obj"});
          Detection det;
          if (!item.contains("bbox")) fail(line_no, "det entry: missing 'bbox'");
          det.bbox = parse_bbox(item.at("bbox"), line_no, "det entry");
          det.class_id = int_field(item, line_no, "class");
          if (det.class_id < 0) fail(line_no, "det entry: 'class' must be >= 0");
          det.confidence = unit_field(item, line_no, "conf");
          if (item.contains("obj")) {
            det.objectness = unit_field(item, line_no, "obj");
          }
          max_class_id = std::max(max_class_id, det.class_id);
          output.dets.push_back(det);
        }
      } else {
        require_keys(payload, line_no, "model '" + model_id + "'",
                     {"logits", "true_class"});
        if (!payload.contains("logits") || !payload.at("logits").is_array() ||
            payload.at("logits").empty()) {
          fail(line_no,
               "model '" + model_id + "': 'logits' must be a non-empty array");
        }
        for (const auto& value : payload.at("logits")) {
          if (!value.is_number() || !std::isfinite(value.get<double>())) {
            fail(line_no, "model '" + model_id + "': logits must be finite numbers");
          }
          output.logits.push_back(value.get<double>());
        }
        const int len = static_cast<int>(output.logits.size());
        if (logits_len < 0) logits_len = len;
        if (len != logits_len) {
          fail(line_no, "model '" + model_id + "': logits length " +
                            std::to_string(len) + " differs from " +
                            std::to_string(logits_len) + " seen earlier");
        }
        const int true_class = int_field(payload, line_no, "true_class");
        if (true_class < 0 || true_class >= len) {
          fail(line_no, "model '" + model_id + "': 'true_class' out of range");
        }
        if (record_true_class < 0) record_true_class = true_class;
        if (true_class != record_true_class) {
          fail(line_no, "model '" + model_id +
                            "': 'true_class' disagrees across models");
        }
      }
      record.models.emplace(model_id, std::move(output));
    }
    record.true_class = record_true_class;

    if (row.contains("image_path")) {
      if (!row.at("image_path").is_string()) {
        fail(line_no, "field 'image_path' must be a string");
      }
      record.image_path = row.at("image_path").get<std::string>();
    }
    if (row.contains("features")) {
      if (!row.at("features").is_object()) {
        fail(line_no, "field 'features' must be an object");
      }
      for (const auto& [name, value] : row.at("features").items()) {
        if (!value.is_number() || !std::isfinite(value.get<double>())) {
          fail(line_no, "feature '" + name + "' must be a finite number");
        }
        record.features.emplace(name, value.get<double>());
      }
    }
    if (row.contains("split")) {
      if (!row.at("split").is_string()) {
        fail(line_no, "field 'split' must be a string");
      }
      try {
        corpus.splits.emplace(record.image_id,
                              parse_split(row.at("split").get<std::string>()));
      } catch (const ValidationError& e) {
        fail(line_no, e.what());
      }
      any_split = true;
    } else if (any_split) {
      fail(line_no, "field 'split' present on earlier records but missing here");
    }

    corpus.records.push_back(std::move(record));
  }

  if (corpus.records.empty()) {
    throw ValidationError("corpus is empty: no records found");
  }
  if (any_split && corpus.splits.size() != corpus.records.size()) {
    throw ValidationError("field 'split' must be present on all records or none");
  }
  corpus.num_classes = task == Task::detection ? max_class_id + 1 : logits_len;
  return corpus;
}

Corpus ingest_jsonl_file(const std::filesystem::path& path, Task task) {
  return ingest_jsonl(read_text_file(path), task);
}

namespace {

ordered_json bbox_json(const BBox& box) {
  return ordered_json::array({box.x0, box.y0, box.x1, box.y1});
}

}  // namespace

std::string serialize_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& record : corpus.records) {
    ordered_json row;
    row["image_id"] = record.image_id;
    row["width"] = record.width;
    row["height"] = record.height;
    if (corpus.task == Task::detection) {
      auto gt = ordered_json::array();
      for (const auto& obj : record.gt) {
        ordered_json item;
        item["bbox"] = bbox_json(obj.bbox);
        item["class"] = obj.class_id;
        gt.push_back(std::move(item));
      }
      row["gt"] = std::move(gt);
    }
    ordered_json models = ordered_json::object();
    for (const auto& [model_id, output] : record.models) {
      ordered_json payload;
      if (corpus.task == Task::detection) {
        auto dets = ordered_json::array();
        for (const auto& det : output.dets) {
          ordered_json item;
          item["bbox"] = bbox_json(det.bbox);
          item["class"] = det.class_id;
          item["conf"] = det.confidence;
          if (det.objectness) item["obj"] = *det.objectness;
          dets.push_back(std::move(item));
        }
        payload["dets"] = std::move(dets);
      } else {
        payload["logits"] = output.logits;
        payload["true_class"] = record.true_class;
      }
      models[model_id] = std::move(payload);
    }
    row["models"] = std::move(models);
    if (record.image_path) row["image_path"] = *record.image_path;
    if (!record.features.empty()) {
      ordered_json features = ordered_json::object();
      for (const auto& [name, value] : record.features) features[name] = value;
      row["features"] = std::move(features);
    }
    if (const auto it = corpus.splits.find(record.image_id);
        it != corpus.splits.end()) {
      row["split"] = to_string(it->second);
    }
    out << row.dump() << '\n';
  }
  return out.str();
}

void serialize_jsonl_file(const Corpus& corpus,
                          const std::filesystem::path& path) {
  write_text_file(path, serialize_jsonl(corpus));
}

Corpus assign_splits(const Corpus& corpus, const SplitFractions& fractions,
                     std::uint64_t seed) {
  const double sum =
      fractions.train_fc + fractions.train_posthoc + fractions.test;
  if (fractions.train_fc < 0.0 || fractions.train_posthoc < 0.0 ||
      fractions.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(
        "split fractions must be non-negative and sum to 1");
  }
  const std::size_t n = corpus.records.size();
  const auto n_fc = static_cast<std::size_t>(
      std::floor(fractions.train_fc * static_cast<double>(n)));
  const auto n_posthoc = static_cast<std::size_t>(
      std::floor(fractions.train_posthoc * static_cast<double>(n)));
  // Zero-fraction (empty) splits are allowed; operations that need a
  // particular split report the problem when they run.
  Rng rng(seed);
  const auto order = rng.permutation(n);
  Corpus out = corpus;
  out.splits.clear();
  for (std::size_t rank = 0; rank < n; ++rank) {
    const auto& id = corpus.records[order[rank]].image_id;
    if (rank < n_fc) {
      out.splits.emplace(id, Split::train_fc);
    } else if (rank < n_fc + n_posthoc) {
      out.splits.emplace(id, Split::train_posthoc);
    } else {
      out.splits.emplace(id, Split::test);
    }
  }
  return out;
}

Corpus split_subset(const Corpus& corpus, Split split) {
  if (!corpus.has_splits()) {
    throw ValidationError("corpus has no split assignments");
  }
  Corpus out;
  out.task = corpus.task;
  out.num_classes = corpus.num_classes;
  for (const auto& record : corpus.records) {
    const auto it = corpus.splits.find(record.image_id);
    if (it == corpus.splits.end()) {
      throw ValidationError("record '" + record.image_id +
                            "' has no split assignment");
    }
    if (it->second == split) {
      out.records.push_back(record);
      out.splits.emplace(record.image_id, split);
    }
  }
  return out;
}

Corpus resample_shift(const Corpus& corpus, const std::vector<int>& kept_classes,
                      const std::vector<double>& frequencies,
                      std::uint64_t seed) {
  if (corpus.task != Task::classification) {
    throw ValidationError("resample_shift requires a classification corpus");
  }
  if (kept_classes.empty() || kept_classes.size() != frequencies.size()) {
    throw ValidationError(
        "resample_shift needs one positive frequency per kept class");
  }
  std::set<int> distinct;
  for (std::size_t i = 0; i < kept_classes.size(); ++i) {
    const int cls = kept_classes[i];
    if (cls < 0 || cls >= corpus.num_classes) {
      throw ValidationError("kept class " + std::to_string(cls) +
                            " is out of range");
    }
    if (!distinct.insert(cls).second) {
      throw ValidationError("kept class " + std::to_string(cls) +
                            " listed twice");
    }
    if (!(frequencies[i] > 0.0)) {
      throw ValidationError("frequencies must be positive");
    }
  }

  // Record indices per kept class, in corpus order.
  std::vector<std::vector<std::size_t>> members(kept_classes.size());
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    for (std::size_t i = 0; i < kept_classes.size(); ++i) {
      if (corpus.records[r].true_class == kept_classes[i]) {
        members[i].push_back(r);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < kept_classes.size(); ++i) {
    if (members[i].empty()) {
      throw ValidationError("kept class " + std::to_string(kept_classes[i]) +
                            " has no records");
    }
  }

  // The class that runs out first (smallest available/frequency ratio) keeps
  // everything; the others scale down proportionally.
  std::size_t pivot = 0;
  double best_ratio = static_cast<double>(members[0].size()) / frequencies[0];
  for (std::size_t i = 1; i < kept_classes.size(); ++i) {
    const double ratio =
        static_cast<double>(members[i].size()) / frequencies[i];
    if (ratio < best_ratio) {
      best_ratio = ratio;
      pivot = i;
    }
  }

  Rng rng(seed);
  std::vector<bool> keep(corpus.records.size(), false);
  for (std::size_t i = 0; i < kept_classes.size(); ++i) {
    const double exact = static_cast<double>(members[pivot].size()) *
                         frequencies[i] / frequencies[pivot];
    auto target = static_cast<std::size_t>(std::floor(exact + 1e-9));
    target = std::min(target, members[i].size());
    rng.shuffle(members[i]);
    members[i].resize(target);
    for (const auto r : members[i]) keep[r] = true;
  }

  Corpus out;
  out.task = corpus.task;
  out.num_classes = corpus.num_classes;
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    if (!keep[r]) continue;
    out.records.push_back(corpus.records[r]);
    if (const auto it = corpus.splits.find(corpus.records[r].image_id);
        it != corpus.splits.end()) {
      out.splits.emplace(it->first, it->second);
    }
  }
  if (out.records.empty()) {
    throw ValidationError("resample_shift produced an empty corpus");
  }
  return out;
}

}  // namespace posthoc
