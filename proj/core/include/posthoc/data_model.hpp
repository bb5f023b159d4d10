#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace posthoc {

enum class Task { detection, classification };

Task parse_task(const std::string& name);
std::string to_string(Task task);

// Split roles: train_fc trains calibrators / auxiliary scorers, train_posthoc
// trains the performance estimators, test is held out for evaluation.
enum class Split { train_fc, train_posthoc, test };

Split parse_split(const std::string& name);
std::string to_string(Split split);

// Axis-aligned box in normalized image coordinates, corners inclusive.
struct BBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }

  bool operator==(const BBox&) const = default;
};

struct GroundTruthObject {
  BBox bbox;
  int class_id = 0;

  bool operator==(const GroundTruthObject&) const = default;
};

struct Detection {
  BBox bbox;
  int class_id = 0;
  double confidence = 0.0;
  std::optional<double> objectness;

  bool operator==(const Detection&) const = default;
};

// One model's recorded output for one image. Exactly one of the two payloads
// is populated, matching the corpus task.
struct ModelOutput {
  std::vector<Detection> dets;   // detection task
  std::vector<double> logits;    // classification task

  bool operator==(const ModelOutput&) const = default;
};

struct ImageRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthObject> gt;           // detection task
  int true_class = -1;                         // classification task
  std::map<std::string, ModelOutput> models;   // keyed by model id
  std::optional<std::string> image_path;
  std::map<std::string, double> features;      // precomputed feature values

  bool operator==(const ImageRecord&) const = default;
};

struct Corpus {
  Task task = Task::detection;
  int num_classes = 0;
  std::vector<ImageRecord> records;
  // Present only after assign_splits (or when the input carried split tags).
  std::map<std::string, Split> splits;

  bool has_splits() const { return !splits.empty(); }
  std::vector<std::string> model_ids() const;

  bool operator==(const Corpus&) const = default;
};

// Index of the highest logit; ties resolve to the lowest index.
int predicted_class(const std::vector<double>& logits);

// Parses one record per line. Every violation reports the 1-based line
// number and the offending field. num_classes is derived: highest class id
// plus one (detection) or the logits length (classification).
Corpus ingest_jsonl(const std::string& text, Task task);
Corpus ingest_jsonl_file(const std::filesystem::path& path, Task task);

// Inverse of ingest; emits one JSON object per line in schema key order and
// round-trips exactly (shortest round-trip number formatting).
std::string serialize_jsonl(const Corpus& corpus);
void serialize_jsonl_file(const Corpus& corpus,
                          const std::filesystem::path& path);

struct SplitFractions {
  double train_fc = 0.125;
  double train_posthoc = 0.375;
  double test = 0.5;
};

// Seeded permutation split. Fractions must sum to 1; a zero fraction leaves
// that split empty. Record order within the corpus is preserved.
Corpus assign_splits(const Corpus& corpus, const SplitFractions& fractions,
                     std::uint64_t seed);

// Records belonging to one split, in corpus order. Requires splits assigned.
Corpus split_subset(const Corpus& corpus, Split split);

// Keeps only the listed classes and subsamples them (seeded, without
// replacement) so their record counts follow the given relative frequencies
// as closely as integer counts allow. The largest achievable corpus is
// taken: one kept class retains all its records. Classification corpora
// only; logits keep their original length, so num_classes is unchanged.
Corpus resample_shift(const Corpus& corpus, const std::vector<int>& kept_classes,
                      const std::vector<double>& frequencies,
                      std::uint64_t seed);

}  // namespace posthoc
