#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posthoc/data_model.hpp"

namespace posthoc {

// Ties every detection confidence of an image to the image's F1 through a
// noisy affine link: all detections share one confidence c ~ U(lo, hi), and
// the number of class-corrupted detections is chosen so that the realized F1
// approximates offset + slope * c (+ a per-class term when class_effect is
// non-zero). Geometry stays exact, so the realized F1 is exactly
// (kept correct)/(objects).
struct F1LinkSpec {
  double offset = 0.2;
  double slope = 0.6;
  double noise_sigma = 0.05;
  double conf_lo = 0.05;
  double conf_hi = 0.95;
  double class_effect = 0.0;
};

struct DetectionModelSpec {
  std::string model_id;
  double miss_rate = 0.0;
  double fp_rate = 0.0;        // mean false positives per image (Poisson)
  double jitter = 0.0;         // box shift, fraction of box size, at most 0.15
  double conf_quality = 1.0;   // 1 = confidence equals correctness
  double wrong_class_rate = 0.0;
  int corrupt_min_objects = 0; // wrong classes only when the image has more
  bool with_objectness = false;
  std::optional<F1LinkSpec> f1_link;
};

struct ClassificationModelSpec {
  std::string model_id;
  double distort_scale = 1.0;
  double distort_power = 1.0;          // z -> sign(z)|z|^p before scaling
  std::vector<double> distort_shift;   // empty means zeros
};

struct SyntheticConfig {
  Task task = Task::detection;
  int num_images = 0;
  int num_classes = 1;
  int min_objects = 1;
  int max_objects = 4;
  int width = 640;
  int height = 480;
  // Attach plausible precomputed hist_entropy / num_corners values so the
  // full feature profile works without raster images.
  bool feature_stubs = true;
  double logit_spread = 2.0;  // classification: std dev of the base logits
  std::vector<DetectionModelSpec> det_models;
  std::vector<ClassificationModelSpec> cls_models;
};

// Deterministic synthetic corpus. Ground-truth boxes sit in disjoint cells
// of a per-image grid, so each detection overlaps at most one same-class
// object above any IoU threshold of 0.5 or higher and per-image metrics are
// exactly controlled by the injected corruptions. With all noise knobs at
// zero every per-image metric is 1.
Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Config parsing for the command-line generator; unknown keys are rejected.
SyntheticConfig synthetic_config_from_json(const std::string& text);

}  // namespace posthoc
