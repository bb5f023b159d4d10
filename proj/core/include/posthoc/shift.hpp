#pragma once

#include <string>
#include <vector>

#include "posthoc/calibration.hpp"
#include "posthoc/data_model.hpp"
#include "posthoc/pipeline.hpp"

namespace posthoc {

struct ShiftOptions {
  int num_bins = 10;
  BoostConfig boost;
  MlpConfig mlp;
};

// Correct/incorrect image counts per predicted-confidence bin.
struct ShiftHistogram {
  int num_bins = 10;
  std::vector<std::size_t> correct;
  std::vector<std::size_t> incorrect;
};

struct ShiftMethodResult {
  std::vector<double> predicted;  // test split order
  CalibrationReport report;
  ShiftHistogram histogram;
};

// Post-hoc estimation under dataset shift, classification corpora only.
// A vector scaler fitted on train_fc recalibrates the logits; the boosted
// and MLP estimators are trained on train_posthoc to predict whether the
// calibrated argmax is correct; the calibrated maximum softmax probability
// serves as the confidence baseline. All three are evaluated on the test
// split against the same correctness truth.
struct ShiftResult {
  VectorScaler calibrator;
  std::vector<std::string> image_ids;  // test split order
  std::vector<double> truth;           // calibrated argmax correctness, 0/1
  ShiftMethodResult confidence;
  ShiftMethodResult boost;
  ShiftMethodResult mlp;
};

ShiftResult run_dataset_shift(const Corpus& corpus, const std::string& model_id,
                              const ShiftOptions& options);

}  // namespace posthoc
