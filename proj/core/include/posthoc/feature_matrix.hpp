#pragma once

#include <string>
#include <vector>

namespace posthoc {

// A named feature row. Names appear in canonical order and describe exactly
// the values present, so estimators can verify at predict time that they see
// the layout they were trained on.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t dim() const { return names.size(); }
};

// Stacks rows that must all share one name layout; mismatches are validation
// errors.
FeatureMatrix to_matrix(const std::vector<FeatureVector>& rows);

}  // namespace posthoc
