#pragma once

#include <filesystem>
#include <string>

#include "posthoc/pipeline.hpp"

namespace posthoc {

// JSON round-trip for trained predictors. Numbers use shortest round-trip
// formatting, so save/load reproduces predictions bit for bit. Files carry a
// format tag and version, both checked on load.
std::string predictor_to_json(const Predictor& predictor);
Predictor predictor_from_json(const std::string& text);

void save_predictor(const Predictor& predictor,
                    const std::filesystem::path& path);
Predictor load_predictor(const std::filesystem::path& path);

}  // namespace posthoc
