#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "procau/events.hpp"

namespace procau::causal {

// One CausalSample per line:
//   {"sample_id": ..., "candidates": [{"id":..., "text":...}, ...],
//    "effect":..., "cause_set":[...], "fabricated_set":[...], "none_option":...}
// Extra keys are preserved-by-ignoring so that producers may attach
// side-channel data (clip ranges, frame indices).
std::vector<CausalSample> load_samples_jsonl(const std::filesystem::path& path);
void save_samples_jsonl(const std::filesystem::path& path,
                        const std::vector<CausalSample>& samples);

// One PredictionRecord per line:
//   {"sample_id":..., "config":..., "predicted":[...]}   or
//   {"sample_id":..., "config":..., "none": true}
std::vector<PredictionRecord> load_predictions_jsonl(const std::filesystem::path& path);
void save_predictions_jsonl(const std::filesystem::path& path,
                            const std::vector<PredictionRecord>& preds);

// Parsers for a single line, exposed for streaming use; `line_no` feeds
// error messages.
CausalSample parse_sample_json(const std::string& line, std::size_t line_no);
PredictionRecord parse_prediction_json(const std::string& line, std::size_t line_no);

std::string sample_to_json(const CausalSample& s);
std::string prediction_to_json(const PredictionRecord& p);

} // namespace procau::causal
