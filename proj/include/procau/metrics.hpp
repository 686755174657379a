#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "procau/events.hpp"
#include "procau/ratio.hpp"

namespace procau::causal {

// A (sample, prediction) pair after id matching and validation.
struct MatchedRecord {
    const CausalSample* sample = nullptr;
    const PredictionRecord* pred = nullptr;
};

using Records = std::vector<MatchedRecord>;

// A rate with its exact fraction and denominator. `defined` is false
// exactly when the denominator is zero; the double is never silently 0 in
// that case.
struct MetricValue {
    bool defined = false;
    Ratio exact;
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;

    double value() const { return exact.value(); }
};

// Per-configuration metric block mirroring one row group of the protocol's
// result table.
struct MetricReport {
    ConfigLabel config = ConfigLabel::Veridicality;
    std::int64_t num_samples = 0;
    MetricValue r_avg;
    MetricValue acc;
    MetricValue fr;
    MetricValue nfr;
    std::vector<std::string> warnings;
};

// Recall of the true cause set: |E_c ∩ Ê_c| / |E_c|. Extra predicted
// events are ignored; a none answer scores 0 against a non-empty cause
// set. Throws DomainError when the sample has no causes (the metric is
// undefined there) and InputError on id mismatch.
Ratio per_sample_recall(const CausalSample& sample, const PredictionRecord& pred);

// Arithmetic mean of per_sample_recall over the record list. Exact
// rational; undefined on an empty list.
MetricValue r_avg(const Records& records);

// Fraction of records answering exactly the none option.
MetricValue acc(const Records& records);

// Among samples answered with full recall under Veridicality, the fraction
// whose Plausibility prediction fully matches the fabricated set, using
// the literal indicator |E_f ∩ Ê_c| / |E_c| = 1. When |E_f| < |E_c| a flip
// is impossible and a warning is appended for that sample. Undefined when
// no sample is Veridicality-correct.
MetricValue flip_rate(const Records& verid, const Records& plaus,
                      std::vector<std::string>* warnings = nullptr);

// Among Veridicality-correct samples, the fraction whose prediction under
// the video-perturbed configuration still has full recall. Undefined when
// the denominator set is empty.
MetricValue non_flip_rate(const Records& verid, const Records& perturbed);

// Builds one MetricReport per configuration present in `grouped`.
// Cross-configuration rates (FR for Plausibility, NFR for Incongruence and
// Deprivation) are filled from the Veridicality group when it exists and
// are left undefined otherwise.
std::map<ConfigLabel, MetricReport>
aggregate_report(const std::map<ConfigLabel, Records>& grouped);

// True when the prediction recalls every true cause (the correctness
// indicator shared by FR and NFR).
bool full_recall(const CausalSample& sample, const PredictionRecord& pred);

} // namespace procau::causal
