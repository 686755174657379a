#include "procau/metrics.hpp"

#include <algorithm>
#include <unordered_map>

namespace procau::causal {

namespace {

std::int64_t intersection_count(const std::set<EventId>& a, const std::set<EventId>& b) {
    std::int64_t n = 0;
    for (const auto& id : a) n += b.count(id) ? 1 : 0;
    return n;
}

// Index a record list by sample id, rejecting duplicates.
std::unordered_map<std::string, const MatchedRecord*> index_by_id(const Records& records,
                                                                  const char* which) {
    std::unordered_map<std::string, const MatchedRecord*> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (!r.sample || !r.pred) throw InputError("null record in metric input");
        if (!out.emplace(r.sample->sample_id, &r).second)
            throw InputError(std::string(which) + " records: duplicate sample id '" +
                             r.sample->sample_id + "'");
    }
    return out;
}

} // namespace

Ratio per_sample_recall(const CausalSample& sample, const PredictionRecord& pred) {
    if (sample.sample_id != pred.sample_id)
        throw InputError("per_sample_recall: sample '" + sample.sample_id +
                         "' paired with prediction for '" + pred.sample_id + "'");
    if (sample.cause_set.empty())
        throw DomainError("per_sample_recall: sample '" + sample.sample_id +
                          "' has an empty cause set");
    if (pred.none_flag) return Ratio(0, static_cast<std::int64_t>(sample.cause_set.size()));
    return Ratio(intersection_count(sample.cause_set, pred.predicted),
                 static_cast<std::int64_t>(sample.cause_set.size()));
}

bool full_recall(const CausalSample& sample, const PredictionRecord& pred) {
    const Ratio r = per_sample_recall(sample, pred);
    return r.num == r.den;
}

MetricValue r_avg(const Records& records) {
    MetricValue out;
    out.denominator = static_cast<std::int64_t>(records.size());
    if (records.empty()) return out;
    Ratio sum;
    for (const auto& r : records) sum = sum + per_sample_recall(*r.sample, *r.pred);
    out.defined = true;
    out.exact = sum / static_cast<std::int64_t>(records.size());
    out.numerator = sum.num; // sum of recalls before the 1/D factor
    return out;
}

MetricValue acc(const Records& records) {
    MetricValue out;
    out.denominator = static_cast<std::int64_t>(records.size());
    if (records.empty()) return out;
    for (const auto& r : records) {
        if (!r.sample || !r.pred) throw InputError("null record in metric input");
        if (r.pred->none_flag) ++out.numerator;
    }
    out.defined = true;
    out.exact = Ratio(out.numerator, out.denominator);
    return out;
}

MetricValue flip_rate(const Records& verid, const Records& plaus,
                      std::vector<std::string>* warnings) {
    const auto v_index = index_by_id(verid, "Veridicality");
    const auto p_index = index_by_id(plaus, "Plausibility");
    for (const auto& [id, rec] : v_index) {
        (void)rec;
        if (!p_index.count(id))
            throw InputError("flip_rate: sample '" + id + "' has no Plausibility record");
    }

    MetricValue out;
    for (const auto& [id, p_rec] : p_index) {
        auto it = v_index.find(id);
        if (it == v_index.end())
            throw InputError("flip_rate: sample '" + id + "' has no Veridicality record");
        const CausalSample& sample = *p_rec->sample;
        if (!full_recall(*it->second->sample, *it->second->pred)) continue;
        ++out.denominator;

        const std::int64_t causes = static_cast<std::int64_t>(sample.cause_set.size());
        if (warnings && static_cast<std::int64_t>(sample.fabricated_set.size()) < causes)
            warnings->push_back("sample '" + id + "': |fabricated| < |causes|, flip impossible");
        const std::int64_t hits =
            p_rec->pred->none_flag
                ? 0
                : intersection_count(sample.fabricated_set, p_rec->pred->predicted);
        if (hits == causes) ++out.numerator;
    }
    if (out.denominator == 0) return out;
    out.defined = true;
    out.exact = Ratio(out.numerator, out.denominator);
    return out;
}

MetricValue non_flip_rate(const Records& verid, const Records& perturbed) {
    const auto v_index = index_by_id(verid, "Veridicality");
    const auto q_index = index_by_id(perturbed, "perturbed");
    for (const auto& [id, rec] : v_index) {
        (void)rec;
        if (!q_index.count(id))
            throw InputError("non_flip_rate: sample '" + id + "' has no perturbed record");
    }

    MetricValue out;
    for (const auto& [id, q_rec] : q_index) {
        auto it = v_index.find(id);
        if (it == v_index.end())
            throw InputError("non_flip_rate: sample '" + id + "' has no Veridicality record");
        if (!full_recall(*it->second->sample, *it->second->pred)) continue;
        ++out.denominator;
        if (full_recall(*q_rec->sample, *q_rec->pred)) ++out.numerator;
    }
    if (out.denominator == 0) return out;
    out.defined = true;
    out.exact = Ratio(out.numerator, out.denominator);
    return out;
}

std::map<ConfigLabel, MetricReport>
aggregate_report(const std::map<ConfigLabel, Records>& grouped) {
    std::map<ConfigLabel, MetricReport> reports;
    const Records* verid = nullptr;
    if (auto it = grouped.find(ConfigLabel::Veridicality); it != grouped.end())
        verid = &it->second;

    for (const auto& [config, records] : grouped) {
        MetricReport rep;
        rep.config = config;
        rep.num_samples = static_cast<std::int64_t>(records.size());
        rep.r_avg = r_avg(records);
        rep.acc = acc(records);
        if (config == ConfigLabel::Plausibility && verid)
            rep.fr = flip_rate(*verid, records, &rep.warnings);
        if ((config == ConfigLabel::Incongruence || config == ConfigLabel::Deprivation) && verid)
            rep.nfr = non_flip_rate(*verid, records);
        reports.emplace(config, std::move(rep));
    }
    return reports;
}

} // namespace procau::causal
