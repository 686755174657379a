#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "procau/errors.hpp"

namespace procau::judge {

struct JudgeRequest {
    std::string caption;
    std::vector<std::string> reference_events;
    std::string rubric_id = "coverage-v1";
};

struct JudgeScore {
    int score = 1; // 1..10
    std::string rationale;
    std::string backend;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual JudgeScore score(const JudgeRequest& req) = 0;
    virtual std::string name() const = 0;
};

// Deterministic offline rubric: 1 + round(9 * coverage), where coverage is
// the fraction of reference events whose key tokens (lowercased alphanumeric
// words of length >= 3) all appear in the caption. An event without key
// tokens counts as covered.
class StubBackend : public Backend {
public:
    JudgeScore score(const JudgeRequest& req) override;
    std::string name() const override { return "stub"; }

    static double coverage(const JudgeRequest& req);
};

// Chat-style JSON-over-HTTP judge. Sends the rendered rubric prompt as a
// single user message and parses the first integer in the reply content.
// Out-of-range or unparseable replies are retried up to `max_retries`
// with exponential backoff.
class HttpBackend : public Backend {
public:
    struct Options {
        std::string url;               // overrides PROCAU_JUDGE_URL
        std::string token;             // overrides PROCAU_JUDGE_TOKEN
        std::size_t max_retries = 3;
        int backoff_ms = 200;
    };

    explicit HttpBackend(Options opts);
    static HttpBackend from_env();

    JudgeScore score(const JudgeRequest& req) override;
    std::string name() const override { return "http"; }

    static std::string render_prompt(const JudgeRequest& req);
    static std::optional<int> parse_score(const std::string& content);

private:
    Options opts_;
    std::string post(const std::string& body);
};

// Replays recorded replies keyed by request hash; records through an inner
// backend when given one.
class FixtureBackend : public Backend {
public:
    explicit FixtureBackend(std::filesystem::path fixture_file,
                            std::shared_ptr<Backend> record_from = nullptr);
    ~FixtureBackend() override;

    JudgeScore score(const JudgeRequest& req) override;
    std::string name() const override { return "fixture"; }

    static std::string request_key(const JudgeRequest& req);

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

struct BatchItem {
    bool ok = false;
    JudgeScore score;
    std::string error;
};

// Scores a batch with at most `concurrency` requests in flight. Results
// are returned in request order; a failing item never aborts the batch.
std::vector<BatchItem> batch_score(std::span<const JudgeRequest> requests, Backend& backend,
                                   std::size_t concurrency);

// Mean of successful scores, reported to one decimal.
double mean_score(std::span<const BatchItem> items);

} // namespace procau::judge
