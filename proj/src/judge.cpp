#include "procau/judge.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace procau::judge {

using nlohmann::json;

namespace {

std::set<std::string> key_tokens(const std::string& text) {
    std::set<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            if (cur.size() >= 3) out.insert(cur);
            cur.clear();
        }
    }
    if (cur.size() >= 3) out.insert(cur);
    return out;
}

void validate_request(const JudgeRequest& req) {
    if (req.caption.empty()) throw InputError("judge request with empty caption");
}

} // namespace

// ---------------------------------------------------------------------------
// StubBackend

double StubBackend::coverage(const JudgeRequest& req) {
    validate_request(req);
    if (req.reference_events.empty()) return 0.0;
    const auto caption_tokens = key_tokens(req.caption);
    std::size_t covered = 0;
    for (const auto& event : req.reference_events) {
        const auto tokens = key_tokens(event);
        const bool hit = std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
            return caption_tokens.count(t) > 0;
        });
        if (hit) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(req.reference_events.size());
}

JudgeScore StubBackend::score(const JudgeRequest& req) {
    const double c = coverage(req);
    JudgeScore s;
    s.score = 1 + static_cast<int>(std::lround(9.0 * c));
    s.rationale = "covered " + std::to_string(static_cast<int>(std::lround(100.0 * c))) +
                  "% of reference events";
    s.backend = name();
    return s;
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(Options opts) : opts_(std::move(opts)) {
    if (opts_.url.empty()) throw InputError("judge endpoint URL not configured");
}

HttpBackend HttpBackend::from_env() {
    Options o;
    if (const char* url = std::getenv("PROCAU_JUDGE_URL")) o.url = url;
    if (const char* tok = std::getenv("PROCAU_JUDGE_TOKEN")) o.token = tok;
    return HttpBackend(std::move(o));
}

std::string HttpBackend::render_prompt(const JudgeRequest& req) {
    std::string p = "Rubric " + req.rubric_id +
                    ": rate how faithfully and completely the caption below covers the "
                    "reference events, as a single integer from 1 to 10. Reply with the "
                    "number only.\n\nCaption: " +
                    req.caption + "\n\nReference events:\n";
    for (const auto& e : req.reference_events) p += "- " + e + "\n";
    return p;
}

std::optional<int> HttpBackend::parse_score(const std::string& content) {
    for (std::size_t i = 0; i < content.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(content[i]))) continue;
        std::size_t j = i;
        while (j < content.size() && std::isdigit(static_cast<unsigned char>(content[j]))) ++j;
        return std::stoi(content.substr(i, j - i));
    }
    return std::nullopt;
}

std::string HttpBackend::post(const std::string& body) {
    const auto scheme_end = opts_.url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = opts_.url.find('/', host_start);
    const std::string host =
        path_start == std::string::npos ? opts_.url : opts_.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : opts_.url.substr(path_start);

    httplib::Client client(host);
    client.set_read_timeout(60, 0);
    httplib::Headers headers;
    if (!opts_.token.empty()) headers.emplace("Authorization", "Bearer " + opts_.token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) throw InternalError("judge POST failed: " + httplib::to_string(res.error()));
    if (res->status / 100 != 2)
        throw InternalError("judge returned HTTP " + std::to_string(res->status));
    return res->body;
}

JudgeScore HttpBackend::score(const JudgeRequest& req) {
    validate_request(req);
    json body;
    body["messages"] = json::array({json{{"role", "user"}, {"content", render_prompt(req)}}});

    std::string last_error;
    for (std::size_t attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(opts_.backoff_ms << (attempt - 1)));
        std::string reply_text;
        try {
            reply_text = post(body.dump());
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;
        }
        std::string content;
        try {
            const json reply = json::parse(reply_text);
            if (reply.contains("choices"))
                content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            else if (reply.contains("content"))
                content = reply.at("content").get<std::string>();
            else
                content = reply_text;
        } catch (const json::exception&) {
            content = reply_text;
        }
        const auto parsed = parse_score(content);
        if (!parsed) {
            last_error = "no integer in judge reply";
            continue;
        }
        if (*parsed < 1 || *parsed > 10) {
            last_error = "judge score " + std::to_string(*parsed) + " out of [1, 10]";
            continue;
        }
        JudgeScore s;
        s.score = *parsed;
        s.rationale = content;
        s.backend = name();
        return s;
    }
    throw InternalError("judge gave no usable reply after " +
                        std::to_string(opts_.max_retries + 1) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// FixtureBackend

struct FixtureBackend::Impl {
    std::filesystem::path path;
    std::shared_ptr<Backend> inner;
    std::map<std::string, json> replies;
    std::mutex mu;
    bool dirty = false;

    void flush() {
        std::lock_guard lock(mu);
        if (!dirty) return;
        json j = json::object();
        for (const auto& [k, v] : replies) j[k] = v;
        std::ofstream out(path);
        if (!out) throw InternalError("cannot write fixture '" + path.string() + "'");
        out << j.dump(2) << '\n';
        dirty = false;
    }
};

FixtureBackend::FixtureBackend(std::filesystem::path fixture_file,
                               std::shared_ptr<Backend> record_from)
    : impl_(std::make_shared<Impl>()) {
    impl_->path = std::move(fixture_file);
    impl_->inner = std::move(record_from);
    std::ifstream in(impl_->path);
    if (in) {
        json j;
        in >> j;
        for (auto it = j.begin(); it != j.end(); ++it) impl_->replies[it.key()] = it.value();
    } else if (!impl_->inner) {
        throw InputError("judge fixture '" + impl_->path.string() +
                         "' not found and no recorder set");
    }
}

FixtureBackend::~FixtureBackend() {
    try {
        impl_->flush();
    } catch (...) {
    }
}

std::string FixtureBackend::request_key(const JudgeRequest& req) {
    json j;
    j["caption"] = req.caption;
    j["reference_events"] = req.reference_events;
    j["rubric_id"] = req.rubric_id;
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

JudgeScore FixtureBackend::score(const JudgeRequest& req) {
    validate_request(req);
    const std::string key = request_key(req);
    {
        std::lock_guard lock(impl_->mu);
        if (auto it = impl_->replies.find(key); it != impl_->replies.end()) {
            JudgeScore s;
            s.score = it->second.at("score").get<int>();
            s.rationale = it->second.value("rationale", std::string());
            s.backend = name();
            return s;
        }
    }
    if (!impl_->inner)
        throw InputError("judge fixture has no reply for request " + key);
    JudgeScore s = impl_->inner->score(req);
    {
        std::lock_guard lock(impl_->mu);
        impl_->replies[key] = json{{"score", s.score}, {"rationale", s.rationale}};
        impl_->dirty = true;
    }
    s.backend = name();
    return s;
}

// ---------------------------------------------------------------------------
// Batch

std::vector<BatchItem> batch_score(std::span<const JudgeRequest> requests, Backend& backend,
                                   std::size_t concurrency) {
    if (concurrency < 1) throw InputError("batch_score: concurrency bound must be >= 1");
    std::vector<BatchItem> results(requests.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                results[i].score = backend.score(requests[i]);
                results[i].ok = true;
            } catch (const std::exception& e) {
                results[i].ok = false;
                results[i].error = e.what();
            }
        }
    };

    const std::size_t n_threads = std::min(concurrency, requests.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return results;
}

double mean_score(std::span<const BatchItem> items) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& it : items) {
        if (!it.ok) continue;
        sum += it.score;
        ++n;
    }
    if (n == 0) throw DomainError("mean_score: no successful scores");
    return std::round(10.0 * sum / static_cast<double>(n)) / 10.0;
}

} // namespace procau::judge
