#include "procau/providers.hpp"

#include <fstream>

#include <httplib.h>

namespace procau::forge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// FixtureTransport

FixtureTransport::FixtureTransport(std::filesystem::path fixture_file,
                                   std::shared_ptr<Transport> record_from)
    : path_(std::move(fixture_file)), inner_(std::move(record_from)) {
    std::ifstream in(path_);
    if (in) {
        json j;
        in >> j;
        for (auto it = j.begin(); it != j.end(); ++it) replies_[it.key()] = it.value();
    } else if (!inner_) {
        throw InputError("fixture file '" + path_.string() + "' not found and no recorder set");
    }
}

FixtureTransport::~FixtureTransport() {
    try {
        flush();
    } catch (...) {
        // Destructor must not throw; a failed flush only loses recordings.
    }
}

std::string FixtureTransport::request_key(const json& request) {
    // FNV-1a over the canonical dump (nlohmann sorts object keys).
    const std::string dump = request.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json FixtureTransport::call(const json& request) {
    const std::string key = request_key(request);
    if (auto it = replies_.find(key); it != replies_.end()) return it->second;
    if (!inner_)
        throw InputError("fixture '" + path_.string() + "' has no reply for request " + key);
    json reply = inner_->call(request);
    replies_[key] = reply;
    dirty_ = true;
    return reply;
}

void FixtureTransport::flush() {
    if (!dirty_) return;
    json j = json::object();
    for (const auto& [k, v] : replies_) j[k] = v;
    std::ofstream out(path_);
    if (!out) throw InternalError("cannot write fixture '" + path_.string() + "'");
    out << j.dump(2) << '\n';
    dirty_ = false;
}

// ---------------------------------------------------------------------------
// HttpTransport

HttpTransport::HttpTransport(std::string url, std::string bearer_token)
    : token_(std::move(bearer_token)) {
    const auto scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        host_ = url;
        path_ = "/";
    } else {
        host_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
    if (scheme_end != std::string::npos) host_ = url.substr(0, path_start);
}

json HttpTransport::call(const json& request) {
    httplib::Client client(host_);
    client.set_read_timeout(30, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = client.Post(path_, headers, request.dump(), "application/json");
    if (!res)
        throw InternalError("provider POST to " + host_ + path_ + " failed: " +
                            httplib::to_string(res.error()));
    if (res->status / 100 != 2)
        throw InternalError("provider returned HTTP " + std::to_string(res->status));
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw InternalError(std::string("provider reply is not JSON: ") + e.what());
    }
}

} // namespace procau::forge
