#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "procau/errors.hpp"

namespace procau::forge {

// Providers (candidate text generator, language-model log-prob scorer,
// embedding scorer, clip synthesizer) are external services. The forge
// only speaks JSON request/response over an abstract transport so tests
// can replay recorded fixtures and deployments can point at a real
// endpoint.
class Transport {
public:
    virtual ~Transport() = default;
    virtual nlohmann::json call(const nlohmann::json& request) = 0;
    virtual std::string name() const = 0;
};

// Wraps a local callable; the default choice for synthetic pipelines.
class InProcessTransport : public Transport {
public:
    using Fn = std::function<nlohmann::json(const nlohmann::json&)>;
    explicit InProcessTransport(Fn fn) : fn_(std::move(fn)) {}
    nlohmann::json call(const nlohmann::json& request) override { return fn_(request); }
    std::string name() const override { return "in-process"; }

private:
    Fn fn_;
};

// Replays recorded responses keyed by a stable hash of the request; used
// for offline tests. In record mode it forwards to an inner transport and
// persists every reply.
class FixtureTransport : public Transport {
public:
    explicit FixtureTransport(std::filesystem::path fixture_file,
                              std::shared_ptr<Transport> record_from = nullptr);
    ~FixtureTransport() override;

    nlohmann::json call(const nlohmann::json& request) override;
    std::string name() const override { return "fixture"; }

    void flush();
    static std::string request_key(const nlohmann::json& request);

private:
    std::filesystem::path path_;
    std::shared_ptr<Transport> inner_;
    std::map<std::string, nlohmann::json> replies_;
    bool dirty_ = false;
};

// POSTs the request JSON to a fixed URL.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::string url, std::string bearer_token = {});
    nlohmann::json call(const nlohmann::json& request) override;
    std::string name() const override { return "http"; }

private:
    std::string host_;
    std::string path_;
    std::string token_;
};

} // namespace procau::forge
