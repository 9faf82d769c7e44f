#pragma once

// Chat-completion transport seam. Live HTTP, recording, and replay
// implementations share one interface so inference never needs a live model
// under test.

#include "screening/label.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

namespace screening {

struct ChatRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_new_tokens = 8;
    bool greedy = false;
    std::string model;
};

struct ChatResponse {
    std::string text;
    double latency_seconds = 0.0;
};

/// "<sha256(prompt)>@<temperature>" with the temperature printed in shortest
/// round-trip form.
std::string request_fingerprint(const ChatRequest& request);

std::string format_temperature(double t);

class TransportError : public Error {
public:
    enum class Kind {
        Unreachable, ///< no connection could be made
        Failed,      ///< connected, but the request did not yield a usable answer
    };
    TransportError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Raised by ReplayTransport when a fingerprint has no recording.
class ReplayMiss : public Error {
public:
    using Error::Error;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Must be safe to call concurrently.
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    /// Stable description written into run ledgers.
    virtual std::string identity() const = 0;
};

/// OpenAI-compatible chat completion endpoint: POST {messages, temperature,
/// max_tokens}; reads choices[0].message.content. The bearer token, when
/// present, is taken from the named environment variable.
class HttpTransport : public Transport {
public:
    static constexpr const char* kDefaultKeyVariable = "SCREENING_API_KEY";

    HttpTransport(std::string endpoint_url, double timeout_seconds,
                  std::string key_variable = kDefaultKeyVariable);

    ChatResponse complete(const ChatRequest& request) override;
    std::string identity() const override { return url_; }

private:
    std::string url_;
    std::string origin_; ///< scheme://host[:port]
    std::string path_;
    double timeout_;
    std::string api_key_;
};

/// Wraps another transport and appends every successful exchange to a
/// line-delimited record file usable by ReplayTransport.
class RecordingTransport : public Transport {
public:
    RecordingTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& record_path);

    ChatResponse complete(const ChatRequest& request) override;
    std::string identity() const override { return inner_->identity(); }

private:
    std::unique_ptr<Transport> inner_;
    std::mutex mutex_;
    std::ofstream out_;
};

/// Serves responses from a record file. A miss throws ReplayMiss; there is
/// no live fallback.
class ReplayTransport : public Transport {
public:
    explicit ReplayTransport(const std::filesystem::path& record_path);

    ChatResponse complete(const ChatRequest& request) override;
    /// "replay:" + hash of the record file contents (path independent).
    std::string identity() const override { return identity_; }

    std::size_t size() const { return responses_.size(); }
    std::size_t calls() const { return calls_.load(); }

private:
    std::unordered_map<std::string, ChatResponse> responses_;
    std::string identity_;
    std::atomic<std::size_t> calls_{0};
};

/// One transport record line, as written by RecordingTransport.
std::string transport_record_line(const ChatRequest& request, const ChatResponse& response);

} // namespace screening
