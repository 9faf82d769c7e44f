#include "screening/transport.hpp"

#include "screening/util.hpp"

#include "httplib.h"
#include "json.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <sstream>

namespace screening {

using json = nlohmann::ordered_json;

std::string format_temperature(double t) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t);
    if (ec != std::errc{}) throw Error("cannot format temperature");
    return std::string(buf, ptr);
}

std::string request_fingerprint(const ChatRequest& request) {
    return sha256_hex(request.prompt) + "@" + format_temperature(request.temperature);
}

std::string transport_record_line(const ChatRequest& request, const ChatResponse& response) {
    json j;
    j["fingerprint"] = request_fingerprint(request);
    j["temperature"] = request.temperature;
    j["response"] = response.text;
    j["latency"] = response.latency_seconds;
    return j.dump();
}

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(std::string endpoint_url, double timeout_seconds, std::string key_variable)
    : url_(std::move(endpoint_url)), timeout_(timeout_seconds) {
    const auto scheme_end = url_.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint must be an http(s) URL: " + url_);
    const auto scheme = url_.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw Error("unsupported endpoint scheme: " + scheme);
    const auto path_start = url_.find('/', scheme_end + 3);
    origin_ = url_.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/v1/chat/completions" : url_.substr(path_start);
    if (const char* key = std::getenv(key_variable.c_str())) api_key_ = key;
}

ChatResponse HttpTransport::complete(const ChatRequest& request) {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(timeout_);
    const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    json body;
    if (!request.model.empty()) body["model"] = request.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.greedy ? 0.0 : request.temperature;
    body["max_tokens"] = request.max_new_tokens;

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!res) {
        const auto err = res.error();
        const auto kind = err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout ||
                                  err == httplib::Error::SSLConnection
                              ? TransportError::Kind::Unreachable
                              : TransportError::Kind::Failed;
        throw TransportError(kind, "request to " + url_ + " failed: " + httplib::to_string(err));
    }
    if (res->status != 200)
        throw TransportError(TransportError::Kind::Failed,
                             "endpoint " + url_ + " returned HTTP " + std::to_string(res->status));
    try {
        const auto j = json::parse(res->body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        return {content.is_null() ? std::string() : content.get<std::string>(), latency};
    } catch (const json::exception& e) {
        throw TransportError(TransportError::Kind::Failed, std::string("malformed completion response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

RecordingTransport::RecordingTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& record_path)
    : inner_(std::move(inner)) {
    if (record_path.has_parent_path()) std::filesystem::create_directories(record_path.parent_path());
    out_.open(record_path, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot open transport record file: " + record_path.string());
}

ChatResponse RecordingTransport::complete(const ChatRequest& request) {
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    out_ << transport_record_line(request, response) << '\n';
    out_.flush();
    return response;
}

// ---------------------------------------------------------------------------

ReplayTransport::ReplayTransport(const std::filesystem::path& record_path) {
    if (!std::filesystem::exists(record_path))
        throw ReplayMiss("replay miss: record file " + record_path.string() + " does not exist");
    const std::string text = read_text_file(record_path);
    identity_ = "replay:" + sha256_hex(text).substr(0, 16);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            // later lines win, matching append-only re-recording
            responses_[j.at("fingerprint").get<std::string>()] =
                ChatResponse{j.at("response").get<std::string>(), j.value("latency", 0.0)};
        } catch (const json::exception& e) {
            throw Error("transport record line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

ChatResponse ReplayTransport::complete(const ChatRequest& request) {
    ++calls_;
    const auto fp = request_fingerprint(request);
    auto it = responses_.find(fp);
    if (it == responses_.end()) throw ReplayMiss("replay miss: no recorded response for " + fp);
    return it->second;
}

} // namespace screening
