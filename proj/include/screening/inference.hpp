#pragma once

#include "screening/label.hpp"
#include "screening/transport.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screening {

struct DecisionKeyword {
    std::string text; ///< matched case-insensitively as a substring
    ScreeningLabel label;

    friend bool operator==(const DecisionKeyword&, const DecisionKeyword&) = default;
};

/// {"include" -> Include, "exclude" -> Exclude}
const std::vector<DecisionKeyword>& default_keywords();

struct InferenceConfig {
    std::vector<double> temperatures{0.1, 0.4, 0.8};
    int max_new_tokens = 8;
    /// Ask the endpoint for greedy decoding regardless of the pass temperature.
    bool force_greedy = false;
    ScreeningLabel majority_class = ScreeningLabel::Exclude;
    double request_timeout = 60.0;
    /// Retries after the first attempt (2 => 3 attempts in total).
    int max_retries = 2;
    /// First backoff delay; doubles on each further retry.
    double retry_backoff = 0.5;
    int concurrency_limit = 4;
    std::string model;
    std::vector<DecisionKeyword> keywords = default_keywords();

    void validate() const;
};

enum class ParseRoute { Digit, Keyword, Fallback };

std::string_view parse_route_name(ParseRoute r);
ParseRoute parse_route_from_name(std::string_view name);

struct ParsedDecision {
    ScreeningLabel decision;
    ParseRoute route;

    friend bool operator==(const ParsedDecision&, const ParsedDecision&) = default;
};

/// Total function. The first '0' or '1' character decides; failing that the
/// earliest keyword occurrence decides (ties go to the earlier list entry);
/// failing that the majority class is returned.
ParsedDecision parse_decision(std::string_view raw_text, ScreeningLabel majority_class,
                              std::span<const DecisionKeyword> keywords = default_keywords());

struct PromptItem {
    std::string study_id;
    std::string prompt;
};

struct PredictionRecord {
    std::string study_id;
    double temperature = 0.0;
    std::string raw_text;
    ScreeningLabel decision = ScreeningLabel::Exclude;
    ParseRoute route = ParseRoute::Fallback;
    double latency = 0.0;
    int attempts = 0;
    std::optional<std::string> error; ///< set when every attempt failed

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Raised when a run cannot continue (endpoint unreachable after retries).
/// Records already handed to the sink stay in the ledger.
class RunAborted : public Error {
public:
    using Error::Error;
};

using RecordSink = std::function<void(const PredictionRecord&)>;

/// One record per item, returned in item order. At most concurrency_limit
/// requests are in flight. The sink, if given, sees records in item order as
/// soon as every earlier item has finished; if the pass aborts, the remaining
/// finished records are handed over before the exception. Requests that fail after all
/// retries become majority-class fallbacks with an error annotation, except
/// that an unreachable endpoint aborts the pass (RunAborted) and a replay miss
/// propagates as ReplayMiss.
std::vector<PredictionRecord> run_pass(std::span<const PromptItem> items, double temperature,
                                       const InferenceConfig& config, Transport& transport,
                                       const RecordSink& sink = {});

struct PassRecords {
    double temperature = 0.0;
    std::vector<PredictionRecord> records;
};

struct RunLedger {
    std::string run_id;
    InferenceConfig config;
    std::string endpoint;
    std::vector<PassRecords> passes; ///< one per configured temperature, config order
    bool complete = false;

    const PassRecords* pass(double temperature) const;
    const PredictionRecord* find(std::string_view study_id, double temperature) const;
    std::size_t record_count() const;

    /// Throws unless the run is marked complete and every pass covers the same
    /// ids exactly once.
    void require_complete() const;
};

/// Deterministic id over the decision-relevant config and the prompts.
std::string compute_run_id(std::span<const PromptItem> items, const InferenceConfig& config);

/// Runs every configured temperature in order, appending to ledger_path as
/// records complete. With resume=true an existing ledger for the same run is
/// continued and already-recorded (study, temperature) pairs are not queried
/// again; without it an existing ledger is an error. An empty ledger_path
/// keeps everything in memory.
RunLedger run_multi_pass(std::span<const PromptItem> items, const InferenceConfig& config, Transport& transport,
                         const std::filesystem::path& ledger_path = {}, bool resume = false);

RunLedger parse_ledger(std::string_view text);
RunLedger load_ledger(const std::filesystem::path& path);

std::string ledger_header_line(const RunLedger& ledger);
std::string ledger_record_line(const PredictionRecord& record);
std::string ledger_complete_line();

} // namespace screening
