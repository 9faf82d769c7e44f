#include "screening/inference.hpp"

#include "screening/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace screening {

using json = nlohmann::ordered_json;

const std::vector<DecisionKeyword>& default_keywords() {
    static const std::vector<DecisionKeyword> k = {{"include", ScreeningLabel::Include},
                                                   {"exclude", ScreeningLabel::Exclude}};
    return k;
}

void InferenceConfig::validate() const {
    if (temperatures.empty()) throw Error("inference config: at least one temperature is required");
    std::set<double> seen;
    for (double t : temperatures) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw Error("inference config: temperatures must be finite and >= 0");
        if (!seen.insert(t).second) throw Error("inference config: duplicate temperature " + format_temperature(t));
    }
    if (max_new_tokens < 1) throw Error("inference config: max_new_tokens must be >= 1");
    if (max_retries < 0) throw Error("inference config: max_retries must be >= 0");
    if (concurrency_limit < 1) throw Error("inference config: concurrency_limit must be >= 1");
    if (!(request_timeout > 0.0)) throw Error("inference config: request_timeout must be positive");
    if (retry_backoff < 0.0) throw Error("inference config: retry_backoff must be >= 0");
    for (const auto& k : keywords)
        if (k.text.empty()) throw Error("inference config: empty decision keyword");
}

std::string_view parse_route_name(ParseRoute r) {
    switch (r) {
    case ParseRoute::Digit: return "digit";
    case ParseRoute::Keyword: return "keyword";
    case ParseRoute::Fallback: return "fallback";
    }
    return "fallback";
}

ParseRoute parse_route_from_name(std::string_view name) {
    if (name == "digit") return ParseRoute::Digit;
    if (name == "keyword") return ParseRoute::Keyword;
    if (name == "fallback") return ParseRoute::Fallback;
    throw Error("unknown parse route '" + std::string(name) + "'");
}

ParsedDecision parse_decision(std::string_view raw_text, ScreeningLabel majority_class,
                              std::span<const DecisionKeyword> keywords) {
    for (char c : raw_text) {
        if (c == '0') return {ScreeningLabel::Exclude, ParseRoute::Digit};
        if (c == '1') return {ScreeningLabel::Include, ParseRoute::Digit};
    }

    std::string lowered(raw_text);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::size_t best_pos = std::string::npos;
    const DecisionKeyword* best = nullptr;
    for (const auto& k : keywords) {
        std::string needle = k.text;
        std::transform(needle.begin(), needle.end(), needle.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        const auto pos = lowered.find(needle);
        if (pos != std::string::npos && (best == nullptr || pos < best_pos)) {
            best_pos = pos;
            best = &k;
        }
    }
    if (best) return {best->label, ParseRoute::Keyword};
    return {majority_class, ParseRoute::Fallback};
}

// ---------------------------------------------------------------------------

namespace {

PredictionRecord query_item(const PromptItem& item, double temperature, const InferenceConfig& config,
                            Transport& transport) {
    ChatRequest request{item.prompt, temperature, config.max_new_tokens,
                        config.force_greedy || temperature == 0.0, config.model};
    const int max_attempts = 1 + config.max_retries;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        try {
            const auto response = transport.complete(request);
            const auto parsed = parse_decision(response.text, config.majority_class, config.keywords);
            return {item.study_id, temperature,   response.text, parsed.decision,
                    parsed.route,  response.latency_seconds, attempt, std::nullopt};
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempt == max_attempts) {
                if (e.kind() == TransportError::Kind::Unreachable)
                    throw RunAborted("endpoint unreachable after " + std::to_string(max_attempts) +
                                     " attempt(s) on study '" + item.study_id + "': " + last_error);
                break;
            }
            const double delay = config.retry_backoff * std::pow(2.0, attempt - 1);
            if (delay > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
    }
    return {item.study_id, temperature, std::string(), config.majority_class, ParseRoute::Fallback,
            0.0,           max_attempts, last_error};
}

json config_json(const InferenceConfig& c, bool decision_fields_only) {
    json j;
    j["temperatures"] = c.temperatures;
    j["max_new_tokens"] = c.max_new_tokens;
    j["force_greedy"] = c.force_greedy;
    j["majority_class"] = to_int(c.majority_class);
    j["model"] = c.model;
    json kw = json::array();
    for (const auto& k : c.keywords) kw.push_back({{"text", k.text}, {"label", to_int(k.label)}});
    j["keywords"] = kw;
    if (!decision_fields_only) {
        j["request_timeout"] = c.request_timeout;
        j["max_retries"] = c.max_retries;
        j["retry_backoff"] = c.retry_backoff;
        j["concurrency_limit"] = c.concurrency_limit;
    }
    return j;
}

InferenceConfig config_from_json(const json& j) {
    InferenceConfig c;
    c.temperatures = j.at("temperatures").get<std::vector<double>>();
    c.max_new_tokens = j.at("max_new_tokens").get<int>();
    c.force_greedy = j.at("force_greedy").get<bool>();
    c.majority_class = static_cast<ScreeningLabel>(j.at("majority_class").get<int>());
    c.model = j.value("model", "");
    c.keywords.clear();
    for (const auto& k : j.at("keywords"))
        c.keywords.push_back({k.at("text").get<std::string>(), static_cast<ScreeningLabel>(k.at("label").get<int>())});
    c.request_timeout = j.value("request_timeout", c.request_timeout);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.retry_backoff = j.value("retry_backoff", c.retry_backoff);
    c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
    return c;
}

} // namespace

std::vector<PredictionRecord> run_pass(std::span<const PromptItem> items, double temperature,
                                       const InferenceConfig& config, Transport& transport, const RecordSink& sink) {
    config.validate();
    const std::size_t n = items.size();
    std::vector<std::optional<PredictionRecord>> slots(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mutex;
    std::size_t flushed = 0;
    std::exception_ptr failure;

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                auto record = query_item(items[i], temperature, config, transport);
                std::lock_guard lock(mutex);
                slots[i] = std::move(record);
                while (flushed < n && slots[flushed]) {
                    if (sink) sink(*slots[flushed]);
                    ++flushed;
                }
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                stop = true;
                return;
            }
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.concurrency_limit), n);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) {
        // keep finished work so a resumed run does not query it again
        if (sink)
            for (std::size_t i = flushed; i < n; ++i)
                if (slots[i]) sink(*slots[i]);
        std::rethrow_exception(failure);
    }

    std::vector<PredictionRecord> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------

const PassRecords* RunLedger::pass(double temperature) const {
    for (const auto& p : passes)
        if (p.temperature == temperature) return &p;
    return nullptr;
}

const PredictionRecord* RunLedger::find(std::string_view study_id, double temperature) const {
    const auto* p = pass(temperature);
    if (!p) return nullptr;
    for (const auto& r : p->records)
        if (r.study_id == study_id) return &r;
    return nullptr;
}

std::size_t RunLedger::record_count() const {
    std::size_t n = 0;
    for (const auto& p : passes) n += p.records.size();
    return n;
}

void RunLedger::require_complete() const {
    if (!complete) throw Error("ledger " + run_id + " is not complete");
    if (passes.size() != config.temperatures.size())
        throw Error("ledger " + run_id + " has " + std::to_string(passes.size()) + " passes but config lists " +
                    std::to_string(config.temperatures.size()) + " temperatures");
    std::optional<std::set<std::string>> reference;
    for (const auto& p : passes) {
        std::set<std::string> ids;
        for (const auto& r : p.records)
            if (!ids.insert(r.study_id).second)
                throw Error("ledger has duplicate record for '" + r.study_id + "' at T=" +
                            format_temperature(p.temperature));
        if (reference && *reference != ids)
            throw Error("ledger passes cover different items (T=" + format_temperature(p.temperature) + ")");
        reference = std::move(ids);
    }
}

std::string compute_run_id(std::span<const PromptItem> items, const InferenceConfig& config) {
    std::string material = config_json(config, true).dump();
    for (const auto& item : items) {
        material += '\n';
        material += item.study_id;
        material += '\t';
        material += sha256_hex(item.prompt);
    }
    return sha256_hex(material).substr(0, 16);
}

std::string ledger_header_line(const RunLedger& ledger) {
    json j;
    j["type"] = "header";
    j["run_id"] = ledger.run_id;
    j["endpoint"] = ledger.endpoint;
    j["config"] = config_json(ledger.config, false);
    return j.dump();
}

std::string ledger_record_line(const PredictionRecord& r) {
    json j;
    j["type"] = "prediction";
    j["study_id"] = r.study_id;
    j["temperature"] = r.temperature;
    j["raw_text"] = r.raw_text;
    j["decision"] = to_int(r.decision);
    j["parse_route"] = parse_route_name(r.route);
    j["latency"] = r.latency;
    j["attempts"] = r.attempts;
    if (r.error) j["error"] = *r.error;
    return j.dump();
}

std::string ledger_complete_line() { return R"({"type":"complete"})"; }

RunLedger parse_ledger(std::string_view text) {
    RunLedger ledger;
    bool have_header = false;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    std::map<double, std::set<std::string>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            // a torn final line from an interrupted writer is dropped
            if (in.peek() == EOF) break;
            throw Error("ledger line " + std::to_string(line_no) + " is malformed");
        }
        try {
            const auto type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw Error("duplicate header");
                have_header = true;
                ledger.run_id = j.at("run_id").get<std::string>();
                ledger.endpoint = j.at("endpoint").get<std::string>();
                ledger.config = config_from_json(j.at("config"));
                for (double t : ledger.config.temperatures) ledger.passes.push_back({t, {}});
            } else if (type == "prediction") {
                if (!have_header) throw Error("prediction before header");
                PredictionRecord r;
                r.study_id = j.at("study_id").get<std::string>();
                r.temperature = j.at("temperature").get<double>();
                r.raw_text = j.at("raw_text").get<std::string>();
                r.decision = static_cast<ScreeningLabel>(j.at("decision").get<int>());
                r.route = parse_route_from_name(j.at("parse_route").get<std::string>());
                r.latency = j.at("latency").get<double>();
                r.attempts = j.at("attempts").get<int>();
                if (j.contains("error")) r.error = j["error"].get<std::string>();
                auto it = std::find_if(ledger.passes.begin(), ledger.passes.end(),
                                       [&](const PassRecords& p) { return p.temperature == r.temperature; });
                if (it == ledger.passes.end())
                    throw Error("record temperature " + format_temperature(r.temperature) + " not in config");
                if (!seen[r.temperature].insert(r.study_id).second)
                    throw Error("duplicate record for '" + r.study_id + "'");
                it->records.push_back(std::move(r));
            } else if (type == "complete") {
                ledger.complete = true;
            } else {
                throw Error("unknown line type '" + type + "'");
            }
        } catch (const std::exception& e) {
            throw Error("ledger line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw Error("ledger has no header");
    return ledger;
}

RunLedger load_ledger(const std::filesystem::path& path) { return parse_ledger(read_text_file(path)); }

RunLedger run_multi_pass(std::span<const PromptItem> items, const InferenceConfig& config, Transport& transport,
                         const std::filesystem::path& ledger_path, bool resume) {
    config.validate();
    {
        std::set<std::string_view> ids;
        for (const auto& item : items)
            if (!ids.insert(item.study_id).second) throw Error("duplicate study id '" + item.study_id + "' in items");
    }

    RunLedger ledger;
    ledger.run_id = compute_run_id(items, config);
    ledger.config = config;
    ledger.endpoint = transport.identity();
    for (double t : config.temperatures) ledger.passes.push_back({t, {}});

    const bool to_file = !ledger_path.empty();
    bool existing = to_file && std::filesystem::exists(ledger_path) && std::filesystem::file_size(ledger_path) > 0;
    if (existing && !resume)
        throw Error("ledger " + ledger_path.string() + " already exists; pass resume to continue it");
    if (existing) {
        auto text = read_text_file(ledger_path);
        if (text.back() != '\n') {
            // drop a torn final line before appending
            text.erase(text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
            write_text_file(ledger_path, text);
            existing = !text.empty();
        }
    }
    if (existing) {
        auto previous = load_ledger(ledger_path);
        if (previous.run_id != ledger.run_id)
            throw Error("ledger " + ledger_path.string() + " belongs to run " + previous.run_id +
                        ", not to this run " + ledger.run_id);
        ledger.passes = std::move(previous.passes);
        if (previous.complete) {
            ledger.complete = true;
            return ledger;
        }
    }

    std::ofstream out;
    if (to_file) {
        if (ledger_path.has_parent_path()) std::filesystem::create_directories(ledger_path.parent_path());
        out.open(ledger_path, std::ios::binary | std::ios::app);
        if (!out) throw Error("cannot open ledger " + ledger_path.string());
        if (!existing) out << ledger_header_line(ledger) << '\n' << std::flush;
    }
    auto append = [&](const std::string& line) {
        if (!to_file) return;
        out << line << '\n';
        out.flush();
        if (!out) throw Error("ledger write failed: " + ledger_path.string());
    };

    for (auto& pass : ledger.passes) {
        std::set<std::string> done;
        for (const auto& r : pass.records) done.insert(r.study_id);
        std::vector<PromptItem> todo;
        for (const auto& item : items)
            if (!done.count(item.study_id)) todo.push_back(item);
        if (todo.empty()) continue;

        // on abort the sink has already persisted every in-order record
        run_pass(todo, pass.temperature, config, transport, [&](const PredictionRecord& r) {
            append(ledger_record_line(r));
            pass.records.push_back(r);
        });
        // resumed passes list earlier records first; restore item order
        std::map<std::string_view, std::size_t> order;
        for (std::size_t i = 0; i < items.size(); ++i) order.emplace(items[i].study_id, i);
        std::stable_sort(pass.records.begin(), pass.records.end(), [&](const auto& a, const auto& b) {
            return order.at(a.study_id) < order.at(b.study_id);
        });
    }
    append(ledger_complete_line());
    ledger.complete = true;
    return ledger;
}

} // namespace screening
