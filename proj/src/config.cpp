#include "screening/config.hpp"

#include "screening/label.hpp"
#include "screening/util.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace screening {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

template <typename T>
T number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    T value{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw Error("config key '" + key + "': cannot parse '" + text + "'");
    return value;
}

bool boolean(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw Error("config key '" + key + "': cannot parse '" + text + "' as a boolean");
}

template <typename T>
void take(std::optional<T>& dst, const std::optional<T>& src) {
    if (src) dst = src;
}

} // namespace

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
        if (trim(item).empty()) throw Error("empty entry in number list '" + std::string(text) + "'");
        out.push_back(number<double>("list", item));
    }
    if (out.empty()) throw Error("empty number list '" + std::string(text) + "'");
    return out;
}

void RunConfigFile::merge(const RunConfigFile& o) {
    take(corpus, o.corpus);
    take(corpus_format, o.corpus_format);
    take(template_path, o.template_path);
    take(criteria, o.criteria);
    take(partition, o.partition);
    take(ledger, o.ledger);
    take(record, o.record);
    take(replay, o.replay);
    take(output_dir, o.output_dir);
    take(train_size, o.train_size);
    take(split_seed, o.split_seed);
    take(split_mode, o.split_mode);
    take(enrichment_target, o.enrichment_target);
    take(endpoint, o.endpoint);
    take(model, o.model);
    take(temperatures, o.temperatures);
    take(max_new_tokens, o.max_new_tokens);
    take(majority_class, o.majority_class);
    take(force_greedy, o.force_greedy);
    take(max_retries, o.max_retries);
    take(retry_backoff, o.retry_backoff);
    take(concurrency_limit, o.concurrency_limit);
    take(request_timeout, o.request_timeout);
    take(inference_split, o.inference_split);
    take(bootstrap_replicates, o.bootstrap_replicates);
    take(bootstrap_seed, o.bootstrap_seed);
    take(bootstrap_confidence, o.bootstrap_confidence);
    take(report_format, o.report_format);
}

RunConfigFile parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.what());
    }

    RunConfigFile c;
    using Setter = std::function<void(const std::string&)>;
    auto path_of = [&](const std::string& v) {
        std::filesystem::path p(trim(v));
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"paths",
         {{"corpus", [&](const std::string& v) { c.corpus = path_of(v); }},
          {"corpus_format", [&](const std::string& v) { c.corpus_format = trim(v); }},
          {"template", [&](const std::string& v) { c.template_path = path_of(v); }},
          {"criteria", [&](const std::string& v) { c.criteria = path_of(v); }},
          {"partition", [&](const std::string& v) { c.partition = path_of(v); }},
          {"ledger", [&](const std::string& v) { c.ledger = path_of(v); }},
          {"record", [&](const std::string& v) { c.record = path_of(v); }},
          {"replay", [&](const std::string& v) { c.replay = path_of(v); }},
          {"output_dir", [&](const std::string& v) { c.output_dir = path_of(v); }}}},
        {"split",
         {{"train_size", [&](const std::string& v) { c.train_size = number<std::size_t>("split.train_size", v); }},
          {"seed", [&](const std::string& v) { c.split_seed = number<std::uint64_t>("split.seed", v); }},
          {"mode", [&](const std::string& v) { c.split_mode = trim(v); }},
          {"enrichment_target",
           [&](const std::string& v) { c.enrichment_target = number<double>("split.enrichment_target", v); }}}},
        {"inference",
         {{"endpoint", [&](const std::string& v) { c.endpoint = trim(v); }},
          {"model", [&](const std::string& v) { c.model = trim(v); }},
          {"temperatures", [&](const std::string& v) { c.temperatures = parse_number_list(v); }},
          {"max_new_tokens", [&](const std::string& v) { c.max_new_tokens = number<int>("inference.max_new_tokens", v); }},
          {"majority_class", [&](const std::string& v) { c.majority_class = trim(v); }},
          {"force_greedy", [&](const std::string& v) { c.force_greedy = boolean("inference.force_greedy", v); }},
          {"max_retries", [&](const std::string& v) { c.max_retries = number<int>("inference.max_retries", v); }},
          {"retry_backoff", [&](const std::string& v) { c.retry_backoff = number<double>("inference.retry_backoff", v); }},
          {"concurrency_limit",
           [&](const std::string& v) { c.concurrency_limit = number<int>("inference.concurrency_limit", v); }},
          {"request_timeout",
           [&](const std::string& v) { c.request_timeout = number<double>("inference.request_timeout", v); }},
          {"split", [&](const std::string& v) { c.inference_split = trim(v); }}}},
        {"bootstrap",
         {{"replicates",
           [&](const std::string& v) { c.bootstrap_replicates = number<std::size_t>("bootstrap.replicates", v); }},
          {"seed", [&](const std::string& v) { c.bootstrap_seed = number<std::uint64_t>("bootstrap.seed", v); }},
          {"confidence",
           [&](const std::string& v) { c.bootstrap_confidence = number<double>("bootstrap.confidence", v); }}}},
        {"report", {{"format", [&](const std::string& v) { c.report_format = trim(v); }}}},
    };

    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw Error("config: key '" + section + "' outside any section");
        auto s = schema.find(section);
        if (s == schema.end()) throw Error("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            auto k = s->second.find(key);
            if (k == s->second.end()) throw Error("config: unknown key '" + key + "' in [" + section + "]");
            k->second(value.data());
        }
    }
    return c;
}

RunConfigFile load_run_config(const std::filesystem::path& path) {
    auto c = parse_run_config(read_text_file(path), path.parent_path());
    for (const auto* p : {&c.corpus, &c.template_path, &c.criteria, &c.partition, &c.replay}) {
        if (*p && !std::filesystem::exists(**p))
            throw Error("config " + path.string() + ": path does not exist: " + (*p)->string());
    }
    return c;
}

} // namespace screening
