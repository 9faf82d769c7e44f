#pragma once

// Run configuration file: INI-style sections per module, flat key = value.
//
//   [paths]      corpus, corpus_format, template, criteria, partition, ledger,
//                record, replay, output_dir
//   [split]      train_size, seed, mode, enrichment_target
//   [inference]  endpoint, model, temperatures, max_new_tokens, majority_class,
//                force_greedy, max_retries, retry_backoff, concurrency_limit,
//                request_timeout, split
//   [bootstrap]  replicates, seed, confidence
//   [report]     format
//
// Relative paths resolve against the config file's directory. Unknown
// sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace screening {

struct RunConfigFile {
    // [paths]
    std::optional<std::filesystem::path> corpus;
    std::optional<std::string> corpus_format;
    std::optional<std::filesystem::path> template_path;
    std::optional<std::filesystem::path> criteria;
    std::optional<std::filesystem::path> partition;
    std::optional<std::filesystem::path> ledger;
    std::optional<std::filesystem::path> record;
    std::optional<std::filesystem::path> replay;
    std::optional<std::filesystem::path> output_dir;
    // [split]
    std::optional<std::size_t> train_size;
    std::optional<std::uint64_t> split_seed;
    std::optional<std::string> split_mode;
    std::optional<double> enrichment_target;
    // [inference]
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::vector<double>> temperatures;
    std::optional<int> max_new_tokens;
    std::optional<std::string> majority_class;
    std::optional<bool> force_greedy;
    std::optional<int> max_retries;
    std::optional<double> retry_backoff;
    std::optional<int> concurrency_limit;
    std::optional<double> request_timeout;
    std::optional<std::string> inference_split;
    // [bootstrap]
    std::optional<std::size_t> bootstrap_replicates;
    std::optional<std::uint64_t> bootstrap_seed;
    std::optional<double> bootstrap_confidence;
    // [report]
    std::optional<std::string> report_format;

    /// Fields set in `overrides` replace those here.
    void merge(const RunConfigFile& overrides);
};

RunConfigFile parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Parses and checks that every input path it names exists.
RunConfigFile load_run_config(const std::filesystem::path& path);

/// "0.1,0.4,0.8" -> {0.1, 0.4, 0.8}
std::vector<double> parse_number_list(std::string_view text);

} // namespace screening
