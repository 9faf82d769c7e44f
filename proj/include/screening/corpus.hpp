#pragma once

#include "screening/label.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace screening {

/// One title/abstract item with its human screening label.
struct StudyRecord {
    std::string id;
    std::string title;
    std::string abstract;
    ScreeningLabel human_label = ScreeningLabel::Exclude;

    /// Title-only records remain screenable; callers may surface this flag.
    bool abstract_missing() const;

    friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

struct Provenance {
    std::string source_path;
    std::string ingested_at; ///< ISO-8601 UTC
};

enum class CorpusFormat { Delimited, RecordLines };

CorpusFormat parse_corpus_format(std::string_view name);

/// Immutable after construction; the constructor enforces id uniqueness and
/// nonempty titles.
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<StudyRecord> records, Provenance provenance = {});

    const std::vector<StudyRecord>& records() const { return records_; }
    const Provenance& provenance() const { return provenance_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::size_t include_count() const;
    std::size_t exclude_count() const { return size() - include_count(); }
    /// 0 for an empty corpus.
    double inclusion_rate() const;

    const StudyRecord* find(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const;

    /// Records with the given ids, in the order given. Unknown ids throw.
    std::vector<StudyRecord> select(const std::vector<std::string>& ids) const;

    /// Hash over ids, titles, abstracts and labels (not provenance).
    std::string content_hash() const;

    /// Records compare equal; provenance is ignored.
    friend bool operator==(const Corpus& a, const Corpus& b) { return a.records_ == b.records_; }

private:
    std::vector<StudyRecord> records_;
    Provenance provenance_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Reads a corpus with columns/fields id,title,abstract,label. Errors name the
/// offending row (1-based data row) and id where known.
Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus parse_corpus(std::string_view text, CorpusFormat format, std::string source = "<memory>");

/// Canonical serialization; labels written as 0/1.
std::string serialize_corpus(const Corpus& corpus, CorpusFormat format);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);

// ---------------------------------------------------------------------------
// Partitioning

enum class SplitMode { Stratified, Enriched };

std::string_view split_mode_name(SplitMode m);
SplitMode parse_split_mode(std::string_view name);

struct SplitSpec {
    std::size_t train_size = 0;
    std::uint64_t seed = 0;
    /// Desired Include proportion of the training set (enriched mode only).
    std::optional<double> enrichment_target;
    SplitMode mode = SplitMode::Stratified;

    friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SplitCounts {
    std::size_t exclude = 0;
    std::size_t include = 0;
    std::size_t total() const { return exclude + include; }
    double inclusion_rate() const;

    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct PartitionResult {
    SplitSpec spec;
    std::size_t corpus_size = 0;
    std::string corpus_hash;
    std::vector<std::string> train_ids; ///< corpus order
    std::vector<std::string> test_ids;  ///< corpus order
    SplitCounts train;
    SplitCounts test;

    friend bool operator==(const PartitionResult&, const PartitionResult&) = default;
};

/// Deterministic for a fixed (corpus, spec): per-class Fisher-Yates shuffle
/// driven by mt19937_64, then a take of the per-class training quota.
/// Stratified quotas use largest-remainder rounding; enriched mode takes the
/// nearest whole count to enrichment_target * train_size.
PartitionResult partition(const Corpus& corpus, const SplitSpec& spec);

/// Include count the training set will receive; throws if infeasible.
std::size_t training_include_quota(std::size_t includes, std::size_t excludes, const SplitSpec& spec);

std::string serialize_partition(const PartitionResult& result);
PartitionResult parse_partition(std::string_view text);
void write_partition(const PartitionResult& result, const std::filesystem::path& path);
PartitionResult read_partition(const std::filesystem::path& path);

} // namespace screening

