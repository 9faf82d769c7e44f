#pragma once

// Pipeline stages behind the `screen` subcommands. Each stage reads file
// artifacts, writes its own, and logs one line naming input hashes. Errors
// are thrown as screening::Error; the CLI maps them to a nonzero exit.

#include "screening/agreement.hpp"
#include "screening/corpus.hpp"
#include "screening/inference.hpp"
#include "screening/promptkit.hpp"
#include "screening/report.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>

namespace screening {

namespace fs = std::filesystem;

/// Format from the extension (.csv -> delimited, otherwise record lines)
/// unless given explicitly.
Corpus load_corpus(const fs::path& path, std::optional<CorpusFormat> format = std::nullopt);

struct IngestOptions {
    fs::path input;
    std::optional<CorpusFormat> format;
    fs::path output;
    CorpusFormat output_format = CorpusFormat::RecordLines;
};
Corpus cmd_ingest(const IngestOptions& opt, std::ostream& log);

struct SplitOptions {
    fs::path corpus;
    std::optional<CorpusFormat> corpus_format;
    SplitSpec spec;
    fs::path output;
};
PartitionResult cmd_split(const SplitOptions& opt, std::ostream& log);

/// Records of a corpus restricted to one side of a partition ("train" or
/// "test"); the whole corpus when partition is empty.
std::vector<StudyRecord> select_split(const Corpus& corpus, const fs::path& partition, const std::string& split);

struct ExportSftOptions {
    fs::path corpus;
    std::optional<CorpusFormat> corpus_format;
    fs::path partition;
    std::string split = "train";
    fs::path template_path; ///< empty: shipped default
    fs::path criteria;
    ChatMarkers markers = ChatMarkers::chatml();
    fs::path output;
};
SftExportSummary cmd_export_sft(const ExportSftOptions& opt, std::ostream& log);

struct ManifestOptions {
    std::map<std::string, std::string> overrides;
    fs::path output;
};
TrainingManifest cmd_manifest(const ManifestOptions& opt, std::ostream& log);

struct InferOptions {
    fs::path corpus;
    std::optional<CorpusFormat> corpus_format;
    fs::path partition;
    std::string split = "test";
    fs::path template_path;
    fs::path criteria;
    InferenceConfig config;
    std::string endpoint;
    fs::path record; ///< live calls are also appended here
    fs::path replay; ///< serve responses from this record file only
    fs::path ledger;
    bool resume = false;
};
RunLedger cmd_infer(const InferOptions& opt, std::ostream& log);

struct EvaluateOptions {
    fs::path ledger;
    fs::path corpus;
    std::optional<CorpusFormat> corpus_format;
    fs::path report;        ///< machine-readable report
    fs::path text;          ///< optional rendered tables
    fs::path disagreements; ///< optional delimited export
};
Report cmd_evaluate(const EvaluateOptions& opt, std::ostream& log);

/// Items where any pass differs from the human label, corpus order. Columns:
/// id, title, human, then decision/route/raw_text per temperature.
std::string disagreement_table(const RunLedger& ledger, const Corpus& corpus);

struct AgreeOptions {
    fs::path ratings; ///< wide table; first rater column is the reference
    fs::path ledger;  ///< alternative to ratings: human + one column per pass
    fs::path corpus;
    std::optional<CorpusFormat> corpus_format;
    std::optional<BootstrapSpec> bootstrap; ///< nullopt: no intervals
    fs::path report;
    fs::path text;
};
Report cmd_agree(const AgreeOptions& opt, std::ostream& log);

/// Rating matrix built from a completed ledger: "human" then "T=<t>" columns.
RatingMatrix ledger_rating_matrix(const RunLedger& ledger, const Corpus& corpus);

/// Agreement-only report for a matrix whose first column is the reference.
Report agreement_report(const RatingMatrix& m, const std::optional<BootstrapSpec>& bootstrap);

struct RenderOptions {
    fs::path report;
    fs::path output; ///< empty: written to `out`
};
void cmd_report(const RenderOptions& opt, std::ostream& out, std::ostream& log);

} // namespace screening
