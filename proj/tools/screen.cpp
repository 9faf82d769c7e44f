// screen: command-line driver for the screening pipeline.
//
//   screen ingest     --input corpus.csv --output corpus.jsonl
//   screen split      --corpus corpus.jsonl --train-size 315 --mode enriched --enrichment 0.384 --seed 7 --output split.json
//   screen export-sft --corpus corpus.jsonl --partition split.json --criteria criteria.txt --output train_sft.jsonl
//   screen manifest   --set max_steps=10 --output manifest.json
//   screen infer      --corpus corpus.jsonl --partition split.json --endpoint http://host/v1/chat/completions --ledger run.jsonl
//   screen evaluate   --ledger run.jsonl --corpus corpus.jsonl --report report.json --disagreements disagree.csv
//   screen agree      --ledger run.jsonl --corpus corpus.jsonl --report agreement.json
//   screen report     --input report.json

#include "screening/commands.hpp"
#include "screening/config.hpp"
#include "screening/util.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace screening;

std::optional<CorpusFormat> format_of(const std::optional<std::string>& name) {
    if (!name) return std::nullopt;
    return parse_corpus_format(*name);
}

fs::path under_output_dir(const RunConfigFile& c, const fs::path& p) {
    if (p.empty() || p.is_absolute() || !c.output_dir) return p;
    return *c.output_dir / p;
}

InferenceConfig inference_config(const RunConfigFile& c) {
    InferenceConfig cfg;
    if (c.temperatures) cfg.temperatures = *c.temperatures;
    if (c.max_new_tokens) cfg.max_new_tokens = *c.max_new_tokens;
    if (c.majority_class) cfg.majority_class = parse_label(*c.majority_class);
    if (c.force_greedy) cfg.force_greedy = *c.force_greedy;
    if (c.max_retries) cfg.max_retries = *c.max_retries;
    if (c.retry_backoff) cfg.retry_backoff = *c.retry_backoff;
    if (c.concurrency_limit) cfg.concurrency_limit = *c.concurrency_limit;
    if (c.request_timeout) cfg.request_timeout = *c.request_timeout;
    if (c.model) cfg.model = *c.model;
    cfg.validate();
    return cfg;
}

// Per-subcommand state: CLI values land in `cli`, merged over the config file.
struct Sub {
    CLI::App* app = nullptr;
    fs::path config_path;
    RunConfigFile cli;

    RunConfigFile resolved() const {
        RunConfigFile c = config_path.empty() ? RunConfigFile{} : load_run_config(config_path);
        c.merge(cli);
        return c;
    }
};

Sub make_sub(CLI::App& root, const std::string& name, const std::string& description) {
    Sub s;
    s.app = root.add_subcommand(name, description);
    return s;
}

void add_config(Sub& s) { s.app->add_option("--config", s.config_path, "Run configuration file (INI sections)"); }

void add_corpus(Sub& s) {
    s.app->add_option("--corpus", s.cli.corpus, "Corpus file (.csv or .jsonl)");
    s.app->add_option("--corpus-format", s.cli.corpus_format, "csv | jsonl (default: by extension)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Screening harness: corpus splits, SFT export, LLM inference, and agreement metrics"};
    app.require_subcommand(1);

    // ingest
    Sub ingest = make_sub(app, "ingest", "Validate a labeled corpus and write it in canonical form");
    add_config(ingest);
    fs::path ingest_in, ingest_out;
    std::optional<std::string> ingest_format;
    std::string ingest_out_format = "jsonl";
    ingest.app->add_option("--input", ingest_in, "Corpus file with id,title,abstract,label")->required();
    ingest.app->add_option("--format", ingest_format, "csv | jsonl (default: by extension)");
    ingest.app->add_option("--output", ingest_out, "Canonical corpus output")->required();
    ingest.app->add_option("--output-format", ingest_out_format, "csv | jsonl");

    // split
    Sub split = make_sub(app, "split", "Partition a corpus into train/test sets");
    add_config(split);
    add_corpus(split);
    fs::path split_out;
    split.app->add_option("--train-size", split.cli.train_size, "Training set size");
    split.app->add_option("--seed", split.cli.split_seed, "Shuffle seed");
    split.app->add_option("--mode", split.cli.split_mode, "stratified | enriched");
    split.app->add_option("--enrichment", split.cli.enrichment_target, "Include proportion of the training set");
    split.app->add_option("--output", split_out, "Partition manifest output")->required();

    // export-sft
    Sub sft = make_sub(app, "export-sft", "Write chat-formatted SFT examples with response-mask offsets");
    add_config(sft);
    add_corpus(sft);
    fs::path sft_out;
    std::string sft_split = "train";
    ChatMarkers markers = ChatMarkers::chatml();
    sft.app->add_option("--partition", sft.cli.partition, "Partition manifest (default: whole corpus)");
    sft.app->add_option("--split", sft_split, "train | test");
    sft.app->add_option("--template", sft.cli.template_path, "Prompt template (default: shipped template)");
    sft.app->add_option("--criteria", sft.cli.criteria, "Review inclusion/exclusion criteria text");
    sft.app->add_option("--user-marker", markers.user_open, "User turn opening marker");
    sft.app->add_option("--assistant-marker", markers.assistant_open, "Assistant turn opening marker");
    sft.app->add_option("--close-marker", markers.turn_close, "Turn closing marker");
    sft.app->add_option("--output", sft_out, "SFT line-delimited output")->required();

    // manifest
    Sub manifest = make_sub(app, "manifest", "Write the training manifest for an external trainer");
    std::vector<std::string> manifest_sets;
    fs::path manifest_out;
    manifest.app->add_option("--set", manifest_sets, "Override as field=value (repeatable)");
    manifest.app->add_option("--output", manifest_out, "Manifest output")->required();

    // infer
    Sub infer = make_sub(app, "infer", "Run multi-temperature screening inference");
    add_config(infer);
    add_corpus(infer);
    bool resume = false;
    std::optional<std::string> temperatures;
    infer.app->add_option("--partition", infer.cli.partition, "Partition manifest (default: whole corpus)");
    infer.app->add_option("--split", infer.cli.inference_split, "train | test (default test)");
    infer.app->add_option("--template", infer.cli.template_path, "Prompt template");
    infer.app->add_option("--criteria", infer.cli.criteria, "Review criteria text");
    infer.app->add_option("--endpoint", infer.cli.endpoint, "Chat-completion URL");
    infer.app->add_option("--model", infer.cli.model, "Model name sent to the endpoint");
    infer.app->add_option("--temperatures", temperatures, "Comma-separated pass temperatures (default 0.1,0.4,0.8)");
    infer.app->add_option("--max-new-tokens", infer.cli.max_new_tokens, "Generation budget (default 8)");
    infer.app->add_option("--majority-class", infer.cli.majority_class, "Fallback decision (default 0)");
    infer.app->add_option("--greedy", infer.cli.force_greedy, "Force greedy decoding on every pass");
    infer.app->add_option("--max-retries", infer.cli.max_retries, "Retries after the first attempt");
    infer.app->add_option("--concurrency", infer.cli.concurrency_limit, "Requests in flight");
    infer.app->add_option("--timeout", infer.cli.request_timeout, "Request timeout in seconds");
    auto* rec = infer.app->add_option("--record", infer.cli.record, "Append live exchanges to this record file");
    auto* rep = infer.app->add_option("--replay", infer.cli.replay, "Serve responses from this record file only");
    rec->excludes(rep);
    infer.app->add_option("--ledger", infer.cli.ledger, "Run ledger (line-delimited, append-only)");
    infer.app->add_option("--resume", infer.cli.ledger, "Continue this existing ledger")
        ->each([&](const std::string&) { resume = true; });

    // evaluate
    Sub evaluate = make_sub(app, "evaluate", "Classification metrics and agreement for a completed ledger");
    add_config(evaluate);
    add_corpus(evaluate);
    fs::path eval_report, eval_text, eval_disagree;
    evaluate.app->add_option("--ledger", evaluate.cli.ledger, "Completed run ledger");
    evaluate.app->add_option("--report", eval_report, "Machine-readable report output");
    evaluate.app->add_option("--text", eval_text, "Rendered tables output");
    evaluate.app->add_option("--disagreements", eval_disagree, "Disagreement export (delimited)");

    // agree
    Sub agree = make_sub(app, "agree", "Pairwise and multi-rater agreement with bootstrap intervals");
    add_config(agree);
    add_corpus(agree);
    fs::path agree_ratings, agree_report, agree_text;
    agree.app->add_option("--ratings", agree_ratings, "Wide rating table: id column then one column per rater");
    agree.app->add_option("--ledger", agree.cli.ledger, "Completed run ledger (with --corpus)");
    agree.app->add_option("--bootstrap", agree.cli.bootstrap_replicates, "Replicates (0 disables, default 2000)");
    agree.app->add_option("--seed", agree.cli.bootstrap_seed, "Bootstrap seed");
    agree.app->add_option("--confidence", agree.cli.bootstrap_confidence, "Interval confidence (default 0.95)");
    agree.app->add_option("--report", agree_report, "Machine-readable report output");
    agree.app->add_option("--text", agree_text, "Rendered tables output");

    // report
    Sub report = make_sub(app, "report", "Render a saved report as text tables");
    fs::path report_in, report_out;
    report.app->add_option("--input", report_in, "Report written by evaluate or agree")->required();
    report.app->add_option("--output", report_out, "Text output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (temperatures) infer.cli.temperatures = parse_number_list(*temperatures);

        if (ingest.app->parsed()) {
            const auto c = ingest.resolved();
            cmd_ingest({ingest_in, format_of(ingest_format), under_output_dir(c, ingest_out),
                        parse_corpus_format(ingest_out_format)},
                       std::clog);
        } else if (split.app->parsed()) {
            const auto c = split.resolved();
            SplitSpec spec;
            if (!c.train_size) throw Error("--train-size (or [split] train_size) is required");
            spec.train_size = *c.train_size;
            spec.seed = c.split_seed.value_or(0);
            spec.mode = parse_split_mode(c.split_mode.value_or("stratified"));
            spec.enrichment_target = c.enrichment_target;
            cmd_split({c.corpus.value_or(""), format_of(c.corpus_format), spec, under_output_dir(c, split_out)},
                      std::clog);
        } else if (sft.app->parsed()) {
            const auto c = sft.resolved();
            cmd_export_sft({c.corpus.value_or(""), format_of(c.corpus_format), c.partition.value_or(""), sft_split,
                            c.template_path.value_or(""), c.criteria.value_or(""), markers,
                            under_output_dir(c, sft_out)},
                           std::clog);
        } else if (manifest.app->parsed()) {
            std::map<std::string, std::string> overrides;
            for (const auto& s : manifest_sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw Error("--set expects field=value, got '" + s + "'");
                overrides[s.substr(0, eq)] = s.substr(eq + 1);
            }
            cmd_manifest({overrides, manifest_out}, std::clog);
        } else if (infer.app->parsed()) {
            const auto c = infer.resolved();
            InferOptions o;
            o.corpus = c.corpus.value_or("");
            o.corpus_format = format_of(c.corpus_format);
            o.partition = c.partition.value_or("");
            o.split = c.inference_split.value_or("test");
            o.template_path = c.template_path.value_or("");
            o.criteria = c.criteria.value_or("");
            o.config = inference_config(c);
            o.endpoint = c.endpoint.value_or("");
            o.record = c.record.value_or("");
            o.replay = c.replay.value_or("");
            o.ledger = under_output_dir(c, c.ledger.value_or(""));
            o.resume = resume;
            cmd_infer(o, std::clog);
        } else if (evaluate.app->parsed()) {
            const auto c = evaluate.resolved();
            cmd_evaluate({c.ledger.value_or(""), c.corpus.value_or(""), format_of(c.corpus_format),
                          under_output_dir(c, eval_report), under_output_dir(c, eval_text),
                          under_output_dir(c, eval_disagree)},
                         std::clog);
        } else if (agree.app->parsed()) {
            const auto c = agree.resolved();
            std::optional<BootstrapSpec> boot;
            if (c.bootstrap_replicates.value_or(2000) > 0) {
                boot = BootstrapSpec{};
                boot->replicates = c.bootstrap_replicates.value_or(2000);
                boot->seed = c.bootstrap_seed.value_or(0);
                boot->confidence = c.bootstrap_confidence.value_or(0.95);
            }
            AgreeOptions o{agree_ratings, agree_ratings.empty() ? c.ledger.value_or("") : fs::path{},
                           c.corpus.value_or(""), format_of(c.corpus_format), boot,
                           under_output_dir(c, agree_report), under_output_dir(c, agree_text)};
            const auto r = cmd_agree(o, std::clog);
            if (o.report.empty() && o.text.empty()) std::cout << render_text(r);
        } else if (report.app->parsed()) {
            cmd_report({report_in, report_out}, std::cout, std::clog);
        }
    } catch (const std::exception& e) {
        std::cerr << "screen: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
