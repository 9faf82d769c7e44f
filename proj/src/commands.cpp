#include "screening/commands.hpp"

#include "screening/delimited.hpp"
#include "screening/util.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

namespace screening {

namespace {

std::string file_hash(const fs::path& p) { return sha256_hex(read_text_file(p)).substr(0, 12); }

void log_line(std::ostream& log, std::string_view command,
              std::initializer_list<std::pair<std::string_view, fs::path>> inputs, std::string_view detail) {
    log << "[screen " << command << "]";
    for (const auto& [name, path] : inputs)
        if (!path.empty()) log << ' ' << name << '=' << path.filename().string() << "@" << file_hash(path);
    if (!detail.empty()) log << " | " << detail;
    log << '\n';
}

std::string pass_name(double t) { return "T=" + format_temperature(t); }

void require(const fs::path& p, std::string_view what) {
    if (p.empty()) throw Error(std::string(what) + " path is required");
}

} // namespace

Corpus load_corpus(const fs::path& path, std::optional<CorpusFormat> format) {
    require(path, "corpus");
    if (!format) format = path.extension() == ".csv" ? CorpusFormat::Delimited : CorpusFormat::RecordLines;
    return ingest_corpus(path, *format);
}

Corpus cmd_ingest(const IngestOptions& opt, std::ostream& log) {
    require(opt.input, "input");
    require(opt.output, "output");
    auto corpus = load_corpus(opt.input, opt.format);
    write_corpus(corpus, opt.output, opt.output_format);
    std::size_t missing = 0;
    for (const auto& r : corpus.records()) missing += r.abstract_missing();
    std::ostringstream d;
    d << corpus.size() << " records, " << corpus.include_count() << " include, inclusion rate "
      << format_fixed(100.0 * corpus.inclusion_rate(), 2) << "%, " << missing << " without abstract";
    log_line(log, "ingest", {{"input", opt.input}}, d.str());
    return corpus;
}

PartitionResult cmd_split(const SplitOptions& opt, std::ostream& log) {
    require(opt.output, "output");
    const auto corpus = load_corpus(opt.corpus, opt.corpus_format);
    auto result = partition(corpus, opt.spec);
    write_partition(result, opt.output);
    std::ostringstream d;
    d << split_mode_name(opt.spec.mode) << " seed=" << opt.spec.seed << " train " << result.train.total() << " ("
      << result.train.exclude << "/" << result.train.include << ") test " << result.test.total() << " ("
      << result.test.exclude << "/" << result.test.include << ")";
    log_line(log, "split", {{"corpus", opt.corpus}}, d.str());
    return result;
}

std::vector<StudyRecord> select_split(const Corpus& corpus, const fs::path& partition_path, const std::string& split) {
    if (partition_path.empty()) return corpus.records();
    const auto part = read_partition(partition_path);
    if (part.corpus_hash != corpus.content_hash())
        throw Error("partition " + partition_path.string() + " was made from a different corpus");
    if (split == "train") return corpus.select(part.train_ids);
    if (split == "test") return corpus.select(part.test_ids);
    throw Error("unknown split '" + split + "' (expected train or test)");
}

SftExportSummary cmd_export_sft(const ExportSftOptions& opt, std::ostream& log) {
    require(opt.output, "output");
    const auto corpus = load_corpus(opt.corpus, opt.corpus_format);
    const auto records = select_split(corpus, opt.partition, opt.split);
    const auto tmpl = PromptTemplate::from_files(opt.template_path, opt.criteria);
    const auto summary = export_sft_dataset(records, tmpl, opt.markers, opt.output);
    std::ostringstream d;
    d << summary.examples << " examples (" << summary.exclude << " exclude, " << summary.include << " include, "
      << summary.abstract_missing << " without abstract)";
    log_line(log, "export-sft",
             {{"corpus", opt.corpus}, {"partition", opt.partition}, {"template", opt.template_path},
              {"criteria", opt.criteria}},
             d.str());
    return summary;
}

TrainingManifest cmd_manifest(const ManifestOptions& opt, std::ostream& log) {
    require(opt.output, "output");
    auto m = emit_training_manifest(opt.overrides, opt.output);
    std::ostringstream d;
    d << "effective batch " << m.effective_batch_size();
    for (const auto& o : m.override_log) d << "; override " << o.field << ": " << o.previous << " -> " << o.value;
    log_line(log, "manifest", {}, d.str());
    return m;
}

RunLedger cmd_infer(const InferOptions& opt, std::ostream& log) {
    require(opt.ledger, "ledger");
    const auto corpus = load_corpus(opt.corpus, opt.corpus_format);
    const auto records = select_split(corpus, opt.partition, opt.split);
    const auto tmpl = PromptTemplate::from_files(opt.template_path, opt.criteria);

    std::vector<PromptItem> items;
    items.reserve(records.size());
    std::size_t title_only = 0;
    for (const auto& r : records) {
        auto p = render_prompt(tmpl, r);
        title_only += p.abstract_missing;
        items.push_back({r.id, std::move(p.text)});
    }

    std::unique_ptr<Transport> transport;
    if (!opt.replay.empty()) {
        if (!opt.record.empty()) throw Error("--record and --replay are mutually exclusive");
        transport = std::make_unique<ReplayTransport>(opt.replay);
    } else {
        if (opt.endpoint.empty()) throw Error("an endpoint or a replay file is required");
        transport = std::make_unique<HttpTransport>(opt.endpoint, opt.config.request_timeout);
        if (!opt.record.empty()) transport = std::make_unique<RecordingTransport>(std::move(transport), opt.record);
    }

    auto ledger = run_multi_pass(items, opt.config, *transport, opt.ledger, opt.resume);
    std::ostringstream d;
    d << "run " << ledger.run_id << ": " << items.size() << " items x " << ledger.passes.size() << " passes, "
      << ledger.record_count() << " records";
    if (title_only) d << ", " << title_only << " title-only";
    log_line(log, "infer",
             {{"corpus", opt.corpus}, {"partition", opt.partition}, {"template", opt.template_path},
              {"criteria", opt.criteria}, {"replay", opt.replay}},
             d.str());
    return ledger;
}

namespace {

// Evaluation ids in corpus order; every ledger id must exist in the corpus.
std::vector<std::size_t> evaluation_rows(const RunLedger& ledger, const Corpus& corpus) {
    ledger.require_complete();
    std::vector<std::size_t> rows;
    std::vector<std::string> unknown;
    for (const auto& r : ledger.passes.front().records) {
        if (auto idx = corpus.index_of(r.study_id))
            rows.push_back(*idx);
        else
            unknown.push_back(r.study_id);
    }
    if (rows.empty()) throw Error("ledger and corpus share no study ids");
    if (!unknown.empty())
        throw Error("ledger/corpus id mismatch: " + std::to_string(unknown.size()) +
                    " ledger id(s) missing from the corpus, first '" + unknown.front() + "'");
    std::sort(rows.begin(), rows.end());
    return rows;
}

std::vector<ScreeningLabel> pass_column(const PassRecords& pass, const Corpus& corpus,
                                        const std::vector<std::size_t>& rows) {
    std::unordered_map<std::string_view, ScreeningLabel> by_id;
    for (const auto& r : pass.records) by_id.emplace(r.study_id, r.decision);
    std::vector<ScreeningLabel> col;
    col.reserve(rows.size());
    for (auto i : rows) col.push_back(by_id.at(corpus.records()[i].id));
    return col;
}

void write_outputs(const Report& report, const fs::path& json_path, const fs::path& text_path) {
    if (!json_path.empty()) write_text_file(json_path, report_to_json(report));
    if (!text_path.empty()) write_text_file(text_path, render_text(report));
}

} // namespace

RatingMatrix ledger_rating_matrix(const RunLedger& ledger, const Corpus& corpus) {
    const auto rows = evaluation_rows(ledger, corpus);
    std::vector<std::vector<ScreeningLabel>> columns;
    std::vector<std::string> names{"human"};
    std::vector<ScreeningLabel> human;
    std::vector<std::string> ids;
    for (auto i : rows) {
        human.push_back(corpus.records()[i].human_label);
        ids.push_back(corpus.records()[i].id);
    }
    columns.push_back(std::move(human));
    for (const auto& pass : ledger.passes) {
        columns.push_back(pass_column(pass, corpus, rows));
        names.push_back(pass_name(pass.temperature));
    }
    return RatingMatrix::from_columns(columns, std::move(names), std::move(ids));
}

std::string disagreement_table(const RunLedger& ledger, const Corpus& corpus) {
    const auto rows = evaluation_rows(ledger, corpus);
    std::vector<std::unordered_map<std::string_view, const PredictionRecord*>> lookup;
    for (const auto& pass : ledger.passes) {
        auto& m = lookup.emplace_back();
        for (const auto& r : pass.records) m.emplace(r.study_id, &r);
    }
    std::ostringstream os;
    std::vector<std::string> header{"id", "title", "human"};
    for (const auto& pass : ledger.passes) {
        const auto t = pass_name(pass.temperature);
        header.push_back("decision_" + t);
        header.push_back("route_" + t);
        header.push_back("raw_text_" + t);
    }
    delimited::write_row(os, header);
    for (auto i : rows) {
        const auto& rec = corpus.records()[i];
        bool differs = false;
        std::vector<std::string> row{rec.id, rec.title, label_token(rec.human_label)};
        for (const auto& m : lookup) {
            const auto* p = m.at(rec.id);
            differs |= p->decision != rec.human_label;
            row.push_back(label_token(p->decision));
            row.emplace_back(parse_route_name(p->route));
            row.push_back(p->raw_text);
        }
        if (differs) delimited::write_row(os, row);
    }
    return os.str();
}

Report cmd_evaluate(const EvaluateOptions& opt, std::ostream& log) {
    require(opt.ledger, "ledger");
    const auto ledger = load_ledger(opt.ledger);
    const auto corpus = load_corpus(opt.corpus, opt.corpus_format);
    const auto rows = evaluation_rows(ledger, corpus);

    std::vector<ScreeningLabel> human;
    for (auto i : rows) human.push_back(corpus.records()[i].human_label);

    Report report;
    for (const auto& pass : ledger.passes)
        report.settings.push_back(evaluate_setting(pass_name(pass.temperature), human, pass_column(pass, corpus, rows)));
    if (ledger.passes.size() >= 2)
        for (const auto& c : pairwise_consistency(ledger))
            report.consistency.push_back({pass_name(c.temperature_a), pass_name(c.temperature_b), c.kappa});

    write_outputs(report, opt.report, opt.text);
    std::size_t disagreements = 0;
    if (!opt.disagreements.empty()) {
        const auto table = disagreement_table(ledger, corpus);
        disagreements = static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n'));
        write_text_file(opt.disagreements, table);
    }
    std::ostringstream d;
    d << rows.size() << " items, " << ledger.passes.size() << " pass(es)";
    if (!opt.disagreements.empty()) d << ", " << (disagreements ? disagreements - 1 : 0) << " disagreement row(s)";
    log_line(log, "evaluate", {{"ledger", opt.ledger}, {"corpus", opt.corpus}}, d.str());
    return report;
}

Report agreement_report(const RatingMatrix& m, const std::optional<BootstrapSpec>& bootstrap) {
    if (m.raters() < 2) throw Error("agreement needs at least 2 raters, got " + std::to_string(m.raters()));
    Report report;
    const auto reference = m.column(0);
    for (std::size_t j = 1; j < m.raters(); ++j) {
        const auto other = m.column(j);
        PairwiseRow row{m.rater_ids()[0], m.rater_ids()[j], cohen_kappa(reference, other), pabak(reference, other),
                        gwet_ac1_pairwise(reference, other)};
        if (bootstrap) {
            const std::array<std::size_t, 2> pair{0, j};
            const auto sub = m.select_raters(pair);
            row.ac1 = with_bootstrap_ci(pairwise_statistic(gwet_ac1_pairwise), sub, *bootstrap);
        }
        report.pairwise.push_back(std::move(row));
    }
    MultiRaterSection multi{m.rater_ids(), fleiss_kappa(m), gwet_ac1_multi(m)};
    if (bootstrap) {
        multi.fleiss = with_bootstrap_ci(fleiss_kappa, m, *bootstrap);
        multi.ac1 = with_bootstrap_ci(gwet_ac1_multi, m, *bootstrap);
    }
    report.multi_rater = std::move(multi);
    return report;
}

Report cmd_agree(const AgreeOptions& opt, std::ostream& log) {
    RatingMatrix m;
    std::optional<RunLedger> ledger;
    if (!opt.ratings.empty()) {
        if (!opt.ledger.empty()) throw Error("give either a ratings file or a ledger, not both");
        m = read_rating_matrix(opt.ratings);
    } else {
        require(opt.ledger, "ratings or ledger");
        ledger = load_ledger(opt.ledger);
        m = ledger_rating_matrix(*ledger, load_corpus(opt.corpus, opt.corpus_format));
    }
    auto report = agreement_report(m, opt.bootstrap);
    if (ledger && ledger->passes.size() >= 2)
        for (const auto& c : pairwise_consistency(*ledger))
            report.consistency.push_back({pass_name(c.temperature_a), pass_name(c.temperature_b), c.kappa});

    write_outputs(report, opt.report, opt.text);
    std::ostringstream d;
    d << m.items() << " items x " << m.raters() << " raters";
    if (opt.bootstrap) d << ", bootstrap B=" << opt.bootstrap->replicates << " seed=" << opt.bootstrap->seed;
    log_line(log, "agree", {{"ratings", opt.ratings}, {"ledger", opt.ledger}, {"corpus", opt.corpus}}, d.str());
    return report;
}

void cmd_report(const RenderOptions& opt, std::ostream& out, std::ostream& log) {
    require(opt.report, "report");
    const auto report = report_from_json(read_text_file(opt.report));
    const auto text = render_text(report);
    if (opt.output.empty())
        out << text;
    else
        write_text_file(opt.output, text);
    log_line(log, "report", {{"report", opt.report}}, "");
}

} // namespace screening
