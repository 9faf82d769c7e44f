#include "screening/report.hpp"

#include "screening/util.hpp"

#include "json.hpp"

#include <sstream>

namespace screening {

using json = nlohmann::ordered_json;

SettingResult evaluate_setting(std::string name, std::span<const ScreeningLabel> human,
                               std::span<const ScreeningLabel> predicted) {
    if (human.size() != predicted.size()) throw Error("human and predicted columns differ in length");
    std::vector<LabelPair> pairs;
    pairs.reserve(human.size());
    for (std::size_t i = 0; i < human.size(); ++i) pairs.emplace_back(human[i], predicted[i]);

    SettingResult s;
    s.name = std::move(name);
    s.confusion = build_confusion(pairs);
    s.per_class = per_class_metrics(s.confusion, 2.0);
    s.overall = aggregate(s.confusion);
    s.confusion_percent = row_normalize(s.confusion);
    s.kappa = cohen_kappa(human, predicted);
    s.pabak = pabak(human, predicted);
    s.ac1 = gwet_ac1_pairwise(human, predicted);
    return s;
}

// ---------------------------------------------------------------------------

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::string class_name(ScreeningLabel l) { return label_token(l) + " (" + std::string(label_name(l)) + ")"; }

json agreement_json(const AgreementResult& a) {
    json j;
    j["statistic"] = a.statistic;
    j["estimate"] = a.estimate;
    j["p_o"] = a.p_o;
    j["p_e"] = a.p_e;
    j["ci_low"] = opt(a.ci_low);
    j["ci_high"] = opt(a.ci_high);
    j["n"] = a.n;
    j["r"] = a.r;
    j["degenerate"] = a.degenerate;
    return j;
}

AgreementResult agreement_from(const json& j) {
    AgreementResult a;
    a.statistic = j.at("statistic").get<std::string>();
    a.estimate = j.at("estimate").get<double>();
    a.p_o = j.at("p_o").get<double>();
    a.p_e = j.at("p_e").get<double>();
    a.ci_low = opt_from(j.at("ci_low"));
    a.ci_high = opt_from(j.at("ci_high"));
    a.n = j.at("n").get<std::size_t>();
    a.r = j.at("r").get<std::size_t>();
    a.degenerate = j.at("degenerate").get<bool>();
    return a;
}

} // namespace

std::string report_to_json(const Report& report) {
    json root;
    json settings = json::array();
    for (const auto& s : report.settings) {
        json j;
        j["name"] = s.name;
        j["N"] = s.confusion.total();
        j["confusion"] = {{"TP", s.confusion.tp}, {"TN", s.confusion.tn}, {"FP", s.confusion.fp}, {"FN", s.confusion.fn}};
        j["overall"] = {{"Acc.", opt(s.overall.accuracy)},     {"Bal. Acc.", opt(s.overall.balanced_accuracy)},
                        {"Macro-F1", opt(s.overall.macro_f1)}, {"Macro-F2", opt(s.overall.macro_f2)},
                        {"W-F1", opt(s.overall.weighted_f1)},  {"W-F2", opt(s.overall.weighted_f2)}};
        json per_class = json::array();
        for (const auto& c : s.per_class)
            per_class.push_back({{"Class", class_name(c.label)},
                                 {"Support", c.support},
                                 {"Prec.", opt(c.precision)},
                                 {"Rec.", opt(c.recall)},
                                 {"F1", opt(c.f1)},
                                 {"beta", c.beta},
                                 {"F_beta", opt(c.f_beta)}});
        j["per_class"] = per_class;
        json rows = json::array();
        for (std::size_t t = 0; t < 2; ++t) {
            const auto& row = s.confusion_percent.rows[t];
            rows.push_back({{"True class", "True " + class_name(static_cast<ScreeningLabel>(t))},
                            {"Pred 0", row ? json((*row)[0]) : json(nullptr)},
                            {"Pred 1", row ? json((*row)[1]) : json(nullptr)}});
        }
        j["confusion_percent"] = rows;
        j["agreement"] = {{"Cohen's kappa", agreement_json(s.kappa)},
                          {"PABAK", agreement_json(s.pabak)},
                          {"Gwet AC1", agreement_json(s.ac1)}};
        settings.push_back(std::move(j));
    }
    root["settings"] = settings;

    json pairwise = json::array();
    for (const auto& p : report.pairwise)
        pairwise.push_back({{"rater_a", p.rater_a},
                            {"rater_b", p.rater_b},
                            {"Cohen's kappa", agreement_json(p.kappa)},
                            {"PABAK", agreement_json(p.pabak)},
                            {"Gwet AC1", agreement_json(p.ac1)}});
    root["pairwise"] = pairwise;

    if (report.multi_rater)
        root["multi_rater"] = {{"raters", report.multi_rater->raters},
                               {"Fleiss' kappa", agreement_json(report.multi_rater->fleiss)},
                               {"Gwet AC1", agreement_json(report.multi_rater->ac1)}};
    else
        root["multi_rater"] = nullptr;

    json consistency = json::array();
    for (const auto& c : report.consistency)
        consistency.push_back({{"pass_a", c.pass_a}, {"pass_b", c.pass_b}, {"Cohen's kappa", agreement_json(c.kappa)}});
    root["consistency"] = consistency;
    return root.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
    try {
        const auto root = json::parse(text);
        Report report;
        for (const auto& j : root.at("settings")) {
            SettingResult s;
            s.name = j.at("name").get<std::string>();
            const auto& cm = j.at("confusion");
            s.confusion = {cm.at("TP").get<std::uint64_t>(), cm.at("TN").get<std::uint64_t>(),
                           cm.at("FP").get<std::uint64_t>(), cm.at("FN").get<std::uint64_t>()};
            const auto& o = j.at("overall");
            s.overall = {opt_from(o.at("Acc.")),     opt_from(o.at("Bal. Acc.")), opt_from(o.at("Macro-F1")),
                         opt_from(o.at("Macro-F2")), opt_from(o.at("W-F1")),      opt_from(o.at("W-F2"))};
            const auto& pc = j.at("per_class");
            for (std::size_t k = 0; k < 2; ++k) {
                auto& c = s.per_class[k];
                c.label = static_cast<ScreeningLabel>(k);
                c.support = pc.at(k).at("Support").get<std::uint64_t>();
                c.precision = opt_from(pc.at(k).at("Prec."));
                c.recall = opt_from(pc.at(k).at("Rec."));
                c.f1 = opt_from(pc.at(k).at("F1"));
                c.beta = pc.at(k).at("beta").get<double>();
                c.f_beta = opt_from(pc.at(k).at("F_beta"));
            }
            const auto& rows = j.at("confusion_percent");
            for (std::size_t t = 0; t < 2; ++t) {
                const auto& row = rows.at(t);
                if (!row.at("Pred 0").is_null())
                    s.confusion_percent.rows[t] =
                        std::array<double, 2>{row.at("Pred 0").get<double>(), row.at("Pred 1").get<double>()};
            }
            const auto& a = j.at("agreement");
            s.kappa = agreement_from(a.at("Cohen's kappa"));
            s.pabak = agreement_from(a.at("PABAK"));
            s.ac1 = agreement_from(a.at("Gwet AC1"));
            report.settings.push_back(std::move(s));
        }
        for (const auto& p : root.at("pairwise"))
            report.pairwise.push_back({p.at("rater_a").get<std::string>(), p.at("rater_b").get<std::string>(),
                                       agreement_from(p.at("Cohen's kappa")), agreement_from(p.at("PABAK")),
                                       agreement_from(p.at("Gwet AC1"))});
        if (!root.at("multi_rater").is_null()) {
            const auto& m = root["multi_rater"];
            report.multi_rater = MultiRaterSection{m.at("raters").get<std::vector<std::string>>(),
                                                   agreement_from(m.at("Fleiss' kappa")),
                                                   agreement_from(m.at("Gwet AC1"))};
        }
        for (const auto& c : root.at("consistency"))
            report.consistency.push_back({c.at("pass_a").get<std::string>(), c.at("pass_b").get<std::string>(),
                                          agreement_from(c.at("Cohen's kappa"))});
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::string format_coefficient(double value) { return format_fixed(value, 3); }

namespace {

class Table {
public:
    explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    void print(std::ostream& os, const std::string& title) const {
        std::vector<std::size_t> width(rows_.front().size(), 0);
        for (const auto& row : rows_)
            for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], utf8_length(row[c]));
        os << title << '\n';
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            std::string line;
            for (std::size_t c = 0; c < rows_[r].size(); ++c) {
                const auto& cell = rows_[r][c];
                const std::string pad(width[c] - utf8_length(cell), ' ');
                if (c) line += "  ";
                line += c == 0 ? cell + pad : pad + cell; // first column left, numbers right
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            os << line << '\n';
            if (r == 0) {
                std::size_t total = 0;
                for (auto w : width) total += w;
                os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
            }
        }
        os << '\n';
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

std::string pct_cell(const std::optional<std::array<double, 2>>& row, std::size_t k) {
    if (!row) return "undefined";
    return format_fixed((*row)[k], 2);
}

std::string ci_cell(const std::optional<double>& v) { return v ? format_coefficient(*v) : "--"; }

} // namespace

std::string render_text(const Report& report) {
    std::ostringstream os;
    if (!report.settings.empty()) {
        Table overall({"Setting", "N", "Acc.", "Bal. Acc.", "Macro-F1", "Macro-F2", "W-F1", "W-F2"});
        Table per_class({"Setting", "Class", "Support", "Prec.", "Rec.", "F1"});
        Table confusion({"Setting", "True class", "Pred 0", "Pred 1", "Count 0", "Count 1"});
        Table agreement({"Setting", "N", "P_o (%)", "Cohen's kappa", "PABAK", "Gwet AC1"});
        for (const auto& s : report.settings) {
            const auto& o = s.overall;
            overall.add({s.name, std::to_string(s.confusion.total()), format_percent(o.accuracy),
                         format_percent(o.balanced_accuracy), format_percent(o.macro_f1), format_percent(o.macro_f2),
                         format_percent(o.weighted_f1), format_percent(o.weighted_f2)});
            for (const auto& c : s.per_class)
                per_class.add({s.name, class_name(c.label), std::to_string(c.support), format_percent(c.precision),
                               format_percent(c.recall), format_percent(c.f1)});
            const std::array<std::array<std::uint64_t, 2>, 2> counts = {
                {{s.confusion.tn, s.confusion.fp}, {s.confusion.fn, s.confusion.tp}}};
            for (std::size_t t = 0; t < 2; ++t)
                confusion.add({s.name, "True " + class_name(static_cast<ScreeningLabel>(t)),
                               pct_cell(s.confusion_percent.rows[t], 0), pct_cell(s.confusion_percent.rows[t], 1),
                               std::to_string(counts[t][0]), std::to_string(counts[t][1])});
            agreement.add({s.name, std::to_string(s.kappa.n), format_percent(s.kappa.p_o),
                           format_coefficient(s.kappa.estimate) + (s.kappa.degenerate ? "*" : ""),
                           format_coefficient(s.pabak.estimate), format_coefficient(s.ac1.estimate)});
        }
        overall.print(os, "Binary classification performance");
        per_class.print(os, "Per-class performance");
        confusion.print(os, "Row-normalized confusion matrix (% of true class)");
        agreement.print(os, "Agreement with human labels");
    }
    if (!report.pairwise.empty()) {
        Table t({"Rater A", "Rater B", "N", "P_o (%)", "Cohen's kappa", "PABAK", "Gwet AC1", "AC1 CI95 (lo)",
                 "AC1 CI95 (hi)"});
        for (const auto& p : report.pairwise)
            t.add({p.rater_a, p.rater_b, std::to_string(p.kappa.n), format_percent(p.kappa.p_o),
                   format_coefficient(p.kappa.estimate) + (p.kappa.degenerate ? "*" : ""),
                   format_coefficient(p.pabak.estimate), format_coefficient(p.ac1.estimate), ci_cell(p.ac1.ci_low),
                   ci_cell(p.ac1.ci_high)});
        t.print(os, "Pairwise agreement");
    }
    if (report.multi_rater || !report.consistency.empty()) {
        Table t({"Statistic", "Estimate", "CI95 (lo)", "CI95 (hi)"});
        if (report.multi_rater) {
            const auto& m = *report.multi_rater;
            t.add({"Fleiss' kappa", format_coefficient(m.fleiss.estimate) + (m.fleiss.degenerate ? "*" : ""),
                   ci_cell(m.fleiss.ci_low), ci_cell(m.fleiss.ci_high)});
            t.add({"Gwet AC1", format_coefficient(m.ac1.estimate), ci_cell(m.ac1.ci_low), ci_cell(m.ac1.ci_high)});
        }
        for (const auto& c : report.consistency)
            t.add({c.pass_a + " vs. " + c.pass_b, format_coefficient(c.kappa.estimate) + (c.kappa.degenerate ? "*" : ""),
                   ci_cell(c.kappa.ci_low), ci_cell(c.kappa.ci_high)});
        std::string title = "Multi-rater agreement and pass consistency";
        if (report.multi_rater) title += " (" + std::to_string(report.multi_rater->raters.size()) + " raters)";
        t.print(os, title);
    }
    bool any_degenerate = false;
    for (const auto& s : report.settings) any_degenerate |= s.kappa.degenerate;
    for (const auto& p : report.pairwise) any_degenerate |= p.kappa.degenerate;
    for (const auto& c : report.consistency) any_degenerate |= c.kappa.degenerate;
    if (report.multi_rater) any_degenerate |= report.multi_rater->fleiss.degenerate;
    if (any_degenerate) os << "* degenerate: chance agreement is 1 (constant raters); estimate reported as 1\n";
    return os.str();
}

} // namespace screening
