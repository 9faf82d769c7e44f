#include "screening/metrics.hpp"

#include "screening/util.hpp"


namespace screening {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> f_of(const std::optional<double>& p, const std::optional<double>& r, double beta) {
    if (!p || !r) return std::nullopt;
    return f_beta_score(*p, *r, beta);
}

std::optional<double> macro(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a || !b) return std::nullopt;
    return (*a + *b) / 2.0;
}

std::optional<double> weighted(const std::optional<double>& a, std::uint64_t wa, const std::optional<double>& b,
                               std::uint64_t wb) {
    // a zero-support class contributes nothing, whatever its value
    if ((wa > 0 && !a) || (wb > 0 && !b) || wa + wb == 0) return std::nullopt;
    double sum = 0.0;
    if (wa > 0) sum += static_cast<double>(wa) * *a;
    if (wb > 0) sum += static_cast<double>(wb) * *b;
    return sum / static_cast<double>(wa + wb);
}

} // namespace

std::uint64_t ConfusionMatrix::support(ScreeningLabel label) const {
    return label == ScreeningLabel::Include ? tp + fn : tn + fp;
}

std::uint64_t ConfusionMatrix::predicted(ScreeningLabel label) const {
    return label == ScreeningLabel::Include ? tp + fp : tn + fn;
}

ConfusionMatrix build_confusion(std::span<const LabelPair> pairs) {
    if (pairs.empty()) throw Error("cannot build a confusion matrix from no predictions");
    ConfusionMatrix cm;
    for (const auto& [human, predicted] : pairs) {
        if (human == ScreeningLabel::Include)
            (predicted == ScreeningLabel::Include ? cm.tp : cm.fn) += 1;
        else
            (predicted == ScreeningLabel::Include ? cm.fp : cm.tn) += 1;
    }
    return cm;
}

double f_beta_score(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double den = b2 * precision + recall;
    if (den == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / den;
}

std::array<ClassMetrics, 2> per_class_metrics(const ConfusionMatrix& cm, double beta) {
    if (!(beta > 0.0)) throw Error("beta must be positive");
    std::array<ClassMetrics, 2> out;
    for (auto label : {ScreeningLabel::Exclude, ScreeningLabel::Include}) {
        const auto hit = label == ScreeningLabel::Include ? cm.tp : cm.tn;
        auto& m = out[static_cast<std::size_t>(to_int(label))];
        m.label = label;
        m.beta = beta;
        m.support = cm.support(label);
        m.precision = ratio(hit, cm.predicted(label));
        m.recall = ratio(hit, m.support);
        m.f1 = f_of(m.precision, m.recall, 1.0);
        m.f_beta = f_of(m.precision, m.recall, beta);
    }
    return out;
}

AggregateMetrics aggregate(const ConfusionMatrix& cm) {
    AggregateMetrics a;
    a.accuracy = ratio(cm.tp + cm.tn, cm.total());
    const auto c = per_class_metrics(cm, 2.0);
    const auto& ex = c[0];
    const auto& in = c[1];
    a.balanced_accuracy = macro(ex.recall, in.recall);
    a.macro_f1 = macro(ex.f1, in.f1);
    a.macro_f2 = macro(ex.f_beta, in.f_beta);
    a.weighted_f1 = weighted(ex.f1, ex.support, in.f1, in.support);
    a.weighted_f2 = weighted(ex.f_beta, ex.support, in.f_beta, in.support);
    return a;
}

RowPercentages row_normalize(const ConfusionMatrix& cm) {
    RowPercentages out;
    const std::array<std::array<std::uint64_t, 2>, 2> counts = {{{cm.tn, cm.fp}, {cm.fn, cm.tp}}};
    for (std::size_t t = 0; t < 2; ++t) {
        const auto row_total = counts[t][0] + counts[t][1];
        if (row_total == 0) continue;
        out.rows[t] = std::array<double, 2>{100.0 * static_cast<double>(counts[t][0]) / static_cast<double>(row_total),
                                            100.0 * static_cast<double>(counts[t][1]) / static_cast<double>(row_total)};
    }
    return out;
}

double percent2(double fraction) { return round_to(fraction * 100.0, 2); }

std::string format_percent(std::optional<double> fraction) {
    if (!fraction) return "undefined";
    return format_fixed(*fraction * 100.0, 2);
}

} // namespace screening
