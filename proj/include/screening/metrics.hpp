#pragma once

#include "screening/label.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

namespace screening {

/// Binary confusion counts with Include as the positive class.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    /// Number of items whose true label is `label`.
    std::uint64_t support(ScreeningLabel label) const;
    /// Number of items predicted as `label`.
    std::uint64_t predicted(ScreeningLabel label) const;

    /// Relabels Exclude as positive: tp<->tn, fp<->fn.
    ConfusionMatrix swapped() const { return {tn, tp, fn, fp}; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// (human, predicted)
using LabelPair = std::pair<ScreeningLabel, ScreeningLabel>;

/// Throws on empty input.
ConfusionMatrix build_confusion(std::span<const LabelPair> pairs);

/// Undefined entries (zero denominators) are nullopt rather than 0.
struct ClassMetrics {
    ScreeningLabel label = ScreeningLabel::Exclude;
    std::uint64_t support = 0;
    double beta = 1.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> f_beta;
};

/// (1 + b^2) P R / (b^2 P + R), and 0 when P = R = 0.
double f_beta_score(double precision, double recall, double beta);

/// Index 0 is Exclude, index 1 is Include.
std::array<ClassMetrics, 2> per_class_metrics(const ConfusionMatrix& cm, double beta = 2.0);

struct AggregateMetrics {
    std::optional<double> accuracy;
    std::optional<double> balanced_accuracy;
    std::optional<double> macro_f1;
    std::optional<double> macro_f2;
    std::optional<double> weighted_f1;
    std::optional<double> weighted_f2;
};

/// Macro = unweighted class mean, weighted = support-weighted mean.
AggregateMetrics aggregate(const ConfusionMatrix& cm);

/// rows[true class][predicted class] as percentages; a zero-support row is nullopt.
struct RowPercentages {
    std::array<std::optional<std::array<double, 2>>, 2> rows;
};

RowPercentages row_normalize(const ConfusionMatrix& cm);

/// Fraction -> percent rounded half away from zero at two decimals.
double percent2(double fraction);

/// "86.40"; "undefined" for nullopt.
std::string format_percent(std::optional<double> fraction);

} // namespace screening
