#pragma once

#include "screening/agreement.hpp"
#include "screening/metrics.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screening {

/// Everything reported for one prediction column against the human labels.
struct SettingResult {
    std::string name;
    ConfusionMatrix confusion;
    std::array<ClassMetrics, 2> per_class;
    AggregateMetrics overall;
    RowPercentages confusion_percent;
    AgreementResult kappa;
    AgreementResult pabak;
    AgreementResult ac1;
};

/// Collects metrics and agreement module outputs; no arithmetic of its own.
SettingResult evaluate_setting(std::string name, std::span<const ScreeningLabel> human,
                               std::span<const ScreeningLabel> predicted);

struct PairwiseRow {
    std::string rater_a;
    std::string rater_b;
    AgreementResult kappa;
    AgreementResult pabak;
    AgreementResult ac1;
};

struct MultiRaterSection {
    std::vector<std::string> raters;
    AgreementResult fleiss;
    AgreementResult ac1;
};

struct ConsistencyRow {
    std::string pass_a;
    std::string pass_b;
    AgreementResult kappa;
};

struct Report {
    std::vector<SettingResult> settings;
    std::vector<PairwiseRow> pairwise;
    std::optional<MultiRaterSection> multi_rater;
    std::vector<ConsistencyRow> consistency;
};

/// Machine-readable form. Field names follow the conventional table headers
/// ("Acc.", "Bal. Acc.", "Macro-F1", "Macro-F2", "W-F1", "W-F2", ...).
/// Values are unrounded fractions; undefined values are null.
std::string report_to_json(const Report& report);
Report report_from_json(std::string_view text);

/// Human-readable tables: percentages at two decimals, coefficients at three.
std::string render_text(const Report& report);

/// "0.045", "-0.870"; rounded half away from zero.
std::string format_coefficient(double value);

} // namespace screening
