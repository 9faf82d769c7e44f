#pragma once

// Independent reference computations. These work straight from the textbook
// definitions on raw label lists and share no code with the library's
// statistics, so agreement between the two is meaningful.

#include "screening/label.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

using screening::ScreeningLabel;
using Column = std::vector<ScreeningLabel>;

inline int bit(ScreeningLabel l) { return l == ScreeningLabel::Include ? 1 : 0; }

struct NaiveMetrics {
    double accuracy = 0;
    double recall[2] = {0, 0};
    double precision[2] = {0, 0};
    bool precision_defined[2] = {false, false};
    double f[2] = {0, 0};
    double f2[2] = {0, 0};
    double support[2] = {0, 0};
};

/// Recounts everything by scanning the lists once per class.
inline NaiveMetrics naive_metrics(const Column& human, const Column& pred) {
    NaiveMetrics m;
    const double n = static_cast<double>(human.size());
    double correct = 0;
    for (std::size_t i = 0; i < human.size(); ++i) correct += human[i] == pred[i];
    m.accuracy = correct / n;
    for (int c = 0; c < 2; ++c) {
        double true_c = 0, pred_c = 0, both = 0;
        for (std::size_t i = 0; i < human.size(); ++i) {
            true_c += bit(human[i]) == c;
            pred_c += bit(pred[i]) == c;
            both += bit(human[i]) == c && bit(pred[i]) == c;
        }
        m.support[c] = true_c;
        m.recall[c] = true_c > 0 ? both / true_c : 0;
        m.precision_defined[c] = pred_c > 0;
        m.precision[c] = pred_c > 0 ? both / pred_c : 0;
        const double p = m.precision[c], r = m.recall[c];
        m.f[c] = p + r > 0 ? 2 * p * r / (p + r) : 0;
        m.f2[c] = p + r > 0 ? 5 * p * r / (4 * p + r) : 0;
    }
    return m;
}

/// Observed agreement by explicitly enumerating every unordered rater pair.
inline double pairwise_observed(const std::vector<Column>& raters) {
    const std::size_t r = raters.size(), n = raters.front().size();
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double agree = 0, pairs = 0;
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = a + 1; b < r; ++b) {
                pairs += 1;
                agree += raters[a][i] == raters[b][i];
            }
        total += agree / pairs;
    }
    return total / static_cast<double>(n);
}

inline double positive_rate(const Column& c) {
    double k = 0;
    for (auto l : c) k += bit(l);
    return k / static_cast<double>(c.size());
}

inline std::optional<double> cohen(const Column& a, const Column& b) {
    const double po = pairwise_observed({a, b});
    const double pa = positive_rate(a), pb = positive_rate(b);
    const double pe = pa * pb + (1 - pa) * (1 - pb);
    if (pe == 1.0) return std::nullopt;
    return (po - pe) / (1 - pe);
}

/// Fleiss: chance term from the pooled share of every single rating.
inline std::optional<double> fleiss(const std::vector<Column>& raters) {
    double ones = 0, cells = 0;
    for (const auto& c : raters)
        for (auto l : c) {
            ones += bit(l);
            cells += 1;
        }
    const double p1 = ones / cells;
    const double pe = p1 * p1 + (1 - p1) * (1 - p1);
    if (pe == 1.0) return std::nullopt;
    const double po = pairwise_observed(raters);
    return (po - pe) / (1 - pe);
}

/// Scott's pi for two raters: pooled marginal of both columns.
inline std::optional<double> scott_pi(const Column& a, const Column& b) {
    const double p = (positive_rate(a) + positive_rate(b)) / 2;
    const double pe = p * p + (1 - p) * (1 - p);
    if (pe == 1.0) return std::nullopt;
    const double po = pairwise_observed({a, b});
    return (po - pe) / (1 - pe);
}

/// Gwet AC1 with per-rater category proportions averaged across raters.
inline double gwet_ac1(const std::vector<Column>& raters) {
    double pi1 = 0;
    for (const auto& c : raters) pi1 += positive_rate(c);
    pi1 /= static_cast<double>(raters.size());
    const double pe = (pi1 * (1 - pi1) + (1 - pi1) * pi1) / (2 - 1);
    const double po = pairwise_observed(raters);
    return (po - pe) / (1 - pe);
}

/// Half-away-from-zero two-decimal percentage of k/s, in integer hundredths.
inline std::int64_t percent_hundredths(std::int64_t k, std::int64_t s) { return (2 * 10000 * k + s) / (2 * s); }

struct Reconstruction {
    std::int64_t tp, tn, fp, fn;
};

/// Every (tp, tn, fp, fn) whose class supports are (s0, s1) and whose
/// row-normalized percentages round to the reported hundredths.
inline std::vector<Reconstruction> reconstruct_counts(std::int64_t s0, std::int64_t s1, std::int64_t true0_pred0,
                                                      std::int64_t true0_pred1, std::int64_t true1_pred0,
                                                      std::int64_t true1_pred1) {
    std::vector<Reconstruction> hits;
    for (std::int64_t tn = 0; tn <= s0; ++tn) {
        const std::int64_t fp = s0 - tn;
        if (percent_hundredths(tn, s0) != true0_pred0 || percent_hundredths(fp, s0) != true0_pred1) continue;
        for (std::int64_t tp = 0; tp <= s1; ++tp) {
            const std::int64_t fn = s1 - tp;
            if (percent_hundredths(fn, s1) == true1_pred0 && percent_hundredths(tp, s1) == true1_pred1)
                hits.push_back({tp, tn, fp, fn});
        }
    }
    return hits;
}

} // namespace oracle
