#pragma once

#include "screening/label.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screening {

struct RunLedger;

/// Items x raters matrix of binary labels. Complete, rectangular, r >= 2 is
/// checked by the statistics rather than the container (a one-column matrix is
/// a valid intermediate).
class RatingMatrix {
public:
    RatingMatrix() = default;
    RatingMatrix(std::vector<std::string> item_ids, std::vector<std::string> rater_ids,
                 std::vector<ScreeningLabel> cells_row_major);

    /// Columns of equal length; item ids default to "1".."n".
    static RatingMatrix from_columns(const std::vector<std::vector<ScreeningLabel>>& columns,
                                     std::vector<std::string> rater_ids = {},
                                     std::vector<std::string> item_ids = {});

    std::size_t items() const { return item_ids_.size(); }
    std::size_t raters() const { return rater_ids_.size(); }
    ScreeningLabel at(std::size_t item, std::size_t rater) const { return cells_[item * raters() + rater]; }
    std::vector<ScreeningLabel> column(std::size_t rater) const;
    /// Raters assigning Include to the item.
    std::size_t include_votes(std::size_t item) const;

    const std::vector<std::string>& item_ids() const { return item_ids_; }
    const std::vector<std::string>& rater_ids() const { return rater_ids_; }

    /// New matrix with the given rows (repeats allowed), as used by the bootstrap.
    RatingMatrix resample(std::span<const std::size_t> rows) const;
    RatingMatrix select_raters(std::span<const std::size_t> raters) const;

private:
    std::vector<std::string> item_ids_;
    std::vector<std::string> rater_ids_;
    std::vector<ScreeningLabel> cells_;
};

/// Wide delimited table: first column item id, one column per rater.
RatingMatrix parse_rating_matrix(std::string_view text);
RatingMatrix read_rating_matrix(const std::filesystem::path& path);
std::string serialize_rating_matrix(const RatingMatrix& m);

struct AgreementResult {
    std::string statistic;
    double estimate = 0.0;
    double p_o = 0.0;
    double p_e = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t n = 0;
    std::size_t r = 0;
    /// Chance agreement was 1 so the ratio is 0/0; estimate is set to 1.
    bool degenerate = false;
};

/// Mean over items of the fraction of agreeing rater pairs.
double observed_agreement(const RatingMatrix& m);

AgreementResult cohen_kappa(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b);
/// 2 p_o - 1, with p_e recorded as 0.5.
AgreementResult pabak(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b);
/// Chance term 2 pi (1 - pi), pi the mean positive rate of the two raters.
AgreementResult gwet_ac1_pairwise(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b);

AgreementResult gwet_ac1_multi(const RatingMatrix& m);
AgreementResult fleiss_kappa(const RatingMatrix& m);

struct BootstrapSpec {
    std::size_t replicates = 2000;
    std::uint64_t seed = 0;
    double confidence = 0.95;
    /// 0 picks std::thread::hardware_concurrency().
    std::size_t threads = 0;

    void validate() const;
};

struct BootstrapInterval {
    double low = 0.0;
    double high = 0.0;
    std::size_t replicates_used = 0;
    std::size_t degenerate_replicates = 0;
};

using MatrixStatistic = std::function<AgreementResult(const RatingMatrix&)>;

/// Percentile interval over item-resampled replicates. Replicate b draws its
/// rows from mt19937_64 seeded with mix_seed(seed, b), so the result does not
/// depend on thread scheduling. Degenerate replicates are skipped; more than
/// half degenerate is an error.
BootstrapInterval bootstrap_ci(const MatrixStatistic& statistic, const RatingMatrix& m, const BootstrapSpec& spec);

/// statistic(m) with ci_low/ci_high filled in.
AgreementResult with_bootstrap_ci(const MatrixStatistic& statistic, const RatingMatrix& m, const BootstrapSpec& spec);

/// Adapts a two-column statistic to the first two raters of a matrix.
MatrixStatistic pairwise_statistic(
    std::function<AgreementResult(std::span<const ScreeningLabel>, std::span<const ScreeningLabel>)> f);

struct PairwiseConsistency {
    double temperature_a = 0.0;
    double temperature_b = 0.0;
    AgreementResult kappa;
};

/// Cohen's kappa for every unordered pair of temperature passes, in config order.
std::vector<PairwiseConsistency> pairwise_consistency(const RunLedger& ledger);

} // namespace screening
