#include "screening/agreement.hpp"

#include "screening/delimited.hpp"
#include "screening/inference.hpp"
#include "screening/util.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace screening {

RatingMatrix::RatingMatrix(std::vector<std::string> item_ids, std::vector<std::string> rater_ids,
                           std::vector<ScreeningLabel> cells_row_major)
    : item_ids_(std::move(item_ids)), rater_ids_(std::move(rater_ids)), cells_(std::move(cells_row_major)) {
    if (cells_.size() != item_ids_.size() * rater_ids_.size())
        throw Error("rating matrix is not rectangular: " + std::to_string(cells_.size()) + " cells for " +
                    std::to_string(item_ids_.size()) + " items x " + std::to_string(rater_ids_.size()) + " raters");
}

RatingMatrix RatingMatrix::from_columns(const std::vector<std::vector<ScreeningLabel>>& columns,
                                        std::vector<std::string> rater_ids, std::vector<std::string> item_ids) {
    const std::size_t r = columns.size();
    const std::size_t n = r ? columns.front().size() : 0;
    for (const auto& c : columns)
        if (c.size() != n) throw Error("rater columns differ in length");
    if (rater_ids.empty())
        for (std::size_t j = 0; j < r; ++j) rater_ids.push_back("rater" + std::to_string(j + 1));
    if (item_ids.empty())
        for (std::size_t i = 0; i < n; ++i) item_ids.push_back(std::to_string(i + 1));
    if (rater_ids.size() != r || item_ids.size() != n) throw Error("rating matrix id lists do not match its shape");
    std::vector<ScreeningLabel> cells(n * r);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < r; ++j) cells[i * r + j] = columns[j][i];
    return RatingMatrix(std::move(item_ids), std::move(rater_ids), std::move(cells));
}

std::vector<ScreeningLabel> RatingMatrix::column(std::size_t rater) const {
    std::vector<ScreeningLabel> out(items());
    for (std::size_t i = 0; i < items(); ++i) out[i] = at(i, rater);
    return out;
}

std::size_t RatingMatrix::include_votes(std::size_t item) const {
    std::size_t k = 0;
    for (std::size_t j = 0; j < raters(); ++j) k += at(item, j) == ScreeningLabel::Include;
    return k;
}

RatingMatrix RatingMatrix::resample(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    std::vector<ScreeningLabel> cells;
    ids.reserve(rows.size());
    cells.reserve(rows.size() * raters());
    for (auto i : rows) {
        ids.push_back(item_ids_.at(i));
        for (std::size_t j = 0; j < raters(); ++j) cells.push_back(at(i, j));
    }
    return RatingMatrix(std::move(ids), rater_ids_, std::move(cells));
}

RatingMatrix RatingMatrix::select_raters(std::span<const std::size_t> raters_wanted) const {
    std::vector<std::string> rids;
    for (auto j : raters_wanted) rids.push_back(rater_ids_.at(j));
    std::vector<ScreeningLabel> cells;
    cells.reserve(items() * raters_wanted.size());
    for (std::size_t i = 0; i < items(); ++i)
        for (auto j : raters_wanted) cells.push_back(at(i, j));
    return RatingMatrix(item_ids_, std::move(rids), std::move(cells));
}

RatingMatrix parse_rating_matrix(std::string_view text) {
    const auto rows = delimited::parse(text);
    if (rows.empty()) throw Error("rating matrix file is empty");
    const auto& header = rows.front().fields;
    if (header.size() < 2) throw Error("rating matrix needs an id column and at least one rater column");
    if (rows.size() < 2) throw Error("rating matrix has a header but no items");
    std::vector<std::string> raters(header.begin() + 1, header.end());
    std::vector<std::string> ids;
    std::vector<ScreeningLabel> cells;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        if (f.size() != header.size())
            throw Error("rating matrix row " + std::to_string(i) + " (line " + std::to_string(rows[i].line) +
                        ") has " + std::to_string(f.size()) + " fields, expected " + std::to_string(header.size()));
        ids.push_back(f[0]);
        for (std::size_t j = 1; j < f.size(); ++j) {
            auto l = try_parse_label(f[j]);
            if (!l)
                throw Error("rating matrix row " + std::to_string(i) + " (item '" + f[0] + "'), rater '" +
                            header[j] + "': invalid label '" + f[j] + "'");
            cells.push_back(*l);
        }
    }
    return RatingMatrix(std::move(ids), std::move(raters), std::move(cells));
}

RatingMatrix read_rating_matrix(const std::filesystem::path& path) { return parse_rating_matrix(read_text_file(path)); }

std::string serialize_rating_matrix(const RatingMatrix& m) {
    std::ostringstream os;
    std::vector<std::string> header{"id"};
    header.insert(header.end(), m.rater_ids().begin(), m.rater_ids().end());
    delimited::write_row(os, header);
    for (std::size_t i = 0; i < m.items(); ++i) {
        std::vector<std::string> row{m.item_ids()[i]};
        for (std::size_t j = 0; j < m.raters(); ++j) row.push_back(label_token(m.at(i, j)));
        delimited::write_row(os, row);
    }
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

void require_pair(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b) {
    if (a.size() != b.size())
        throw Error("rater columns differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                    ")");
    if (a.empty()) throw Error("agreement needs at least one item");
}

void require_multi(const RatingMatrix& m) {
    if (m.raters() < 2) throw Error("agreement needs at least 2 raters, got " + std::to_string(m.raters()));
    if (m.items() == 0) throw Error("agreement needs at least one item");
}

struct PairCounts {
    std::size_t n = 0, matches = 0, a_pos = 0, b_pos = 0;
};

PairCounts count_pair(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b) {
    require_pair(a, b);
    PairCounts c;
    c.n = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        c.matches += a[i] == b[i];
        c.a_pos += a[i] == ScreeningLabel::Include;
        c.b_pos += b[i] == ScreeningLabel::Include;
    }
    return c;
}

AgreementResult kappa_form(std::string name, double p_o, double p_e, std::size_t n, std::size_t r, bool degenerate) {
    AgreementResult res;
    res.statistic = std::move(name);
    res.p_o = p_o;
    res.p_e = p_e;
    res.n = n;
    res.r = r;
    res.degenerate = degenerate;
    res.estimate = degenerate ? 1.0 : (p_o - p_e) / (1.0 - p_e);
    return res;
}

} // namespace

double observed_agreement(const RatingMatrix& m) {
    require_multi(m);
    const std::uint64_t r = m.raters();
    std::uint64_t agreeing_pairs = 0;
    for (std::size_t i = 0; i < m.items(); ++i) {
        const std::uint64_t k1 = m.include_votes(i);
        const std::uint64_t k0 = r - k1;
        agreeing_pairs += k1 * (k1 - (k1 ? 1 : 0)) + k0 * (k0 - (k0 ? 1 : 0));
    }
    return static_cast<double>(agreeing_pairs) / (static_cast<double>(m.items()) * static_cast<double>(r * (r - 1)));
}

AgreementResult cohen_kappa(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b) {
    const auto c = count_pair(a, b);
    const double n = static_cast<double>(c.n);
    const double pa = static_cast<double>(c.a_pos) / n;
    const double pb = static_cast<double>(c.b_pos) / n;
    const double p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    const bool degenerate = (c.a_pos == 0 && c.b_pos == 0) || (c.a_pos == c.n && c.b_pos == c.n);
    return kappa_form("cohen_kappa", static_cast<double>(c.matches) / n, degenerate ? 1.0 : p_e, c.n, 2, degenerate);
}

AgreementResult pabak(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b) {
    const auto c = count_pair(a, b);
    AgreementResult res;
    res.statistic = "pabak";
    res.p_o = static_cast<double>(c.matches) / static_cast<double>(c.n);
    res.p_e = 0.5;
    res.estimate = 2.0 * res.p_o - 1.0;
    res.n = c.n;
    res.r = 2;
    return res;
}

AgreementResult gwet_ac1_pairwise(std::span<const ScreeningLabel> a, std::span<const ScreeningLabel> b) {
    const auto c = count_pair(a, b);
    const double n = static_cast<double>(c.n);
    const double pi = (static_cast<double>(c.a_pos) / n + static_cast<double>(c.b_pos) / n) / 2.0;
    return kappa_form("gwet_ac1", static_cast<double>(c.matches) / n, 2.0 * pi * (1.0 - pi), c.n, 2, false);
}

AgreementResult gwet_ac1_multi(const RatingMatrix& m) {
    const double p_o = observed_agreement(m);
    const double r = static_cast<double>(m.raters());
    double pi1 = 0.0;
    for (std::size_t i = 0; i < m.items(); ++i) pi1 += static_cast<double>(m.include_votes(i)) / r;
    pi1 /= static_cast<double>(m.items());
    const double pi0 = 1.0 - pi1;
    constexpr double q = 2.0;
    const double p_e = (pi1 * (1.0 - pi1) + pi0 * (1.0 - pi0)) / (q - 1.0);
    return kappa_form("gwet_ac1_multi", p_o, p_e, m.items(), m.raters(), false);
}

AgreementResult fleiss_kappa(const RatingMatrix& m) {
    const double p_o = observed_agreement(m);
    std::uint64_t include_total = 0;
    for (std::size_t i = 0; i < m.items(); ++i) include_total += m.include_votes(i);
    const std::uint64_t ratings = m.items() * m.raters();
    const double p1 = static_cast<double>(include_total) / static_cast<double>(ratings);
    const double p0 = 1.0 - p1;
    const bool degenerate = include_total == 0 || include_total == ratings;
    return kappa_form("fleiss_kappa", p_o, degenerate ? 1.0 : p1 * p1 + p0 * p0, m.items(), m.raters(), degenerate);
}

// ---------------------------------------------------------------------------

void BootstrapSpec::validate() const {
    if (replicates < 100) throw Error("bootstrap needs at least 100 replicates");
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error("bootstrap confidence must lie in (0, 1)");
}

namespace {

double quantile_sorted(const std::vector<double>& x, double p) {
    const double h = static_cast<double>(x.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

} // namespace

BootstrapInterval bootstrap_ci(const MatrixStatistic& statistic, const RatingMatrix& m, const BootstrapSpec& spec) {
    spec.validate();
    if (m.items() == 0) throw Error("bootstrap needs at least one item");
    statistic(m); // surfaces precondition errors before any work

    const std::size_t B = spec.replicates;
    std::vector<double> estimates(B, 0.0);
    std::vector<char> degenerate(B, 0);
    std::vector<std::exception_ptr> errors(B);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> rows(m.items());
        for (std::size_t b = begin; b < end; ++b) {
            try {
                std::mt19937_64 rng(mix_seed(spec.seed, b));
                for (auto& r : rows) r = static_cast<std::size_t>(uniform_below(rng, m.items()));
                const auto res = statistic(m.resample(rows));
                estimates[b] = res.estimate;
                degenerate[b] = res.degenerate;
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };

    std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, B);
    if (threads <= 1) {
        run_range(0, B);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (B + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(B, begin + chunk);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    BootstrapInterval out;
    std::vector<double> used;
    used.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
        if (degenerate[b])
            ++out.degenerate_replicates;
        else
            used.push_back(estimates[b]);
    }
    if (out.degenerate_replicates * 2 > B) {
        std::ostringstream os;
        os << "bootstrap: " << out.degenerate_replicates << " of " << B << " replicates are degenerate ("
           << 100.0 * static_cast<double>(out.degenerate_replicates) / static_cast<double>(B) << "%)";
        throw Error(os.str());
    }
    std::sort(used.begin(), used.end());
    const double alpha = (1.0 - spec.confidence) / 2.0;
    out.low = quantile_sorted(used, alpha);
    out.high = quantile_sorted(used, 1.0 - alpha);
    out.replicates_used = used.size();
    return out;
}

AgreementResult with_bootstrap_ci(const MatrixStatistic& statistic, const RatingMatrix& m, const BootstrapSpec& spec) {
    auto res = statistic(m);
    const auto ci = bootstrap_ci(statistic, m, spec);
    res.ci_low = ci.low;
    res.ci_high = ci.high;
    return res;
}

MatrixStatistic pairwise_statistic(
    std::function<AgreementResult(std::span<const ScreeningLabel>, std::span<const ScreeningLabel>)> f) {
    return [f = std::move(f)](const RatingMatrix& m) {
        if (m.raters() < 2) throw Error("pairwise statistic needs 2 raters");
        return f(m.column(0), m.column(1));
    };
}

std::vector<PairwiseConsistency> pairwise_consistency(const RunLedger& ledger) {
    ledger.require_complete();
    if (ledger.passes.size() < 2)
        throw Error("pairwise consistency needs at least two temperature passes, ledger has " +
                    std::to_string(ledger.passes.size()));
    const auto& first = ledger.passes.front().records;
    std::vector<std::vector<ScreeningLabel>> columns;
    for (const auto& pass : ledger.passes) {
        std::unordered_map<std::string_view, ScreeningLabel> by_id;
        for (const auto& r : pass.records) by_id.emplace(r.study_id, r.decision);
        std::vector<ScreeningLabel> col;
        col.reserve(first.size());
        for (const auto& r : first) col.push_back(by_id.at(r.study_id));
        columns.push_back(std::move(col));
    }
    std::vector<PairwiseConsistency> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::size_t j = i + 1; j < columns.size(); ++j)
            out.push_back({ledger.passes[i].temperature, ledger.passes[j].temperature,
                           cohen_kappa(columns[i], columns[j])});
    return out;
}

} // namespace screening
