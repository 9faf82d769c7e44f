#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "reference_tables.hpp"

#include "screening/agreement.hpp"
#include "screening/inference.hpp"

#include <cmath>

using namespace screening;

namespace {

using Column = std::vector<ScreeningLabel>;

Column random_column(std::mt19937_64& rng, std::size_t n, std::uint64_t include_percent) {
    Column c;
    for (std::size_t i = 0; i < n; ++i)
        c.push_back(uniform_below(rng, 100) < include_percent ? ScreeningLabel::Include : ScreeningLabel::Exclude);
    return c;
}

/// Column that copies `base` with probability agree_percent, else draws fresh.
Column noisy_copy(std::mt19937_64& rng, const Column& base, std::uint64_t agree_percent) {
    Column c;
    for (auto l : base) c.push_back(uniform_below(rng, 100) < agree_percent ? l : flip(l));
    return c;
}

std::vector<Column> random_raters(std::mt19937_64& rng, std::size_t n, std::size_t r) {
    const auto base = random_column(rng, n, 10 + uniform_below(rng, 80));
    std::vector<Column> out;
    for (std::size_t k = 0; k < r; ++k) out.push_back(noisy_copy(rng, base, 50 + uniform_below(rng, 51)));
    return out;
}

Column flipped(const Column& c) {
    Column out;
    for (auto l : c) out.push_back(flip(l));
    return out;
}

RunLedger ledger_from(const std::vector<Column>& passes, const std::vector<double>& temperatures) {
    RunLedger ledger;
    ledger.config.temperatures = temperatures;
    for (std::size_t p = 0; p < passes.size(); ++p) {
        PassRecords pr{temperatures[p], {}};
        for (std::size_t i = 0; i < passes[p].size(); ++i) {
            PredictionRecord r;
            r.study_id = "s" + std::to_string(i);
            r.temperature = temperatures[p];
            r.decision = passes[p][i];
            r.raw_text = label_token(passes[p][i]);
            r.route = ParseRoute::Digit;
            pr.records.push_back(r);
        }
        ledger.passes.push_back(pr);
    }
    ledger.complete = true;
    return ledger;
}

const BootstrapSpec kQuick{400, 7, 0.95, 0};

} // namespace

TEST_SUITE("agreement") {

TEST_CASE("observed agreement") {
    using L = ScreeningLabel;
    const Column a{L::Include, L::Include, L::Exclude, L::Exclude};
    const Column b{L::Include, L::Exclude, L::Exclude, L::Exclude};
    CHECK(observed_agreement(RatingMatrix::from_columns({a, b})) == 0.75);
    CHECK(observed_agreement(RatingMatrix::from_columns({a, a, a, a})) == 1.0);
    CHECK_THROWS_AS(observed_agreement(RatingMatrix::from_columns({a})), Error);
    const auto fd = fixtures::columns_from(fixtures::kFullDataset);
    CHECK(observed_agreement(RatingMatrix::from_columns({fd.human, fd.predicted})) ==
          doctest::Approx(7151.0 / 8277.0).epsilon(1e-15));
}

TEST_CASE("reference pairwise coefficients") {
    for (const auto& s : reference::settings()) {
        CAPTURE(s.name);
        const auto c = fixtures::columns_from(s.counts);
        const auto k = cohen_kappa(c.human, c.predicted);
        const auto p = pabak(c.human, c.predicted);
        const auto g = gwet_ac1_pairwise(c.human, c.predicted);
        CHECK(format_fixed(100.0 * k.p_o, 2) == s.observed);
        CHECK(std::fabs(k.estimate - s.agreement[0]) <= 0.001);
        CHECK(std::fabs(p.estimate - s.agreement[1]) <= 0.001);
        CHECK(std::fabs(g.estimate - s.agreement[2]) <= 0.001);
        CHECK(format_fixed(k.estimate, 3) == format_fixed(s.agreement[0], 3));
        CHECK(format_fixed(p.estimate, 3) == format_fixed(s.agreement[1], 3));
        CHECK(format_fixed(g.estimate, 3) == format_fixed(s.agreement[2], 3));
        CHECK(k.n == s.n);
        CHECK(k.r == 2);
    }
}

TEST_CASE("trivial coefficient cases") {
    using L = ScreeningLabel;
    const Column mixed{L::Include, L::Exclude, L::Include, L::Exclude};
    CHECK(cohen_kappa(mixed, mixed).estimate == 1.0);
    CHECK_FALSE(cohen_kappa(mixed, mixed).degenerate);
    const Column half{L::Include, L::Exclude, L::Exclude, L::Include};
    CHECK(pabak(mixed, half).estimate == 0.0);
    CHECK(pabak(mixed, half).p_e == 0.5);
    const Column constant(4, L::Exclude);
    const auto d = cohen_kappa(constant, constant);
    CHECK(d.degenerate);
    CHECK(d.estimate == 1.0);
    CHECK_THROWS_AS(cohen_kappa(mixed, Column{L::Include}), Error);
    CHECK_THROWS_AS(pabak(mixed, Column{}), Error);
    CHECK_THROWS_AS(gwet_ac1_pairwise(mixed, Column{L::Include}), Error);
    CHECK(gwet_ac1_multi(RatingMatrix::from_columns({mixed, mixed, mixed})).estimate == 1.0);
    CHECK(fleiss_kappa(RatingMatrix::from_columns({mixed, mixed, mixed})).estimate == 1.0);
    const auto all_same = fleiss_kappa(RatingMatrix::from_columns({constant, constant, constant}));
    CHECK(all_same.degenerate);
    CHECK_THROWS_AS(fleiss_kappa(RatingMatrix::from_columns({mixed})), Error);
}

TEST_CASE("oracle equivalence on random matrices") {
    std::mt19937_64 rng(2718);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + uniform_below(rng, 50), r = 2 + uniform_below(rng, 4);
        const auto raters = random_raters(rng, n, r);
        const auto m = RatingMatrix::from_columns(raters);
        CHECK(std::fabs(observed_agreement(m) - oracle::pairwise_observed(raters)) < 1e-12);
        const auto f = fleiss_kappa(m);
        if (const auto ref = oracle::fleiss(raters)) {
            CHECK_FALSE(f.degenerate);
            CHECK(std::fabs(f.estimate - *ref) < 1e-12);
        } else {
            CHECK(f.degenerate);
        }
        CHECK(std::fabs(gwet_ac1_multi(m).estimate - oracle::gwet_ac1(raters)) < 1e-12);
    }
}

TEST_CASE("two-rater reductions") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto raters = random_raters(rng, 1 + uniform_below(rng, 60), 2);
        const auto m = RatingMatrix::from_columns(raters);
        CHECK(std::fabs(gwet_ac1_multi(m).estimate - gwet_ac1_pairwise(raters[0], raters[1]).estimate) < 1e-12);
        const auto f = fleiss_kappa(m);
        if (const auto pi = oracle::scott_pi(raters[0], raters[1])) CHECK(std::fabs(f.estimate - *pi) < 1e-12);
        const auto k = cohen_kappa(raters[0], raters[1]);
        if (const auto ref = oracle::cohen(raters[0], raters[1])) CHECK(std::fabs(k.estimate - *ref) < 1e-12);
    }
}

TEST_CASE("four-rater matrix of human plus three identical passes") {
    const auto fd = fixtures::columns_from(fixtures::kFullDataset);
    const std::vector<Column> raters{fd.human, fd.predicted, fd.predicted, fd.predicted};
    const auto m = RatingMatrix::from_columns(raters);
    const auto f = fleiss_kappa(m);
    const auto g = gwet_ac1_multi(m);
    CHECK(std::fabs(f.estimate - *oracle::fleiss(raters)) < 1e-12);
    CHECK(std::fabs(g.estimate - oracle::gwet_ac1(raters)) < 1e-12);
    CHECK(f.r == 4);
    CHECK(f.n == 8277);
    // shuffled fixtures give the same value: the statistic depends on counts only
    const auto other = fixtures::columns_from(fixtures::kFullDataset, 999);
    const auto m2 = RatingMatrix::from_columns({other.human, other.predicted, other.predicted, other.predicted});
    CHECK(fleiss_kappa(m2).estimate == doctest::Approx(f.estimate).epsilon(1e-13));
}

TEST_CASE("label swap invariance") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto raters = random_raters(rng, 2 + uniform_below(rng, 80), 2);
        const auto a = raters[0], b = raters[1];
        CHECK(pabak(a, b).estimate == pabak(flipped(a), flipped(b)).estimate);
        const auto k1 = cohen_kappa(a, b), k2 = cohen_kappa(flipped(a), flipped(b));
        CHECK(k1.degenerate == k2.degenerate);
        CHECK(std::fabs(k1.estimate - k2.estimate) < 1e-12);
        CHECK(std::fabs(gwet_ac1_pairwise(a, b).estimate - gwet_ac1_pairwise(flipped(a), flipped(b)).estimate) <
              1e-12);
    }
}

TEST_CASE("estimates lie in [-1, 1] and equal 1 only at perfect agreement") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto raters = random_raters(rng, 1 + uniform_below(rng, 40), 2 + uniform_below(rng, 3));
        const auto m = RatingMatrix::from_columns(raters);
        for (const auto& res : {fleiss_kappa(m), gwet_ac1_multi(m), cohen_kappa(raters[0], raters[1]),
                                pabak(raters[0], raters[1]), gwet_ac1_pairwise(raters[0], raters[1])}) {
            CHECK(res.estimate >= -1.0 - 1e-12);
            CHECK(res.estimate <= 1.0 + 1e-12);
            if (!res.degenerate) CHECK((std::fabs(res.estimate - 1.0) < 1e-12) == (res.p_o == 1.0));
        }
    }
}

TEST_CASE("monotone in observed agreement at fixed marginals") {
    // two raters, 100 items, 40 Include each; overlap k sets p_o = (20 + 2k) / 100
    std::optional<std::array<double, 4>> previous;
    for (int k = 0; k <= 40; ++k) {
        Column a(100, ScreeningLabel::Exclude), b(100, ScreeningLabel::Exclude);
        for (int i = 0; i < 40; ++i) a[i] = ScreeningLabel::Include;
        for (int i = 40 - k; i < 80 - k; ++i) b[i] = ScreeningLabel::Include;
        const auto m = RatingMatrix::from_columns({a, b});
        CHECK(observed_agreement(m) == doctest::Approx((20.0 + 2 * k) / 100.0));
        const std::array<double, 4> now{cohen_kappa(a, b).estimate, pabak(a, b).estimate,
                                        gwet_ac1_pairwise(a, b).estimate, fleiss_kappa(m).estimate};
        if (previous)
            for (std::size_t s = 0; s < 4; ++s) CHECK(now[s] > (*previous)[s]);
        previous = now;
    }
}

TEST_CASE("row order does not matter") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto raters = random_raters(rng, 5 + uniform_below(rng, 40), 3);
        const auto m = RatingMatrix::from_columns(raters);
        std::vector<std::size_t> rows(m.items());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        fisher_yates_shuffle(rows, rng);
        const auto s = m.resample(rows);
        CHECK(std::fabs(fleiss_kappa(s).estimate - fleiss_kappa(m).estimate) < 1e-12);
        CHECK(std::fabs(gwet_ac1_multi(s).estimate - gwet_ac1_multi(m).estimate) < 1e-12);
        CHECK(std::fabs(cohen_kappa(s.column(0), s.column(1)).estimate -
                        cohen_kappa(m.column(0), m.column(1)).estimate) < 1e-12);
    }
}

TEST_CASE("bootstrap is deterministic for a seed and independent of threads") {
    std::mt19937_64 rng(1);
    const auto m = RatingMatrix::from_columns(random_raters(rng, 120, 3));
    auto spec = kQuick;
    spec.threads = 1;
    const auto a = bootstrap_ci(fleiss_kappa, m, spec);
    const auto b = bootstrap_ci(fleiss_kappa, m, spec);
    spec.threads = 4;
    const auto c = bootstrap_ci(fleiss_kappa, m, spec);
    CHECK(a.low == b.low);
    CHECK(a.high == b.high);
    CHECK(a.low == c.low);
    CHECK(a.high == c.high);
    spec.seed = 8;
    const auto d = bootstrap_ci(fleiss_kappa, m, spec);
    CHECK((d.low != a.low || d.high != a.high));
    CHECK(a.replicates_used == 400);
}

TEST_CASE("perfect agreement gives a degenerate-free unit interval") {
    using L = ScreeningLabel;
    Column c;
    for (int i = 0; i < 40; ++i) c.push_back(i % 3 ? L::Exclude : L::Include);
    const auto m = RatingMatrix::from_columns({c, c, c, c});
    const auto ci = bootstrap_ci(gwet_ac1_multi, m, kQuick);
    CHECK(ci.low == 1.0);
    CHECK(ci.high == 1.0);
    const auto k = with_bootstrap_ci(fleiss_kappa, m, kQuick);
    CHECK(*k.ci_low == 1.0);
    CHECK(*k.ci_high == 1.0);
}

TEST_CASE("planted agreement interval contains the estimate") {
    std::mt19937_64 rng(2024);
    const auto base = random_column(rng, 500, 40);
    const auto m = RatingMatrix::from_columns({base, noisy_copy(rng, base, 90), noisy_copy(rng, base, 90)});
    const BootstrapSpec spec{2000, 11, 0.95, 0};
    for (const auto& stat : std::vector<MatrixStatistic>{fleiss_kappa, gwet_ac1_multi,
                                                         pairwise_statistic(cohen_kappa)}) {
        const auto res = with_bootstrap_ci(stat, m, spec);
        CHECK(*res.ci_low <= res.estimate);
        CHECK(res.estimate <= *res.ci_high);
        CHECK(*res.ci_high - *res.ci_low < 0.2);
        CHECK(*res.ci_high - *res.ci_low > 0.0);
    }
}

TEST_CASE("bootstrap validation and degeneracy") {
    using L = ScreeningLabel;
    const Column mixed{L::Include, L::Exclude, L::Exclude, L::Exclude, L::Exclude, L::Exclude, L::Exclude};
    const auto m = RatingMatrix::from_columns({mixed, mixed});
    CHECK_THROWS_AS(bootstrap_ci(fleiss_kappa, m, {99, 1, 0.95, 0}), Error);
    CHECK_THROWS_AS(bootstrap_ci(fleiss_kappa, m, {200, 1, 1.0, 0}), Error);
    CHECK_THROWS_AS(bootstrap_ci(fleiss_kappa, m, {200, 1, 0.0, 0}), Error);
    // degenerate whenever the replicate drew item "1" fewer than twice (~74%)
    const MatrixStatistic flaky = [&](const RatingMatrix& x) {
        auto res = cohen_kappa(x.column(0), x.column(1));
        res.degenerate = std::count(x.item_ids().begin(), x.item_ids().end(), std::string("1")) < 2;
        return res;
    };
    CHECK_THROWS_WITH_AS(bootstrap_ci(flaky, m, {200, 1, 0.95, 0}), doctest::Contains("degenerate"), Error);
    // one Include among 200 items: about a third of the replicates never draw it
    Column rare(200, L::Exclude);
    rare[0] = L::Include;
    const auto ci = bootstrap_ci(fleiss_kappa, RatingMatrix::from_columns({rare, rare}), {200, 1, 0.95, 0});
    CHECK(ci.degenerate_replicates > 40);
    CHECK(ci.degenerate_replicates < 100);
    CHECK(ci.replicates_used == 200 - ci.degenerate_replicates);
}

TEST_CASE("pairwise consistency between passes") {
    std::mt19937_64 rng(3);
    Column base;
    for (int i = 0; i < 100; ++i) base.push_back(i % 2 ? ScreeningLabel::Include : ScreeningLabel::Exclude);
    auto other = base;
    other[17] = flip(other[17]);
    const auto rows = pairwise_consistency(ledger_from({base, base, other}, {0.1, 0.4, 0.8}));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].temperature_a == 0.1);
    CHECK(rows[0].temperature_b == 0.4);
    CHECK(rows[0].kappa.estimate == 1.0);
    CHECK(rows[2].temperature_a == 0.4);
    CHECK(rows[2].temperature_b == 0.8);
    CHECK(std::fabs(rows[1].kappa.estimate - *oracle::cohen(base, other)) < 1e-12);
    CHECK(std::fabs(rows[2].kappa.estimate - *oracle::cohen(base, other)) < 1e-12);

    const Column constant(10, ScreeningLabel::Exclude);
    const auto same = pairwise_consistency(ledger_from({constant, constant}, {0.1, 0.4}));
    CHECK(same[0].kappa.estimate == 1.0);
    CHECK(same[0].kappa.degenerate);

    CHECK_THROWS_AS(pairwise_consistency(ledger_from({base}, {0.1})), Error);
    auto incomplete = ledger_from({base, base}, {0.1, 0.4});
    incomplete.complete = false;
    CHECK_THROWS_AS(pairwise_consistency(incomplete), Error);
    auto ragged = ledger_from({base, base}, {0.1, 0.4});
    ragged.passes[1].records.pop_back();
    CHECK_THROWS_AS(pairwise_consistency(ragged), Error);
}

TEST_CASE("rating matrix file round trip") {
    const std::string text = "id,human,model\na,1,1\nb,0,1\nc,0,0\n";
    const auto m = parse_rating_matrix(text);
    CHECK(m.items() == 3);
    CHECK(m.raters() == 2);
    CHECK(m.rater_ids() == std::vector<std::string>{"human", "model"});
    CHECK(m.at(1, 1) == ScreeningLabel::Include);
    CHECK(parse_rating_matrix(serialize_rating_matrix(m)).item_ids() == m.item_ids());
    CHECK(serialize_rating_matrix(parse_rating_matrix(serialize_rating_matrix(m))) == serialize_rating_matrix(m));
    CHECK_THROWS_AS(parse_rating_matrix("id,a,b\nx,1\n"), Error);
    CHECK_THROWS_AS(parse_rating_matrix("id,a,b\nx,1,2\n"), Error);
    CHECK_THROWS_AS(parse_rating_matrix("id,a,b\nx,1,\n"), Error);
    CHECK_THROWS_AS(parse_rating_matrix("id,a,b\n"), Error);
}

}
