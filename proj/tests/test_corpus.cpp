#include "doctest.h"
#include "fixtures.hpp"

#include "screening/corpus.hpp"

#include <set>
#include <sstream>

using namespace screening;

TEST_SUITE("corpus") {

TEST_CASE("three-row file gives inclusion rate one third") {
    const auto c = parse_corpus("id,title,abstract,label\na,T1,A1,1\nb,T2,A2,0\nc,T3,A3,0\n", CorpusFormat::Delimited);
    CHECK(c.size() == 3);
    CHECK(c.include_count() == 1);
    CHECK(c.inclusion_rate() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("invalid label names its row") {
    std::string text = "id,title,abstract,label\n";
    for (int i = 1; i <= 9; ++i) text += "r" + std::to_string(i) + ",Title,Abs," + (i == 7 ? "2" : "0") + "\n";
    try {
        parse_corpus(text, CorpusFormat::Delimited, "fixture.csv");
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 7") != std::string::npos);
        CHECK(msg.find("'r7'") != std::string::npos);
        CHECK(msg.find("invalid label '2'") != std::string::npos);
    }
}

TEST_CASE("every bad row is reported at once") {
    const std::string text = "id,title,abstract,label\na,T,A,1\na,T,A,0\nb,,A,0\nc,T,A,\n";
    try {
        parse_corpus(text, CorpusFormat::Delimited);
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("3 invalid row(s)") != std::string::npos);
        CHECK(msg.find("duplicate id") != std::string::npos);
        CHECK(msg.find("empty title") != std::string::npos);
        CHECK(msg.find("missing label") != std::string::npos);
    }
}

TEST_CASE("missing column and unreadable file") {
    CHECK_THROWS_WITH_AS(parse_corpus("id,title,label\na,T,1\n", CorpusFormat::Delimited),
                         doctest::Contains("missing required column 'abstract'"), Error);
    CHECK_THROWS_AS(ingest_corpus("/nonexistent/corpus.csv", CorpusFormat::Delimited), Error);
}

TEST_CASE("quoted fields, column order, and label spellings") {
    const std::string text = "label,abstract,id,title,extra\r\n"
                             "Include,\"Multi-line\nabstract, with \"\"quotes\"\"\",x1,\"Title, with comma\",z\r\n"
                             " exclude ,,x2,Second,z\r\n";
    const auto c = parse_corpus(text, CorpusFormat::Delimited);
    REQUIRE(c.size() == 2);
    CHECK(c.records()[0].human_label == ScreeningLabel::Include);
    CHECK(c.records()[0].abstract == "Multi-line\nabstract, with \"quotes\"");
    CHECK(c.records()[0].title == "Title, with comma");
    CHECK(c.records()[1].human_label == ScreeningLabel::Exclude);
    CHECK(c.records()[1].abstract_missing());
    CHECK_FALSE(c.records()[0].abstract_missing());
}

TEST_CASE("record-lines format accepts numeric and string labels") {
    const std::string text = R"({"id":"a","title":"T","abstract":"A","label":1}
{"id":"b","title":"T2","abstract":null,"label":"exclude"}
)";
    const auto c = parse_corpus(text, CorpusFormat::RecordLines);
    REQUIRE(c.size() == 2);
    CHECK(c.records()[0].human_label == ScreeningLabel::Include);
    CHECK(c.records()[1].abstract_missing());
    CHECK_THROWS_WITH_AS(parse_corpus(R"({"id":"a","title":"T","abstract":"A"})", CorpusFormat::RecordLines),
                         doctest::Contains("missing field 'label'"), Error);
}

TEST_CASE("full-size export of 8,694 rows") {
    std::ostringstream os;
    os << "id,title,abstract,label\n";
    for (int i = 0; i < 8694; ++i) os << "id" << i << ",Title " << i << ",\"Abstract, " << i << "\"," << (i % 60 == 0) << "\n";
    const auto c = parse_corpus(os.str(), CorpusFormat::Delimited);
    CHECK(c.size() == 8694);
    CHECK(c.include_count() == 145);
}

TEST_CASE("ingest -> serialize -> ingest round trip") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "ab ,\"\n\xc3\xa9xyz";
    auto random_text = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            const auto k = uniform_below(rng, alphabet.size() - 1);
            // keep multi-byte sequence intact
            s += alphabet[k] == '\xc3' ? std::string("\xc3\xa9") : std::string(1, alphabet[k] == '\xa9' ? 'q' : alphabet[k]);
        }
        return s;
    };
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<StudyRecord> records;
        const auto n = 1 + uniform_below(rng, 40);
        for (std::size_t i = 0; i < n; ++i)
            records.push_back({"id-" + std::to_string(trial) + "-" + std::to_string(i), "T" + random_text(8),
                               random_text(uniform_below(rng, 30)),
                               uniform_below(rng, 2) ? ScreeningLabel::Include : ScreeningLabel::Exclude});
        const Corpus original(records);
        for (auto fmt : {CorpusFormat::Delimited, CorpusFormat::RecordLines}) {
            const auto again = parse_corpus(serialize_corpus(original, fmt), fmt);
            CHECK(again == original);
        }
    }
}

TEST_CASE("enriched split: 371 records, 315 training") {
    const auto corpus = fixtures::synthetic_corpus(233, 138);
    SplitSpec spec{315, 2024, 121.0 / 315.0, SplitMode::Enriched};
    const auto r = partition(corpus, spec);
    CHECK(r.train.total() == 315);
    CHECK(r.train.exclude == 194);
    CHECK(r.train.include == 121);
    CHECK(r.test.total() == 56);
    CHECK(r.test.exclude == 39);
    CHECK(r.test.include == 17);
    // a 38.4% target rounds to the same count
    spec.enrichment_target = 0.384;
    CHECK(partition(corpus, spec).train.include == 121);
}

TEST_CASE("exact stratification of a balanced corpus") {
    const auto corpus = fixtures::synthetic_corpus(5, 5);
    const auto r = partition(corpus, {8, 1, std::nullopt, SplitMode::Stratified});
    CHECK(r.train.include == 4);
    CHECK(r.train.exclude == 4);
}

TEST_CASE("proportional rounding of 0.37 x 80") {
    // Oracle: the two nearest integers to 29.6.
    const double share = 0.37 * 80;
    const std::set<std::size_t> allowed{static_cast<std::size_t>(std::floor(share)),
                                        static_cast<std::size_t>(std::ceil(share))};
    REQUIRE(allowed == std::set<std::size_t>{29, 30});
    const auto corpus = fixtures::synthetic_corpus(63, 37);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto r = partition(corpus, {80, seed, std::nullopt, SplitMode::Stratified});
        CHECK(allowed.count(r.train.include) == 1);
    }
}

TEST_CASE("partition errors") {
    const auto corpus = fixtures::synthetic_corpus(20, 5);
    CHECK_THROWS_WITH_AS(partition(corpus, {25, 0, std::nullopt, SplitMode::Stratified}),
                         doctest::Contains("must be smaller"), Error);
    CHECK_THROWS_AS(partition(corpus, {0, 0, std::nullopt, SplitMode::Stratified}), Error);
    CHECK_THROWS_WITH_AS(partition(corpus, {20, 0, 0.5, SplitMode::Enriched}), doctest::Contains("only 5 are available"),
                         Error);
    CHECK_THROWS_WITH_AS(partition(corpus, {24, 0, 0.0, SplitMode::Enriched}),
                         doctest::Contains("Exclude records but only 20"), Error);
    CHECK_THROWS_AS(partition(corpus, {10, 0, std::nullopt, SplitMode::Enriched}), Error);
    CHECK_THROWS_AS(partition(corpus, {10, 0, 1.5, SplitMode::Enriched}), Error);
}

TEST_CASE("partition properties on random corpora") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t ex = 1 + uniform_below(rng, 300), in = 1 + uniform_below(rng, 200);
        const auto corpus = fixtures::synthetic_corpus(ex, in, trial);
        const std::size_t n = ex + in;
        const std::size_t train = 1 + uniform_below(rng, n - 1);
        const SplitSpec spec{train, rng(), std::nullopt, SplitMode::Stratified};
        const auto r = partition(corpus, spec);

        CHECK(r == partition(corpus, spec)); // deterministic
        std::set<std::string> tr(r.train_ids.begin(), r.train_ids.end()), te(r.test_ids.begin(), r.test_ids.end());
        CHECK(tr.size() == r.train_ids.size());
        CHECK(tr.size() + te.size() == n);
        for (const auto& id : tr) CHECK(te.count(id) == 0);
        CHECK(r.train.total() == train);
        CHECK(r.train.total() + r.test.total() == n);
        CHECK(r.train.include + r.test.include == in);

        if (train >= 50 && n - train >= 50) {
            CHECK(std::abs(r.train.inclusion_rate() - corpus.inclusion_rate()) <= 0.02);
            CHECK(std::abs(r.test.inclusion_rate() - corpus.inclusion_rate()) <= 0.02);
        }
    }
}

TEST_CASE("different seeds choose different members") {
    const auto corpus = fixtures::synthetic_corpus(100, 40);
    const auto a = partition(corpus, {70, 1, std::nullopt, SplitMode::Stratified});
    const auto b = partition(corpus, {70, 2, std::nullopt, SplitMode::Stratified});
    CHECK(a.train == b.train);
    CHECK(a.train_ids != b.train_ids);
}

TEST_CASE("partition manifest round trip") {
    const auto corpus = fixtures::synthetic_corpus(30, 12);
    const auto r = partition(corpus, {30, 11, 0.4, SplitMode::Enriched});
    const auto back = parse_partition(serialize_partition(r));
    CHECK(back == r);
    CHECK(back.corpus_hash == corpus.content_hash());
}

TEST_CASE("golden partition sequence is stable across platforms") {
    // Frozen from the first run; mt19937_64 and the in-house bounded draw are
    // fully specified, so this must never change.
    const auto corpus = fixtures::synthetic_corpus(6, 4, 1);
    const auto r = partition(corpus, {5, 42, std::nullopt, SplitMode::Stratified});
    std::string joined;
    for (const auto& id : r.train_ids) joined += id + " ";
    CHECK(joined == "s00003 s00006 s00008 s00009 s00010 ");
}

}
