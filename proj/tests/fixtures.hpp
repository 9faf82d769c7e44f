#pragma once

// Shared fixtures for unit and acceptance tests.

#include "screening/corpus.hpp"
#include "screening/inference.hpp"
#include "screening/metrics.hpp"
#include "screening/transport.hpp"
#include "screening/util.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using screening::ScreeningLabel;

/// Confusion counts reconstructed from the reference tables (see the
/// count-reconstruction search in the acceptance suite).
inline constexpr screening::ConfusionMatrix kFullDataset{31, 7120, 1123, 3};
inline constexpr screening::ConfusionMatrix kHeldOut{16, 37, 2, 1};
inline constexpr screening::ConfusionMatrix kBase{34, 506, 7737, 0};

struct LabelColumns {
    std::vector<ScreeningLabel> human;
    std::vector<ScreeningLabel> predicted;
};

/// Human/predicted columns realizing the counts. Items are interleaved by a
/// seeded shuffle so no statistic can rely on block order.
inline LabelColumns columns_from(const screening::ConfusionMatrix& cm, std::uint64_t seed = 17) {
    LabelColumns c;
    auto push = [&](std::uint64_t n, ScreeningLabel h, ScreeningLabel p) {
        for (std::uint64_t i = 0; i < n; ++i) {
            c.human.push_back(h);
            c.predicted.push_back(p);
        }
    };
    push(cm.tp, ScreeningLabel::Include, ScreeningLabel::Include);
    push(cm.tn, ScreeningLabel::Exclude, ScreeningLabel::Exclude);
    push(cm.fp, ScreeningLabel::Exclude, ScreeningLabel::Include);
    push(cm.fn, ScreeningLabel::Include, ScreeningLabel::Exclude);
    std::vector<std::size_t> order(c.human.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    screening::fisher_yates_shuffle(order, rng);
    LabelColumns out;
    for (auto i : order) {
        out.human.push_back(c.human[i]);
        out.predicted.push_back(c.predicted[i]);
    }
    return out;
}

/// Corpus with the given class counts; ids "s0001"..., labels interleaved.
inline screening::Corpus synthetic_corpus(std::size_t excludes, std::size_t includes, std::uint64_t seed = 3,
                                          bool some_missing_abstracts = false) {
    std::vector<ScreeningLabel> labels(excludes, ScreeningLabel::Exclude);
    labels.insert(labels.end(), includes, ScreeningLabel::Include);
    std::mt19937_64 rng(seed);
    screening::fisher_yates_shuffle(labels, rng);
    std::vector<screening::StudyRecord> records;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "s%05zu", i + 1);
        std::string abstract = "Abstract of study " + std::to_string(i + 1) + ", describing \"methods\", results.";
        if (some_missing_abstracts && i % 7 == 3) abstract.clear();
        records.push_back({id, "Study title " + std::to_string(i + 1), abstract, labels[i]});
    }
    return screening::Corpus(std::move(records));
}

/// Temporary directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("screening-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Writes a replay record file answering each (prompt, temperature) request.
inline void write_replay(const std::filesystem::path& path, const std::vector<screening::PromptItem>& items,
                         const std::vector<double>& temperatures,
                         const std::function<std::string(std::size_t item, double temperature)>& response) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (double t : temperatures)
        for (std::size_t i = 0; i < items.size(); ++i) {
            screening::ChatRequest req{items[i].prompt, t, 8, false, ""};
            out << screening::transport_record_line(req, {response(i, t), 0.25}) << '\n';
        }
}

/// Transport stub that counts calls per fingerprint and can fail on demand.
class ScriptedTransport : public screening::Transport {
public:
    using Script = std::function<std::string(const screening::ChatRequest&, int call_index)>;
    explicit ScriptedTransport(Script script) : script_(std::move(script)) {}

    screening::ChatResponse complete(const screening::ChatRequest& request) override {
        int index;
        {
            std::lock_guard lock(mutex_);
            index = calls_[screening::request_fingerprint(request)]++;
            ++total_;
        }
        return {script_(request, index), 0.0};
    }
    std::string identity() const override { return "scripted"; }

    std::size_t total_calls() const {
        std::lock_guard lock(mutex_);
        return total_;
    }
    std::map<std::string, int> calls() const {
        std::lock_guard lock(mutex_);
        return calls_;
    }

private:
    Script script_;
    mutable std::mutex mutex_;
    std::map<std::string, int> calls_;
    std::size_t total_ = 0;
};

} // namespace fixtures
