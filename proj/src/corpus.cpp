#include "screening/corpus.hpp"

#include "screening/delimited.hpp"
#include "screening/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <ctime>
#include <sstream>
#include <unordered_map>

namespace screening {

using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Accumulates per-row problems so one ingest reports every bad row at once.
class RowErrors {
public:
    void add(std::size_t row, std::size_t line, std::string_view id, std::string_view what) {
        std::ostringstream os;
        os << "row " << row << " (line " << line;
        if (!id.empty()) os << ", id '" << id << "'";
        os << "): " << what;
        messages_.push_back(os.str());
    }
    void throw_if_any(const std::string& source) const {
        if (messages_.empty()) return;
        std::ostringstream os;
        os << source << ": " << messages_.size() << " invalid row(s)";
        const std::size_t shown = std::min<std::size_t>(messages_.size(), 20);
        for (std::size_t i = 0; i < shown; ++i) os << "\n  " << messages_[i];
        if (shown < messages_.size()) os << "\n  ...";
        throw Error(os.str());
    }

private:
    std::vector<std::string> messages_;
};

struct RawRow {
    std::size_t row = 0;
    std::size_t line = 0;
    std::string id, title, abstract, label;
};

std::vector<RawRow> read_delimited_rows(std::string_view text, const std::string& source) {
    const auto rows = delimited::parse(text);
    if (rows.empty()) throw Error(source + ": empty file (no header)");

    constexpr std::array<std::string_view, 4> required = {"id", "title", "abstract", "label"};
    std::array<std::size_t, 4> col{};
    const auto& header = rows.front().fields;
    for (std::size_t r = 0; r < required.size(); ++r) {
        auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
            return lower(trim(h)) == required[r];
        });
        if (it == header.end())
            throw Error(source + ": missing required column '" + std::string(required[r]) + "'");
        col[r] = static_cast<std::size_t>(it - header.begin());
    }
    const std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;

    std::vector<RawRow> out;
    RowErrors errors;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        if (f.size() < needed) {
            errors.add(i, rows[i].line, f.size() > col[0] ? f[col[0]] : "",
                       "expected at least " + std::to_string(needed) + " fields, found " +
                           std::to_string(f.size()));
            continue;
        }
        out.push_back({i, rows[i].line, f[col[0]], f[col[1]], f[col[2]], f[col[3]]});
    }
    errors.throw_if_any(source);
    return out;
}

std::vector<RawRow> read_record_lines(std::string_view text, const std::string& source) {
    std::vector<RawRow> out;
    RowErrors errors;
    std::size_t line_no = 0;
    std::size_t row_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++row_no;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            errors.add(row_no, line_no, "", std::string("malformed record: ") + e.what());
            continue;
        }
        if (!j.is_object()) {
            errors.add(row_no, line_no, "", "record is not an object");
            continue;
        }
        RawRow r{row_no, line_no, {}, {}, {}, {}};
        bool ok = true;
        for (auto [key, dest] : {std::pair{"id", &r.id}, std::pair{"title", &r.title},
                                 std::pair{"abstract", &r.abstract}, std::pair{"label", &r.label}}) {
            if (!j.contains(key)) {
                errors.add(row_no, line_no, r.id, std::string("missing field '") + key + "'");
                ok = false;
                continue;
            }
            const auto& v = j[key];
            if (v.is_string())
                *dest = v.get<std::string>();
            else if (v.is_number_integer())
                *dest = std::to_string(v.get<long long>());
            else if (v.is_null())
                dest->clear();
            else {
                errors.add(row_no, line_no, r.id, std::string("field '") + key + "' has wrong type");
                ok = false;
            }
        }
        if (ok) out.push_back(std::move(r));
    }
    errors.throw_if_any(source);
    return out;
}

} // namespace

bool StudyRecord::abstract_missing() const { return trim(abstract).empty(); }

CorpusFormat parse_corpus_format(std::string_view name) {
    const std::string n = lower(std::string(name));
    if (n == "csv" || n == "delimited") return CorpusFormat::Delimited;
    if (n == "jsonl" || n == "record-lines" || n == "lines") return CorpusFormat::RecordLines;
    throw Error("unknown corpus format '" + std::string(name) + "' (expected csv or jsonl)");
}

Corpus::Corpus(std::vector<StudyRecord> records, Provenance provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.id.empty()) throw Error("record " + std::to_string(i + 1) + " has an empty id");
        if (trim(r.title).empty()) throw Error("record '" + r.id + "' has an empty title");
        if (!index_.emplace(r.id, i).second) throw Error("duplicate id '" + r.id + "'");
    }
}

std::size_t Corpus::include_count() const {
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [](const auto& r) {
        return r.human_label == ScreeningLabel::Include;
    }));
}

double Corpus::inclusion_rate() const {
    return empty() ? 0.0 : static_cast<double>(include_count()) / static_cast<double>(size());
}

const StudyRecord* Corpus::find(std::string_view id) const {
    auto idx = index_of(id);
    return idx ? &records_[*idx] : nullptr;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<StudyRecord> Corpus::select(const std::vector<std::string>& ids) const {
    std::vector<StudyRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index_.find(id);
        if (it == index_.end()) throw Error("id '" + id + "' not present in corpus");
        out.push_back(records_[it->second]);
    }
    return out;
}

std::string Corpus::content_hash() const { return sha256_hex(serialize_corpus(*this, CorpusFormat::RecordLines)); }

Corpus parse_corpus(std::string_view text, CorpusFormat format, std::string source) {
    const auto raw = format == CorpusFormat::Delimited ? read_delimited_rows(text, source)
                                                       : read_record_lines(text, source);
    std::vector<StudyRecord> records;
    records.reserve(raw.size());
    RowErrors errors;
    std::unordered_map<std::string, std::size_t> first_row;
    for (const auto& r : raw) {
        const std::string id = trim(r.id);
        bool ok = true;
        if (id.empty()) {
            errors.add(r.row, r.line, "", "empty id");
            ok = false;
        } else if (auto [it, fresh] = first_row.emplace(id, r.row); !fresh) {
            errors.add(r.row, r.line, id, "duplicate id (first seen on row " + std::to_string(it->second) + ")");
            ok = false;
        }
        if (trim(r.title).empty()) {
            errors.add(r.row, r.line, id, "empty title");
            ok = false;
        }
        auto label = try_parse_label(r.label);
        if (!label) {
            errors.add(r.row, r.line, id,
                       r.label.empty() ? std::string("missing label") : "invalid label '" + r.label + "'");
            ok = false;
        }
        if (ok) records.push_back({id, r.title, r.abstract, *label});
    }
    errors.throw_if_any(source);
    return Corpus(std::move(records), Provenance{std::move(source), utc_now_iso()});
}

Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format) {
    return parse_corpus(read_text_file(path), format, path.string());
}

std::string serialize_corpus(const Corpus& corpus, CorpusFormat format) {
    std::ostringstream os;
    if (format == CorpusFormat::Delimited) {
        delimited::write_row(os, {"id", "title", "abstract", "label"});
        for (const auto& r : corpus.records())
            delimited::write_row(os, {r.id, r.title, r.abstract, label_token(r.human_label)});
    } else {
        for (const auto& r : corpus.records()) {
            json j;
            j["id"] = r.id;
            j["title"] = r.title;
            j["abstract"] = r.abstract;
            j["label"] = to_int(r.human_label);
            os << j.dump() << '\n';
        }
    }
    return os.str();
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
    write_text_file(path, serialize_corpus(corpus, format));
}

// ---------------------------------------------------------------------------

std::string_view split_mode_name(SplitMode m) { return m == SplitMode::Enriched ? "enriched" : "stratified"; }

SplitMode parse_split_mode(std::string_view name) {
    const std::string n = lower(std::string(name));
    if (n == "stratified") return SplitMode::Stratified;
    if (n == "enriched") return SplitMode::Enriched;
    throw Error("unknown split mode '" + std::string(name) + "'");
}

double SplitCounts::inclusion_rate() const {
    return total() == 0 ? 0.0 : static_cast<double>(include) / static_cast<double>(total());
}

std::size_t training_include_quota(std::size_t includes, std::size_t excludes, const SplitSpec& spec) {
    const std::size_t n = includes + excludes;
    if (spec.train_size == 0) throw Error("train_size must be positive");
    if (spec.train_size >= n)
        throw Error("train_size " + std::to_string(spec.train_size) + " must be smaller than the corpus size " +
                    std::to_string(n));

    std::size_t quota = 0;
    if (spec.mode == SplitMode::Stratified) {
        if (spec.enrichment_target) throw Error("enrichment_target is only valid in enriched mode");
        // Largest remainder over the two classes. Exact integer arithmetic:
        // include share = train_size * includes / n.
        const std::size_t inc_floor = spec.train_size * includes / n;
        const std::size_t exc_floor = spec.train_size * excludes / n;
        const std::size_t inc_rem = spec.train_size * includes % n;
        const std::size_t exc_rem = spec.train_size * excludes % n;
        quota = inc_floor;
        if (inc_floor + exc_floor < spec.train_size && inc_rem > exc_rem) quota += 1;
        // equal remainders: the extra slot goes to Exclude
    } else {
        if (!spec.enrichment_target) throw Error("enriched mode requires enrichment_target");
        const double target = *spec.enrichment_target;
        if (!(target >= 0.0 && target <= 1.0)) throw Error("enrichment_target must lie in [0, 1]");
        const double wanted = target * static_cast<double>(spec.train_size);
        quota = static_cast<std::size_t>(round_to(wanted, 0));
        if (quota > includes)
            throw Error("enrichment_target " + std::to_string(target) + " needs " + std::to_string(quota) +
                        " Include records but only " + std::to_string(includes) + " are available");
        if (spec.train_size - quota > excludes)
            throw Error("enrichment_target " + std::to_string(target) + " needs " +
                        std::to_string(spec.train_size - quota) + " Exclude records but only " +
                        std::to_string(excludes) + " are available");
    }
    return quota;
}

PartitionResult partition(const Corpus& corpus, const SplitSpec& spec) {
    std::vector<std::size_t> includes, excludes;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        (corpus.records()[i].human_label == ScreeningLabel::Include ? includes : excludes).push_back(i);

    const std::size_t inc_quota = training_include_quota(includes.size(), excludes.size(), spec);
    const std::size_t exc_quota = spec.train_size - inc_quota;

    std::mt19937_64 rng(spec.seed);
    fisher_yates_shuffle(excludes, rng);
    fisher_yates_shuffle(includes, rng);

    std::vector<bool> in_train(corpus.size(), false);
    for (std::size_t k = 0; k < exc_quota; ++k) in_train[excludes[k]] = true;
    for (std::size_t k = 0; k < inc_quota; ++k) in_train[includes[k]] = true;

    PartitionResult result;
    result.spec = spec;
    result.corpus_size = corpus.size();
    result.corpus_hash = corpus.content_hash();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& r = corpus.records()[i];
        auto& ids = in_train[i] ? result.train_ids : result.test_ids;
        auto& counts = in_train[i] ? result.train : result.test;
        ids.push_back(r.id);
        (r.human_label == ScreeningLabel::Include ? counts.include : counts.exclude) += 1;
    }
    return result;
}

namespace {

json split_json(const std::vector<std::string>& ids, const SplitCounts& c) {
    json j;
    j["total"] = c.total();
    j["exclude"] = c.exclude;
    j["include"] = c.include;
    j["inclusion_rate"] = c.inclusion_rate();
    j["ids"] = ids;
    return j;
}

} // namespace

std::string serialize_partition(const PartitionResult& result) {
    json j;
    j["seed"] = result.spec.seed;
    j["mode"] = split_mode_name(result.spec.mode);
    j["train_size"] = result.spec.train_size;
    j["enrichment_target"] = result.spec.enrichment_target ? json(*result.spec.enrichment_target) : json(nullptr);
    j["corpus_size"] = result.corpus_size;
    j["corpus_hash"] = result.corpus_hash;
    j["train"] = split_json(result.train_ids, result.train);
    j["test"] = split_json(result.test_ids, result.test);
    return j.dump(2) + "\n";
}

PartitionResult parse_partition(std::string_view text) {
    try {
        const auto j = json::parse(text);
        PartitionResult r;
        r.spec.seed = j.at("seed").get<std::uint64_t>();
        r.spec.mode = parse_split_mode(j.at("mode").get<std::string>());
        r.spec.train_size = j.at("train_size").get<std::size_t>();
        if (!j.at("enrichment_target").is_null()) r.spec.enrichment_target = j["enrichment_target"].get<double>();
        r.corpus_size = j.at("corpus_size").get<std::size_t>();
        r.corpus_hash = j.at("corpus_hash").get<std::string>();
        for (auto [key, ids, counts] : {std::tuple{"train", &r.train_ids, &r.train},
                                        std::tuple{"test", &r.test_ids, &r.test}}) {
            const auto& s = j.at(key);
            *ids = s.at("ids").get<std::vector<std::string>>();
            counts->exclude = s.at("exclude").get<std::size_t>();
            counts->include = s.at("include").get<std::size_t>();
            if (counts->total() != ids->size())
                throw Error(std::string("partition manifest: ") + key + " counts do not sum to its id list");
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed partition manifest: ") + e.what());
    }
}

void write_partition(const PartitionResult& result, const std::filesystem::path& path) {
    write_text_file(path, serialize_partition(result));
}

PartitionResult read_partition(const std::filesystem::path& path) { return parse_partition(read_text_file(path)); }

} // namespace screening
