#include "screening/promptkit.hpp"

#include "screening/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>

namespace screening {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 3> kPlaceholders = {"{title}", "{abstract}", "{criteria}"};

constexpr std::string_view kDefaultTemplate =
    "You are assisting with title and abstract screening for a systematic review.\n"
    "Decide whether the study below should be included for full-text review.\n"
    "\n"
    "Inclusion and exclusion criteria:\n"
    "{criteria}\n"
    "\n"
    "Title: {title}\n"
    "\n"
    "Abstract: {abstract}\n"
    "\n"
    "Answer with a single digit: 1 to include the study, 0 to exclude it.";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
}

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of a "{identifier}" token starting at pos, or 0.
std::size_t placeholder_length(std::string_view s, std::size_t pos) {
    if (s[pos] != '{') return 0;
    std::size_t i = pos + 1;
    while (i < s.size() && is_ident_char(s[i])) ++i;
    if (i == pos + 1 || i >= s.size() || s[i] != '}') return 0;
    return i - pos + 1;
}

} // namespace

std::string_view default_template_text() { return kDefaultTemplate; }

void PromptTemplate::validate() const {
    for (auto ph : kPlaceholders) {
        const auto n = count_occurrences(template_text, ph);
        if (n != 1)
            throw Error("prompt template must contain " + std::string(ph) + " exactly once (found " +
                        std::to_string(n) + ")");
    }
}

PromptTemplate PromptTemplate::with_default_text(std::string criteria_text) {
    return PromptTemplate{std::string(kDefaultTemplate), std::move(criteria_text)};
}

PromptTemplate PromptTemplate::from_files(const std::filesystem::path& template_path,
                                          const std::filesystem::path& criteria_path) {
    PromptTemplate t;
    t.template_text = template_path.empty() ? std::string(kDefaultTemplate) : read_text_file(template_path);
    if (!criteria_path.empty()) {
        t.criteria_text = read_text_file(criteria_path);
        while (!t.criteria_text.empty() && (t.criteria_text.back() == '\n' || t.criteria_text.back() == '\r'))
            t.criteria_text.pop_back();
    }
    t.validate();
    return t;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const StudyRecord& record) {
    tmpl.validate();
    const std::string_view t = tmpl.template_text;
    RenderedPrompt out;
    out.abstract_missing = record.abstract_missing();
    out.text.reserve(t.size() + record.title.size() + record.abstract.size() + tmpl.criteria_text.size());
    for (std::size_t i = 0; i < t.size();) {
        const std::size_t len = placeholder_length(t, i);
        if (len == 0) {
            out.text.push_back(t[i++]);
            continue;
        }
        const std::string_view token = t.substr(i, len);
        if (token == "{title}")
            out.text += record.title;
        else if (token == "{abstract}")
            out.text += record.abstract;
        else if (token == "{criteria}")
            out.text += tmpl.criteria_text;
        else
            throw Error("unfilled placeholder " + std::string(token) + " in prompt template");
        i += len;
    }
    return out;
}

void ChatMarkers::validate() const {
    const std::array<const std::string*, 3> m = {&user_open, &assistant_open, &turn_close};
    for (auto* s : m)
        if (s->empty()) throw Error("chat markers must be nonempty");
    if (user_open == assistant_open || user_open == turn_close || assistant_open == turn_close)
        throw Error("chat markers must be pairwise distinct");
}

ChatMarkers ChatMarkers::chatml() {
    return {"<|im_start|>user\n", "<|im_start|>assistant\n", "<|im_end|>\n"};
}

RenderedChat render_chat(std::string_view user_text, std::string_view assistant_text, const ChatMarkers& markers) {
    markers.validate();
    if (assistant_text.empty()) throw Error("assistant text (gold decision) is required");
    for (const auto* m : {&markers.user_open, &markers.assistant_open, &markers.turn_close}) {
        if (user_text.find(*m) != std::string_view::npos || assistant_text.find(*m) != std::string_view::npos)
            throw Error("chat turn text contains a marker string");
    }
    RenderedChat out;
    out.text.reserve(user_text.size() + assistant_text.size() + 64);
    out.text += markers.user_open;
    out.text += user_text;
    out.text += markers.turn_close;
    out.text += markers.assistant_open;
    out.mask_boundary = utf8_length(out.text);
    out.text += assistant_text;
    out.text += markers.turn_close;
    return out;
}

ChatTurns parse_chat(std::string_view chat_text, const ChatMarkers& markers) {
    markers.validate();
    if (!chat_text.starts_with(markers.user_open)) throw Error("chat text does not start with the user marker");
    const std::string separator = markers.turn_close + markers.assistant_open;
    const auto sep = chat_text.find(separator, markers.user_open.size());
    if (sep == std::string_view::npos) throw Error("chat text has no assistant turn");
    if (!chat_text.ends_with(markers.turn_close)) throw Error("chat text does not end with a turn close");
    const std::size_t a_begin = sep + separator.size();
    const std::size_t a_end = chat_text.size() - markers.turn_close.size();
    if (a_end < a_begin) throw Error("chat text has a truncated assistant turn");
    return {std::string(chat_text.substr(markers.user_open.size(), sep - markers.user_open.size())),
            std::string(chat_text.substr(a_begin, a_end - a_begin))};
}

std::vector<SftExample> build_sft_examples(std::span<const StudyRecord> records, const PromptTemplate& tmpl,
                                           const ChatMarkers& markers) {
    tmpl.validate();
    markers.validate();
    std::vector<SftExample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto prompt = render_prompt(tmpl, r);
        auto chat = render_chat(prompt.text, label_token(r.human_label), markers);
        out.push_back({r.id, std::move(chat.text), chat.mask_boundary, r.human_label});
    }
    return out;
}

SftExportSummary export_sft_dataset(std::span<const StudyRecord> records, const PromptTemplate& tmpl,
                                    const ChatMarkers& markers, const std::filesystem::path& out_path) {
    if (records.empty()) throw Error("empty training export");
    const auto examples = build_sft_examples(records, tmpl, markers);
    SftExportSummary summary;
    std::ostringstream os;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        json j;
        j["id"] = e.id;
        j["chat_text"] = e.chat_text;
        j["mask_boundary"] = e.mask_boundary;
        j["label"] = to_int(e.label);
        os << j.dump() << '\n';
        ++summary.examples;
        (e.label == ScreeningLabel::Include ? summary.include : summary.exclude) += 1;
        if (records[i].abstract_missing()) ++summary.abstract_missing;
    }
    write_text_file(out_path, os.str());
    return summary;
}

std::vector<SftExample> parse_sft_dataset(std::string_view text) {
    std::vector<SftExample> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            const int label = j.at("label").get<int>();
            if (label != 0 && label != 1) throw Error("label must be 0 or 1");
            out.push_back({j.at("id").get<std::string>(), j.at("chat_text").get<std::string>(),
                           j.at("mask_boundary").get<std::size_t>(), static_cast<ScreeningLabel>(label)});
        } catch (const std::exception& e) {
            throw Error("SFT line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<SftExample> read_sft_dataset(const std::filesystem::path& path) {
    return parse_sft_dataset(read_text_file(path));
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw Error("manifest field '" + field + "': cannot parse '" + text + "'");
    return value;
}

bool parse_bool(const std::string& field, const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "1" || t == "yes" || t == "enabled") return true;
    if (t == "false" || t == "0" || t == "no" || t == "disabled") return false;
    throw Error("manifest field '" + field + "': cannot parse '" + text + "' as a boolean");
}

std::string show(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

struct FieldAccess {
    std::function<std::string(const TrainingManifest&)> get;
    std::function<void(TrainingManifest&, const std::string&)> set;
};

template <typename M>
FieldAccess text_field(M TrainingManifest::*member) {
    return {[member](const TrainingManifest& m) { return m.*member; },
            [member](TrainingManifest& m, const std::string& v) { m.*member = v; }};
}

template <typename T>
FieldAccess numeric_field(const char* name, T TrainingManifest::*member) {
    return {[member](const TrainingManifest& m) {
                if constexpr (std::is_same_v<T, double>)
                    return show(m.*member);
                else
                    return std::to_string(m.*member);
            },
            [member, name](TrainingManifest& m, const std::string& v) { m.*member = parse_number<T>(name, v); }};
}

const std::map<std::string, FieldAccess>& field_table() {
    static const std::map<std::string, FieldAccess> table = {
        {"base_model", text_field(&TrainingManifest::base_model)},
        {"adaptation_method", text_field(&TrainingManifest::adaptation_method)},
        {"optimizer", text_field(&TrainingManifest::optimizer)},
        {"learning_rate", numeric_field("learning_rate", &TrainingManifest::learning_rate)},
        {"warmup_steps", numeric_field("warmup_steps", &TrainingManifest::warmup_steps)},
        {"max_steps", numeric_field("max_steps", &TrainingManifest::max_steps)},
        {"weight_decay", numeric_field("weight_decay", &TrainingManifest::weight_decay)},
        {"lr_scheduler", text_field(&TrainingManifest::lr_scheduler)},
        {"per_device_batch_size", numeric_field("per_device_batch_size", &TrainingManifest::per_device_batch_size)},
        {"gradient_accumulation_steps",
         numeric_field("gradient_accumulation_steps", &TrainingManifest::gradient_accumulation_steps)},
        {"max_seq_length", numeric_field("max_seq_length", &TrainingManifest::max_seq_length)},
        {"response_masking",
         {[](const TrainingManifest& m) { return std::string(m.response_masking ? "true" : "false"); },
          [](TrainingManifest& m, const std::string& v) { m.response_masking = parse_bool("response_masking", v); }}},
        {"precision", text_field(&TrainingManifest::precision)},
        {"training_stack", text_field(&TrainingManifest::training_stack)},
    };
    return table;
}

} // namespace

const std::vector<std::string>& TrainingManifest::field_names() {
    static const std::vector<std::string> names = {
        "base_model",   "adaptation_method",     "optimizer",
        "learning_rate", "warmup_steps",          "max_steps",
        "weight_decay", "lr_scheduler",          "per_device_batch_size",
        "gradient_accumulation_steps", "max_seq_length", "response_masking",
        "precision",    "training_stack"};
    return names;
}

void TrainingManifest::apply_overrides(const std::map<std::string, std::string>& overrides) {
    const auto& table = field_table();
    TrainingManifest staged = *this;
    for (const auto& [field, value] : overrides) {
        auto it = table.find(field);
        if (it == table.end()) throw Error("unknown manifest field '" + field + "'");
        const std::string previous = it->second.get(staged);
        it->second.set(staged, value);
        staged.override_log.push_back({field, previous, it->second.get(staged)});
    }
    if (staged.per_device_batch_size < 1 || staged.gradient_accumulation_steps < 1 || staged.max_steps < 1 ||
        staged.max_seq_length < 1 || staged.warmup_steps < 0)
        throw Error("manifest overrides produce a non-positive step or batch setting");
    *this = std::move(staged);
}

std::string TrainingManifest::to_json() const {
    json j;
    j["base_model"] = base_model;
    j["adaptation_method"] = adaptation_method;
    j["optimizer"] = optimizer;
    j["learning_rate"] = learning_rate;
    j["warmup_steps"] = warmup_steps;
    j["max_steps"] = max_steps;
    j["weight_decay"] = weight_decay;
    j["lr_scheduler"] = lr_scheduler;
    j["per_device_batch_size"] = per_device_batch_size;
    j["gradient_accumulation_steps"] = gradient_accumulation_steps;
    j["effective_batch_size"] = effective_batch_size();
    j["max_seq_length"] = max_seq_length;
    j["response_masking"] = response_masking;
    j["precision"] = precision;
    j["training_stack"] = training_stack;
    json log = json::array();
    for (const auto& o : override_log) log.push_back({{"field", o.field}, {"default", o.previous}, {"value", o.value}});
    j["overrides"] = log;
    return j.dump(2) + "\n";
}

TrainingManifest emit_training_manifest(const std::map<std::string, std::string>& overrides,
                                        const std::filesystem::path& out_path) {
    TrainingManifest m;
    m.apply_overrides(overrides);
    write_text_file(out_path, m.to_json());
    return m;
}

} // namespace screening
