#pragma once

#include "screening/corpus.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screening {

/// Prompt text with exactly one each of {title}, {abstract} and {criteria}.
/// Review-specific criteria live in criteria_text, never in the template.
struct PromptTemplate {
    std::string template_text;
    std::string criteria_text;

    /// Throws unless each placeholder occurs exactly once.
    void validate() const;

    static PromptTemplate with_default_text(std::string criteria_text);
    static PromptTemplate from_files(const std::filesystem::path& template_path,
                                     const std::filesystem::path& criteria_path);
};

/// The shipped structured template: task statement, criteria block, title,
/// abstract, and a single-digit answer instruction.
std::string_view default_template_text();

struct RenderedPrompt {
    std::string text;
    bool abstract_missing = false;
};

/// Single-pass substitution; substituted content is never rescanned, so a
/// title containing "{abstract}" is emitted verbatim. Any other {identifier}
/// left in the template is reported as an unfilled placeholder.
RenderedPrompt render_prompt(const PromptTemplate& tmpl, const StudyRecord& record);

struct ChatMarkers {
    std::string user_open;
    std::string assistant_open;
    std::string turn_close;

    /// Nonempty and pairwise distinct.
    void validate() const;

    /// ChatML-style "<|im_start|>user\n" / "<|im_start|>assistant\n" / "<|im_end|>\n".
    static ChatMarkers chatml();
};

struct RenderedChat {
    std::string text;
    /// Offset, in Unicode code points, of the first assistant character.
    std::size_t mask_boundary = 0;
};

/// user_open + user + turn_close + assistant_open + assistant + turn_close.
/// Neither text may contain a marker string, which keeps the layout
/// unambiguous for parse_chat.
RenderedChat render_chat(std::string_view user_text, std::string_view assistant_text, const ChatMarkers& markers);

struct ChatTurns {
    std::string user_text;
    std::string assistant_text;
};

/// Inverse of render_chat: locates the user and assistant markers.
ChatTurns parse_chat(std::string_view chat_text, const ChatMarkers& markers);

struct SftExample {
    std::string id;
    std::string chat_text;
    std::size_t mask_boundary = 0;
    ScreeningLabel label = ScreeningLabel::Exclude;
};

struct SftExportSummary {
    std::size_t examples = 0;
    std::size_t exclude = 0;
    std::size_t include = 0;
    std::size_t abstract_missing = 0;
};

/// Builds the examples in input order; the gold response is the label digit.
std::vector<SftExample> build_sft_examples(std::span<const StudyRecord> records, const PromptTemplate& tmpl,
                                           const ChatMarkers& markers);

/// One JSON object per line: {id, chat_text, mask_boundary, label}.
SftExportSummary export_sft_dataset(std::span<const StudyRecord> records, const PromptTemplate& tmpl,
                                    const ChatMarkers& markers, const std::filesystem::path& out_path);

std::vector<SftExample> parse_sft_dataset(std::string_view text);
std::vector<SftExample> read_sft_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct OverrideEntry {
    std::string field;
    std::string previous;
    std::string value;
};

/// Configuration handed to an external trainer. Defaults are the reference
/// full fine-tuning setup.
struct TrainingManifest {
    std::string base_model = "LFM2.5-1.2B-Instruct";
    std::string adaptation_method = "Full fine-tuning";
    std::string optimizer = "AdamW (8-bit)";
    double learning_rate = 2e-5;
    int warmup_steps = 5;
    int max_steps = 320;
    double weight_decay = 0.01;
    std::string lr_scheduler = "Linear";
    int per_device_batch_size = 2;
    int gradient_accumulation_steps = 4;
    int max_seq_length = 4096;
    bool response_masking = true;
    std::string precision = "BF16";
    std::string training_stack = "Unsloth + TRL";

    std::vector<OverrideEntry> override_log;

    int effective_batch_size() const { return per_device_batch_size * gradient_accumulation_steps; }

    /// Applies field=value overrides in key order. Unknown fields and
    /// unparseable values throw before anything is modified.
    void apply_overrides(const std::map<std::string, std::string>& overrides);

    static const std::vector<std::string>& field_names();

    std::string to_json() const;
};

TrainingManifest emit_training_manifest(const std::map<std::string, std::string>& overrides,
                                        const std::filesystem::path& out_path);

} // namespace screening
