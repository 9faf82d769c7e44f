#include "screening/delimited.hpp"

#include "screening/label.hpp"

#include <ostream>

namespace screening::delimited {

std::vector<Row> parse(std::string_view text, char delimiter) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.fields.size() == 1 && row.fields.front().empty();
        if (!blank) rows.push_back(std::move(row));
        row = Row{};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            // handled by the '\n' branch
        } else if (c == '\n') {
            end_row();
            ++line;
            row.line = line;
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes)
        throw Error("unterminated quoted field starting on line " + std::to_string(row.line));
    if (field_started || !field.empty() || !row.fields.empty()) end_row();
    return rows;
}

std::string escape(std::string_view field, char delimiter) {
    const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                              std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << delimiter;
        out << escape(fields[i], delimiter);
    }
    out << '\n';
}

} // namespace screening::delimited
