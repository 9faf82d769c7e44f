#include "screening/label.hpp"

#include <algorithm>
#include <cctype>

namespace screening {

namespace {

std::string lowered_trimmed(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::optional<ScreeningLabel> try_parse_label(std::string_view token) {
    const std::string t = lowered_trimmed(token);
    if (t == "0" || t == "exclude") return ScreeningLabel::Exclude;
    if (t == "1" || t == "include") return ScreeningLabel::Include;
    return std::nullopt;
}

ScreeningLabel parse_label(std::string_view token) {
    if (auto l = try_parse_label(token)) return *l;
    throw Error("invalid label token '" + std::string(token) + "'");
}

std::string label_token(ScreeningLabel l) { return l == ScreeningLabel::Include ? "1" : "0"; }

std::string_view label_name(ScreeningLabel l) {
    return l == ScreeningLabel::Include ? "Include" : "Exclude";
}

} // namespace screening
