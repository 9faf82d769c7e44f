#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace screening {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary screening decision. Include is the positive class.
enum class ScreeningLabel : std::uint8_t { Exclude = 0, Include = 1 };

inline constexpr int to_int(ScreeningLabel l) { return static_cast<int>(l); }

inline constexpr ScreeningLabel flip(ScreeningLabel l) {
    return l == ScreeningLabel::Include ? ScreeningLabel::Exclude : ScreeningLabel::Include;
}

/// Accepts "0", "1", "include", "exclude" (case-insensitive, surrounding
/// whitespace ignored). Anything else yields nullopt.
std::optional<ScreeningLabel> try_parse_label(std::string_view token);

/// Throwing variant of try_parse_label.
ScreeningLabel parse_label(std::string_view token);

/// Canonical "0" / "1".
std::string label_token(ScreeningLabel l);

/// "Exclude" / "Include".
std::string_view label_name(ScreeningLabel l);

} // namespace screening
