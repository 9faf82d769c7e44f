#pragma once

// Hand-derived parse table: expected values follow directly from the
// first-digit / earliest-keyword / majority-class rules.

#include "screening/inference.hpp"

#include <string>
#include <vector>

namespace fixtures {

struct ParseCase {
    std::string raw;
    screening::ScreeningLabel majority;
    screening::ScreeningLabel decision;
    screening::ParseRoute route;
};

inline std::vector<ParseCase> parse_cases() {
    using screening::ParseRoute;
    constexpr auto Ex = screening::ScreeningLabel::Exclude;
    constexpr auto In = screening::ScreeningLabel::Include;
    return {
        // digits
        {"1", Ex, In, ParseRoute::Digit},
        {"0", Ex, Ex, ParseRoute::Digit},
        {"0", In, Ex, ParseRoute::Digit},
        {" 1\n", Ex, In, ParseRoute::Digit},
        {"Answer: 0", Ex, Ex, ParseRoute::Digit},
        {"10", Ex, In, ParseRoute::Digit},
        {"01", Ex, Ex, ParseRoute::Digit},
        {"Score: 10/10, include", Ex, In, ParseRoute::Digit},
        {"2023 study: exclude", Ex, Ex, ParseRoute::Digit},
        {"2345", In, In, ParseRoute::Fallback},
        {"Step 2: 9 criteria met -> 1", Ex, In, ParseRoute::Digit},
        // digit beats an earlier keyword
        {"include? no: 0", In, Ex, ParseRoute::Digit},
        {"exclude (1)", Ex, In, ParseRoute::Digit},
        // keywords
        {"I would exclude this study.", In, Ex, ParseRoute::Keyword},
        {"Include", Ex, In, ParseRoute::Keyword},
        {"EXCLUDE", In, Ex, ParseRoute::Keyword},
        {"iNcLuDe", Ex, In, ParseRoute::Keyword},
        {"include, not exclude", Ex, In, ParseRoute::Keyword},
        {"exclude rather than include", In, Ex, ParseRoute::Keyword},
        {"Do not include this study", Ex, In, ParseRoute::Keyword},
        {"Included.", Ex, In, ParseRoute::Keyword},
        {"excluded", In, Ex, ParseRoute::Keyword},
        {"inclusion criteria met; include", Ex, In, ParseRoute::Keyword},
        // fallbacks
        {"", Ex, Ex, ParseRoute::Fallback},
        {"", In, In, ParseRoute::Fallback},
        {"maybe", Ex, Ex, ParseRoute::Fallback},
        {"yes", In, In, ParseRoute::Fallback},
        {"incl", Ex, Ex, ParseRoute::Fallback},
        {"   \n\t", Ex, Ex, ParseRoute::Fallback},
        {"one", In, In, ParseRoute::Fallback},
    };
}

} // namespace fixtures
