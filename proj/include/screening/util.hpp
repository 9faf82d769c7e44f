#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace screening {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Number of Unicode code points in a UTF-8 string (continuation bytes skipped).
std::size_t utf8_length(std::string_view s);

/// Byte offset of the code point with the given index; s.size() when past the end.
std::size_t utf8_byte_offset(std::string_view s, std::size_t code_point_index);

// Portable randomness. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions and std::shuffle are not, so bounded
// draws and shuffles are implemented here to keep results identical across
// standard libraries.

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform integer in [0, bound) by rejection. bound must be > 0.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void fisher_yates_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

/// Round half away from zero to the given number of decimals.
double round_to(double value, int decimals);

/// round_to, then printed with exactly `decimals` digits; never "-0.00".
std::string format_fixed(double value, int decimals);

} // namespace screening
