#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ocean::util {

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// number of Unicode code points in a UTF-8 string
std::size_t utf8_length(std::string_view s);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

inline double round_half_away(double v) {
    return v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
}

inline int clamp_choice(double v) {
    double r = round_half_away(v);
    if (r < 1) return 1;
    if (r > 5) return 5;
    return static_cast<int>(r);
}

// fixed-point decimal rendering, locale-independent
std::string format_fixed(double v, int decimals);

}  // namespace ocean::util
