#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace decomp {

std::string read_text_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory plus rename, so readers
// never observe a half-written file.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// Collapses whitespace runs to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);

std::string sha256_hex(std::string_view data);

uint64_t fnv1a64(std::string_view data);

}  // namespace decomp
