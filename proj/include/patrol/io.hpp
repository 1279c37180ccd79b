#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace patrol {

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

std::uint64_t fnv1a(std::string_view data);

}  // namespace patrol
