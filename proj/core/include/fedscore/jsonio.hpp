#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace fedscore {

// Insertion-ordered JSON keeps every serialized artifact byte-stable.
using Json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

// Shortest round-trip decimal form; integral values print without a fraction.
std::string format_number(double value);

}  // namespace fedscore
