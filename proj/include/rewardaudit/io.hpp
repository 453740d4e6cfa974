#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rewardaudit::io {

using json = nlohmann::json;

std::string sha256_hex(std::string_view bytes);
std::string file_sha256_hex(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Data files: one entry per line, '#' comments and blank lines skipped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Line-delimited JSON. `on_record` gets (line_number, parsed); malformed lines
// go to `on_bad_line` (line_number, raw, what) and never abort the scan.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& on_record,
                    const std::function<void(std::size_t, const std::string&, const std::string&)>& on_bad_line);

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const json& record);
  void flush();

 private:
  std::filesystem::path path_;
  std::string buffer_;
};

// Minimal RFC-4180 CSV. `delimiter` defaults to comma; fields containing the
// delimiter, quotes or newlines are quoted on write and unquoted on read.
std::string csv_escape(std::string_view field, char delimiter = ',');
std::string csv_row(const std::vector<std::string>& fields, char delimiter = ',');
std::vector<std::vector<std::string>> read_delimited(const std::filesystem::path& path, char delimiter = ',');

// Expands ${VAR} references from the process environment; unset variables
// expand to the empty string.
std::string interpolate_env(std::string_view value);

}  // namespace rewardaudit::io
