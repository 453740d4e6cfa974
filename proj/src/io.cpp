#include "rewardaudit/io.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rewardaudit/errors.hpp"

namespace rewardaudit::io {

namespace {

std::string hex_encode(const unsigned char* bytes, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0xf]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  return hex_encode(digest, len);
}

std::string file_sha256_hex(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::unreadable_record, "cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::unwritable_output, "cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(errc::unwritable_output, "short write to " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(errc::unreadable_record, "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& on_record,
                    const std::function<void(std::size_t, const std::string&, const std::string&)>& on_bad_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::unreadable_record, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      if (on_bad_line) on_bad_line(lineno, line, "invalid JSON");
      continue;
    }
    on_record(lineno, parsed);
  }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::unwritable_output, "cannot open " + path_.string() + " for writing");
}

void JsonlWriter::write(const json& record) {
  buffer_ += record.dump();
  buffer_ += '\n';
  if (buffer_.size() > 1 << 20) flush();
}

void JsonlWriter::flush() {
  if (buffer_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) fail(errc::unwritable_output, "cannot append to " + path_.string());
  out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  buffer_.clear();
}

std::string csv_escape(std::string_view field, char delimiter) {
  bool needs_quotes = field.find_first_of("\"\r\n") != std::string_view::npos ||
                      field.find(delimiter) != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += delimiter;
    out += csv_escape(fields[i], delimiter);
  }
  out += '\n';
  return out;
}

std::vector<std::vector<std::string>> read_delimited(const std::filesystem::path& path, char delimiter) {
  std::string data = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !field_was_quoted) {
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      // CRLF line endings leave a trailing CR on unquoted fields only; a CR
      // inside a quoted field is data
      if (!field_was_quoted && !field.empty() && field.back() == '\r') field.pop_back();
      end_row();
    } else {
      field += c;
    }
  }
  if (!field.empty() || !row.empty() || field_was_quoted) end_row();
  return rows;
}

std::string interpolate_env(std::string_view value) {
  std::string out;
  std::size_t i = 0;
  while (i < value.size()) {
    if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
      std::size_t close = value.find('}', i + 2);
      if (close != std::string_view::npos) {
        std::string name(value.substr(i + 2, close - i - 2));
        const char* env = std::getenv(name.c_str());
        if (env) out += env;
        i = close + 1;
        continue;
      }
    }
    out += value[i];
    ++i;
  }
  return out;
}

}  // namespace rewardaudit::io
