#pragma once

// Plain-text outputs: CSV with a header row and LF line endings, JSON with
// sorted keys. Numbers use the shortest decimal form that reads back exactly.

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mfadv {

std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& add_row(std::vector<std::string> cells);
  CsvTable& add_numbers(const std::vector<double>& values);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& content);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace mfadv
