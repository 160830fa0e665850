#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "apla/stability.hpp"

// CSV/JSON artifact writers. CSV is RFC-4180; JSON uses ordered keys so
// repeated runs serialize byte-identically. Files are written atomically
// (temp file in the target directory, then rename).

namespace apla {

using Json = nlohmann::ordered_json;

std::string csv_escape(const std::string& field);

/// fixed %.17g formatting so values round-trip and runs compare bytewise
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& fields);
  std::string str() const;

 private:
  std::string out_;
  size_t columns_;
};

void atomic_write(const std::string& path, const std::string& content);

Json to_json(const StabilityRecord& rec);
Json to_json(const DeficitReport& rep);
std::vector<std::string> csv_row(const StabilityRecord& rec);
std::vector<std::string> stability_csv_header();

}  // namespace apla
