#include "apla/report.hpp"

#include <cstdio>
#include <fstream>

#include "apla/errors.hpp"

namespace apla {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  add_row(header);
}

void CsvWriter::add_row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_)
    throw ConfigError("csv-columns", "row width does not match the header");
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += csv_escape(fields[i]);
  }
  out_ += "\r\n";
}

std::string CsvWriter::str() const { return out_; }

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("write-failed", "cannot open " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ConfigError("write-failed", "short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigError("write-failed", "rename to " + path + " failed");
}

Json to_json(const StabilityRecord& rec) {
  Json j;
  j["n"] = rec.n;
  j["p"] = rec.p;
  j["family"] = rec.family;
  j["perturbation"] = rec.perturbation;
  j["eps"] = rec.eps;
  j["deficit"] = rec.deficit;
  j["dist"] = rec.dist;
  j["proof_dist"] = rec.proof_dist;
  j["kappa0"] = rec.kappa0;
  j["energy"] = rec.energy;
  j["window_ok"] = rec.window_ok;
  j["skipped"] = rec.skipped;
  if (rec.skipped) j["skip_reason"] = rec.skip_reason;
  j["lambda_fit"] = rec.lambda_fit;
  j["lambda_proof"] = rec.lambda_proof;
  return j;
}

Json to_json(const DeficitReport& rep) {
  Json j;
  j["kappa0"] = rep.kappa0;
  j["kappa0_secondary"] = rep.kappa0_secondary;
  j["deficit"] = rep.deficit;
  j["grad_energy"] = rep.grad_energy;
  j["mass"] = rep.mass;
  j["sp_n"] = rep.sp_n;
  j["energy_window_ok"] = rep.energy_window_ok;
  return j;
}

std::vector<std::string> stability_csv_header() {
  return {"n",     "p",    "family",     "perturbation", "eps",       "deficit",
          "dist",  "proof_dist", "kappa0", "energy", "window_ok"};
}

std::vector<std::string> csv_row(const StabilityRecord& rec) {
  return {std::to_string(rec.n),
          format_double(rec.p),
          rec.family,
          rec.perturbation,
          format_double(rec.eps),
          format_double(rec.deficit),
          format_double(rec.dist),
          format_double(rec.proof_dist),
          format_double(rec.kappa0),
          format_double(rec.energy),
          rec.window_ok ? "1" : "0"};
}

}  // namespace apla
