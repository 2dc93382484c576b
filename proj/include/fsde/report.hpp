#pragma once

// JSON run reports and CSV curve emission.  Reports are deterministic for a
// fixed (config, seed, budget): keys serialize in sorted order and the only
// volatile field, "timestamp", is excluded from hashing/comparison.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fsde::report {

using json = nlohmann::json;

std::string timestamp_utc();

class Report {
 public:
  Report(const std::string& command, const std::string& config_source,
         std::uint64_t config_hash, std::uint64_t seed, const std::string& budget);

  void add(const std::string& name, json block);
  void set_pass(bool pass) { doc_["pass"] = pass; }
  bool pass() const { return doc_.value("pass", false); }

  json& doc() { return doc_; }
  const json& doc() const { return doc_; }

  std::string to_string() const { return doc_.dump(2) + "\n"; }
  void write(const std::string& path) const;

  // report text with the timestamp field removed: the determinism contract
  // compares these byte for byte
  static std::string stable_text(const std::string& report_text);

 private:
  json doc_;
};

// CSV with one row per entry of rows; all values at full precision
void write_curve_csv(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

// create directory (and parents) if absent; throws on failure
void ensure_dir(const std::string& dir);

}  // namespace fsde::report
