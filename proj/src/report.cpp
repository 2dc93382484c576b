#include "fsde/report.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fsde::report {

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Report::Report(const std::string& command, const std::string& config_source,
               std::uint64_t config_hash, std::uint64_t seed, const std::string& budget) {
  doc_["schema"] = 1;
  doc_["command"] = command;
  doc_["config"] = config_source;
  doc_["config_hash"] = config_hash;
  doc_["seed"] = seed;
  doc_["budget"] = budget;
  doc_["timestamp"] = timestamp_utc();
  doc_["results"] = json::object();
}

void Report::add(const std::string& name, json block) {
  doc_["results"][name] = std::move(block);
}

void Report::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open " + path);
  out << to_string();
}

std::string Report::stable_text(const std::string& report_text) {
  json j = json::parse(report_text);
  j.erase("timestamp");
  return j.dump(2) + "\n";
}

void write_curve_csv(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot open " + path);
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "," : "") << columns[c];
  out << "\n";
  out.precision(17);
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument("csv: row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

}  // namespace fsde::report
