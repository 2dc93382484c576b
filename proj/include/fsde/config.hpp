#pragma once

// Strict configuration files: INI/TOML-style sections with typed values.
// Unknown sections or keys are errors, as are duplicate keys and malformed
// values.  See README for the full schema.
//
// Dynamics are assembled from three partial descriptions that may coexist:
//   [model]   point drift Z (linear family), segment drift b (delay families),
//             and the noise matrix;
//   [measure] an explicit signed matrix measure, integrated into the drift.
// All *linear* drift pieces (linear Z, discrete-delay b, [measure]) are also
// folded into a single spectral measure so that characteristic-root analysis
// sees the full linearization; a tanh nonlinearity stays out of it.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsde/model.hpp"

namespace fsde::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Value {
  enum class Kind { number, boolean, string, number_list, string_list } kind;
  double num = 0.0;
  bool flag = false;
  std::string str;
  std::vector<double> nums;
  std::vector<std::string> strs;
  int line = 0;
  mutable bool used = false;
};

// parsed section/key store with typed, strict accessors
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& name = "<string>");

  bool has_section(const std::string& section) const;
  // throws when a section outside the allowed list appears
  void require_sections(const std::vector<std::string>& allowed) const;

  bool has(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  double require_double(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  // accepts a bare number as a one-element list
  std::vector<double> get_numbers(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;

  // throws listing every key never touched by an accessor
  void reject_unused() const;

  const std::string& text() const { return text_; }
  const std::string& name() const { return name_; }

 private:
  const Value* find(const std::string& section, const std::string& key) const;
  const Value& require(const std::string& section, const std::string& key) const;

  std::string name_, text_;
  std::map<std::string, std::map<std::string, Value>> sections_;
};

enum class Budget { smoke, standard, deep };

// replica-count multiplier: smoke 0.1x, standard 1x, deep 10x
double budget_scale(Budget b);
Budget parse_budget(const std::string& s);  // "smoke" | "default" | "deep"

struct SimSettings {
  double h = 0.0;        // default r0/256
  double horizon = 10.0;
  int n = 10000;
  std::uint64_t seed = 42;
  Eigen::VectorXd xi;    // constant initial segment
  Eigen::VectorXd eta;   // second initial point for pair checks
};

struct VerifySettings {
  std::vector<std::string> checks;  // empty -> all
  double coupling_t = 1.0;
  double p = 2.0;
  double delta = 0.0;    // 0 -> minimized over delta
  double burn_in = 0.0;  // 0 -> 10 max(1, r0)
  double spacing = 0.0;  // 0 -> max(r0, 2)
};

struct OutputSettings {
  std::string dir = "out";
  bool csv = true;
};

struct RunConfig {
  std::string source;
  std::uint64_t hash = 0;  // FNV-1a of the raw file text

  FsdeModel model;         // full dynamics (Z kept as a point drift)
  std::optional<SignedMatrixMeasure> spectral_measure;  // linearized drift
  bool drift_fully_linear = false;  // spectral measure == full drift
  double k2_nonlinear = 0.0;        // Lipschitz constant of the part left out
                                    // of the spectral measure (tanh family)

  SimSettings sim;
  VerifySettings verify;
  OutputSettings output;
};

RunConfig load(const std::string& path);
RunConfig load_string(const std::string& text, const std::string& name = "<string>");

std::uint64_t fnv1a(const std::string& s);

}  // namespace fsde::config
