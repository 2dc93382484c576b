#include "fsde/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fsde/certify.hpp"

namespace fsde::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& name, int line, const std::string& msg) {
  std::ostringstream os;
  os << name << ":" << line << ": " << msg;
  throw ConfigError(os.str());
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

double parse_number(const std::string& s, const std::string& name, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    fail(name, line, "malformed number '" + s + "'");
  if (!std::isfinite(v)) fail(name, line, "non-finite number '" + s + "'");
  return v;
}

Value parse_value(const std::string& raw, const std::string& name, int line) {
  Value v;
  v.line = line;
  if (raw.empty()) fail(name, line, "empty value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') fail(name, line, "unterminated string");
    v.kind = Value::Kind::string;
    v.str = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(name, line, "unterminated list");
    const std::string body = trim(raw.substr(1, raw.size() - 2));
    std::vector<std::string> items;
    std::string cur;
    bool in_quote = false;
    for (char c : body) {
      if (c == '"') in_quote = !in_quote;
      if (c == ',' && !in_quote) {
        items.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty()) items.push_back(trim(cur));
    if (in_quote) fail(name, line, "unterminated string in list");
    const bool strings = !items.empty() && items.front().front() == '"';
    v.kind = strings ? Value::Kind::string_list : Value::Kind::number_list;
    for (const auto& it : items) {
      if (it.empty()) fail(name, line, "empty list item");
      if ((it.front() == '"') != strings) fail(name, line, "mixed list types");
      if (strings) {
        if (it.size() < 2 || it.back() != '"') fail(name, line, "unterminated string");
        v.strs.push_back(it.substr(1, it.size() - 2));
      } else {
        v.nums.push_back(parse_number(it, name, line));
      }
    }
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = Value::Kind::boolean;
    v.flag = raw == "true";
    return v;
  }
  v.kind = Value::Kind::number;
  v.num = parse_number(raw, name, line);
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& name) {
  ConfigFile cf;
  cf.name_ = name;
  cf.text_ = text;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside quotes
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quote = !in_quote;
      if (line[i] == '#' && !in_quote) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(name, lineno, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) fail(name, lineno, "malformed section name");
      if (cf.sections_.count(section)) fail(name, lineno, "duplicate section [" + section + "]");
      cf.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(name, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) fail(name, lineno, "malformed key '" + key + "'");
    if (section.empty()) fail(name, lineno, "key outside any [section]");
    auto& sec = cf.sections_[section];
    if (sec.count(key)) fail(name, lineno, "duplicate key '" + key + "'");
    sec.emplace(key, parse_value(trim(line.substr(eq + 1)), name, lineno));
  }
  return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

void ConfigFile::require_sections(const std::vector<std::string>& allowed) const {
  for (const auto& [sec, keys] : sections_) {
    (void)keys;
    if (std::find(allowed.begin(), allowed.end(), sec) == allowed.end())
      throw ConfigError(name_ + ": unknown section [" + sec + "]");
  }
}

const Value* ConfigFile::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  k->second.used = true;
  return &k->second;
}

const Value& ConfigFile::require(const std::string& section, const std::string& key) const {
  const Value* v = find(section, key);
  if (!v) throw ConfigError(name_ + ": missing required key " + section + "." + key);
  return *v;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::number)
    fail(name_, v->line, section + "." + key + " must be a number");
  return v->num;
}

double ConfigFile::require_double(const std::string& section, const std::string& key) const {
  const Value& v = require(section, key);
  if (v.kind != Value::Kind::number)
    fail(name_, v.line, section + "." + key + " must be a number");
  return v.num;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key,
                              long long fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::number)
    fail(name_, v->line, section + "." + key + " must be a number");
  const auto n = static_cast<long long>(v->num);
  if (static_cast<double>(n) != v->num)
    fail(name_, v->line, section + "." + key + " must be an integer");
  return n;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::boolean)
    fail(name_, v->line, section + "." + key + " must be true/false");
  return v->flag;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::string)
    fail(name_, v->line, section + "." + key + " must be a quoted string");
  return v->str;
}

std::vector<double> ConfigFile::get_numbers(const std::string& section,
                                            const std::string& key) const {
  const Value& v = require(section, key);
  if (v.kind == Value::Kind::number) return {v.num};
  if (v.kind != Value::Kind::number_list)
    fail(name_, v.line, section + "." + key + " must be a number list");
  return v.nums;
}

std::vector<std::string> ConfigFile::get_strings(const std::string& section,
                                                 const std::string& key) const {
  const Value& v = require(section, key);
  if (v.kind == Value::Kind::string) return {v.str};
  if (v.kind != Value::Kind::string_list)
    fail(name_, v.line, section + "." + key + " must be a string list");
  return v.strs;
}

void ConfigFile::reject_unused() const {
  std::vector<std::string> stray;
  for (const auto& [sec, keys] : sections_)
    for (const auto& [key, val] : keys)
      if (!val.used) stray.push_back(sec + "." + key);
  if (!stray.empty()) {
    std::string msg = name_ + ": unknown key(s):";
    for (const auto& s : stray) msg += " " + s;
    throw ConfigError(msg);
  }
}

double budget_scale(Budget b) {
  switch (b) {
    case Budget::smoke: return 0.1;
    case Budget::deep: return 10.0;
    default: return 1.0;
  }
}

Budget parse_budget(const std::string& s) {
  if (s == "smoke") return Budget::smoke;
  if (s == "default") return Budget::standard;
  if (s == "deep") return Budget::deep;
  throw ConfigError("unknown budget '" + s + "' (expected smoke|default|deep)");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

Eigen::MatrixXd matrix_from(const std::vector<double>& nums, int rows, int cols,
                            const std::string& what) {
  if (static_cast<int>(nums.size()) != rows * cols)
    throw ConfigError(what + ": expected " + std::to_string(rows * cols) +
                      " row-major entries, got " + std::to_string(nums.size()));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = nums[static_cast<std::size_t>(i) * cols + j];
  return m;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

RunConfig build(const ConfigFile& cf, const std::string& source) {
  cf.require_sections({"model", "measure", "certificates", "sim", "verify", "output"});
  RunConfig rc;
  rc.source = source;
  rc.hash = fnv1a(cf.text());

  const int d = static_cast<int>(cf.get_int("model", "d", 1));
  if (d < 1) throw ConfigError("model.d must be >= 1");
  const double r0 = cf.get_double("model", "r0", 1.0);
  if (!(r0 > 0.0)) throw ConfigError("model.r0 must be > 0");
  rc.model.d = d;
  rc.model.r0 = r0;
  rc.model.sigma = matrix_from(cf.get_numbers("model", "sigma"), d, d, "model.sigma");

  // point drift
  Eigen::MatrixXd z_mat;
  const std::string z_family = cf.get_string("model", "z_family", "none");
  if (z_family == "linear") {
    z_mat = matrix_from(cf.get_numbers("model", "z_matrix"), d, d, "model.z_matrix");
    rc.model.z = linear_drift(z_mat);
  } else if (z_family != "none") {
    throw ConfigError("model.z_family must be \"none\" or \"linear\"");
  }

  // segment drift pieces
  std::vector<SegmentDrift> parts;
  double k2_auto = 0.0;
  bool nonlinear = false;
  Eigen::MatrixXd b_mat;
  const std::string b_family = cf.get_string("model", "b_family", "none");
  if (b_family == "discrete_delay") {
    b_mat = matrix_from(cf.get_numbers("model", "b_matrix"), d, d, "model.b_matrix");
    parts.push_back(discrete_delay_drift(b_mat, r0));
    k2_auto += spectral_norm(b_mat);
  } else if (b_family == "tanh") {
    const double c = cf.require_double("model", "b_coeff");
    parts.push_back(tanh_delay_drift(c, r0));
    k2_auto += std::fabs(c);
    rc.k2_nonlinear = std::fabs(c);
    nonlinear = true;
  } else if (b_family != "none") {
    throw ConfigError("model.b_family must be \"none\", \"discrete_delay\" or \"tanh\"");
  }

  std::optional<SignedMatrixMeasure> meas;
  if (cf.has_section("measure")) {
    meas.emplace(d, r0);
    bool any = false;
    for (int a = 1;; ++a) {
      const std::string stem = "atom" + std::to_string(a);
      if (!cf.has("measure", stem + "_theta")) break;
      const double theta = cf.require_double("measure", stem + "_theta");
      meas->add_atom(theta,
                     matrix_from(cf.get_numbers("measure", stem + "_matrix"), d, d,
                                 "measure." + stem + "_matrix"));
      any = true;
    }
    if (cf.has("measure", "density")) {
      const auto nums = cf.get_numbers("measure", "density");
      if (nums.empty() || nums.size() % (static_cast<std::size_t>(d) * d) != 0)
        throw ConfigError("measure.density length must be a positive multiple of d*d");
      const int cells = static_cast<int>(nums.size() / (static_cast<std::size_t>(d) * d));
      std::vector<Eigen::MatrixXd> rho(cells);
      for (int c = 0; c < cells; ++c)
        rho[c] = matrix_from(
            std::vector<double>(nums.begin() + static_cast<std::ptrdiff_t>(c) * d * d,
                                nums.begin() + static_cast<std::ptrdiff_t>(c + 1) * d * d),
            d, d, "measure.density");
      meas->set_density(std::move(rho));
      any = true;
    }
    if (!any) throw ConfigError("[measure] section present but empty");
    const SignedMatrixMeasure mcopy = *meas;
    parts.push_back([mcopy](const Segment& s) { return mcopy.apply(s); });
    k2_auto += meas->lipschitz_bound();
  }

  if (parts.size() == 1) {
    rc.model.b = parts.front();
  } else if (!parts.empty()) {
    rc.model.b = [parts](const Segment& s) {
      Eigen::VectorXd out = parts.front()(s);
      for (std::size_t i = 1; i < parts.size(); ++i) out += parts[i](s);
      return out;
    };
  }

  // linearized drift for characteristic-root analysis
  {
    SignedMatrixMeasure spec(d, r0);
    bool any = false;
    if (z_mat.size() > 0) {
      spec.add_atom(0.0, z_mat);
      any = true;
    }
    if (b_family == "discrete_delay") {
      spec.add_atom(-r0, b_mat);
      any = true;
    }
    if (meas) {
      for (const auto& atom : meas->atoms()) spec.add_atom(atom.theta, atom.a);
      if (meas->has_density()) spec.set_density(meas->density());
      any = true;
    }
    if (any) rc.spectral_measure = std::move(spec);
    rc.drift_fully_linear = any && !nonlinear;
  }

  // certificates: explicit keys win, families fill the rest
  const double k1 =
      cf.get_double("certificates", "k1", z_mat.size() > 0 ? linear_drift_k1(z_mat) : 0.0);
  const double k2 = cf.get_double("certificates", "k2", k2_auto);
  if (k2 < 0.0) throw ConfigError("certificates.k2 must be >= 0");
  rc.model.lipschitz = LipschitzCert{k1, k2};
  const bool has_l1 = cf.has("certificates", "lambda1");
  const bool has_l2 = cf.has("certificates", "lambda2");
  if (has_l1 != has_l2)
    throw ConfigError("certificates.lambda1 and lambda2 must be given together");
  if (has_l1) {
    rc.model.dissipativity = DissipativityCert{cf.require_double("certificates", "lambda1"),
                                               cf.require_double("certificates", "lambda2")};
  } else if (k1 > 0.0) {
    const auto c12 = certify::check_cor12(k1, k2, r0);
    if (c12.applicable)
      rc.model.dissipativity = DissipativityCert{c12.lambda1, c12.lambda2};
  }

  // simulation settings
  rc.sim.h = cf.get_double("sim", "h", r0 / 256.0);
  if (!(rc.sim.h > 0.0)) throw ConfigError("sim.h must be > 0");
  rc.sim.horizon = cf.get_double("sim", "horizon", 10.0);
  if (!(rc.sim.horizon > 0.0)) throw ConfigError("sim.horizon must be > 0");
  rc.sim.n = static_cast<int>(cf.get_int("sim", "n", 10000));
  if (rc.sim.n < 2) throw ConfigError("sim.n must be >= 2");
  rc.sim.seed = static_cast<std::uint64_t>(cf.get_int("sim", "seed", 42));
  rc.sim.xi = Eigen::VectorXd::Zero(d);
  if (cf.has("sim", "xi")) {
    const auto nums = cf.get_numbers("sim", "xi");
    if (static_cast<int>(nums.size()) != d) throw ConfigError("sim.xi must have d entries");
    rc.sim.xi = Eigen::Map<const Eigen::VectorXd>(nums.data(), d);
  }
  if (cf.has("sim", "eta")) {
    const auto nums = cf.get_numbers("sim", "eta");
    if (static_cast<int>(nums.size()) != d) throw ConfigError("sim.eta must have d entries");
    rc.sim.eta = Eigen::Map<const Eigen::VectorXd>(nums.data(), d);
  } else {
    rc.sim.eta = rc.sim.xi + Eigen::VectorXd::Ones(d);
  }

  // verification settings
  if (cf.has("verify", "checks")) rc.verify.checks = cf.get_strings("verify", "checks");
  rc.verify.coupling_t = cf.get_double("verify", "t", 1.0);
  if (!(rc.verify.coupling_t > 0.0)) throw ConfigError("verify.t must be > 0");
  rc.verify.p = cf.get_double("verify", "p", 2.0);
  if (!(rc.verify.p > 1.0)) throw ConfigError("verify.p must be > 1");
  rc.verify.delta = cf.get_double("verify", "delta", 0.0);
  if (rc.verify.delta < 0.0) throw ConfigError("verify.delta must be >= 0 (0 = minimized)");
  rc.verify.burn_in = cf.get_double("verify", "burn_in", 10.0 * std::max(1.0, r0));
  rc.verify.spacing = cf.get_double("verify", "spacing", std::max(r0, 2.0));

  // output settings
  rc.output.dir = cf.get_string("output", "dir", "out");
  rc.output.csv = cf.get_bool("output", "csv", true);

  cf.reject_unused();

  const auto report = validate_model(rc.model);
  if (!report.ok) {
    std::string msg = source + ": invalid model:";
    for (const auto& e : report.errors) msg += " " + e + ";";
    throw ConfigError(msg);
  }
  return rc;
}

}  // namespace

RunConfig load(const std::string& path) {
  try {
    return build(ConfigFile::parse_file(path), path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

RunConfig load_string(const std::string& text, const std::string& name) {
  try {
    return build(ConfigFile::parse_string(text, name), name);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

}  // namespace fsde::config
