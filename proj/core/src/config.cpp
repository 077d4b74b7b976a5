#include "langcert/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace langcert {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = val;
  }
  return cfg;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string RunConfig::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw std::invalid_argument("config: missing [" + section + "] " + key);
  return s->second.at(key);
}

std::string RunConfig::get_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: [" + section + "] " + key + " is not a number: " + v);
  }
}

double RunConfig::get_double_or(const std::string& section, const std::string& key,
                                double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long RunConfig::get_int_or(const std::string& section, const std::string& key,
                           long fallback) const {
  if (!has(section, key)) return fallback;
  return static_cast<long>(get_double(section, key));
}

PotentialModel RunConfig::make_potential() const {
  const std::string family = get("potential", "family");
  const int N = static_cast<int>(get_int_or("potential", "N", 1));
  const int k = static_cast<int>(get_int_or("potential", "k", 1));
  if (family == "single_well") return PotentialModel::single_well(N, k);
  if (family == "double_well") return PotentialModel::double_well(N, k);
  if (family == "singular_pair") {
    SingularPairParams p;
    p.n_particles = N;
    p.k_dim = k;
    p.well_amplitude = get_double("potential", "A");
    p.pair_amplitude = get_double("potential", "B");
    p.well_exponent = static_cast<int>(get_int_or("potential", "a", 2));
    p.pair_exponent = get_double("potential", "b");
    const std::string ord = get_or("potential", "ordered", k == 1 ? "true" : "false");
    p.ordered = (ord == "true" || ord == "1" || ord == "yes");
    return PotentialModel::singular_pair(p);
  }
  throw std::invalid_argument("config: unknown potential family: " + family);
}

std::string RunConfig::potential_config_table(const PotentialModel& model) {
  std::ostringstream out;
  out.precision(17);
  out << "[potential]\n";
  out << "family = " << model.family_name() << "\n";
  out << "N = " << model.n_particles() << "\n";
  out << "k = " << model.k_dim() << "\n";
  if (model.family() == PotentialFamily::kSingularPair) {
    const auto& p = model.pair_params();
    out << "A = " << p.well_amplitude << "\n";
    out << "B = " << p.pair_amplitude << "\n";
    out << "a = " << p.well_exponent << "\n";
    out << "b = " << p.pair_exponent << "\n";
    out << "ordered = " << (p.ordered ? "true" : "false") << "\n";
  }
  return out.str();
}

ModelParams RunConfig::model_params() const {
  ModelParams mp;
  mp.gamma = get_double("model", "gamma");
  mp.T = get_double("model", "T");
  mp.n_particles = static_cast<int>(get_int_or("potential", "N", 1));
  mp.k_dim = static_cast<int>(get_int_or("potential", "k", 1));
  mp.validate();
  return mp;
}

SimConfig RunConfig::sim_config() const {
  SimConfig sc;
  sc.dt = get_double_or("sim", "dt", sc.dt);
  sc.t_max = get_double_or("sim", "t_max", sc.t_max);
  sc.ensemble_size = static_cast<int>(get_int_or("sim", "ensemble", sc.ensemble_size));
  sc.seed = static_cast<std::uint64_t>(get_int_or("sim", "seed", 0));
  sc.record_stride = static_cast<int>(get_int_or("sim", "record_stride", sc.record_stride));
  sc.burn_in = static_cast<int>(get_int_or("sim", "burn_in", sc.burn_in));
  sc.thinning = static_cast<int>(get_int_or("sim", "thinning", sc.thinning));
  sc.proposal_scale = get_double_or("sim", "proposal_scale", 0.0);
  sc.substep_force_threshold =
      get_double_or("sim", "force_threshold", sc.substep_force_threshold);
  sc.energy_cap = get_double_or("sim", "energy_cap", sc.energy_cap);
  const std::string scheme = get_or("sim", "scheme", "baoab");
  if (scheme == "baoab") sc.scheme = Scheme::kBaoab;
  else if (scheme == "euler_maruyama") sc.scheme = Scheme::kEulerMaruyama;
  else throw std::invalid_argument("config: unknown scheme: " + scheme);
  sc.validate();
  return sc;
}

std::string RunConfig::certificate_route() const {
  return get_or("certificate", "route", "general");
}

bool RunConfig::rho_k_is_estimate() const {
  return get_or("certificate", "rho_K", "1.0") == "estimate";
}

double RunConfig::rho_k() const { return get_double("certificate", "rho_K"); }

std::optional<double> RunConfig::villani_m() const {
  if (!has("certificate", "M")) return std::nullopt;
  return get_double("certificate", "M");
}

std::optional<double> RunConfig::villani_kappa0() const {
  if (!has("certificate", "kappa0")) return std::nullopt;
  return get_double("certificate", "kappa0");
}

std::optional<double> RunConfig::villani_kappa0_prime() const {
  if (!has("certificate", "kappa0_prime")) return std::nullopt;
  return get_double("certificate", "kappa0_prime");
}

double RunConfig::villani_rho() const { return get_double("certificate", "rho"); }

int RunConfig::task_samples(int fallback) const {
  return static_cast<int>(get_int_or("tasks", "samples", fallback));
}

int RunConfig::task_grid_points(int fallback) const {
  return static_cast<int>(get_int_or("tasks", "grid_points", fallback));
}

}  // namespace langcert
