#pragma once

#include <map>
#include <optional>
#include <string>

#include "langcert/certificate.hpp"
#include "langcert/dynamics.hpp"
#include "langcert/potential.hpp"

namespace langcert {

// Flat sectioned key=value config file ('#' and ';' comments). Sections:
// [potential], [model], [sim], [certificate], [tasks]. See README for the
// full schema.
class RunConfig {
 public:
  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text);

  PotentialModel make_potential() const;
  ModelParams model_params() const;
  SimConfig sim_config() const;

  // certificate section
  std::string certificate_route() const;        // "general" | "villani"
  bool rho_k_is_estimate() const;               // rho_K = estimate
  double rho_k() const;                         // when supplied as a number
  std::optional<double> villani_m() const;      // direct M
  std::optional<double> villani_kappa0() const;
  std::optional<double> villani_kappa0_prime() const;
  double villani_rho() const;

  // tasks section
  int task_samples(int fallback) const;
  int task_grid_points(int fallback) const;

  // inverse of make_potential: the [potential] section for this model
  static std::string potential_config_table(const PotentialModel& model);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long get_int_or(const std::string& section, const std::string& key, long fallback) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace langcert
