#pragma once

#include <span>
#include <vector>

#include "langcert/certificate.hpp"
#include "langcert/potential.hpp"
#include "langcert/rng.hpp"

namespace langcert {

// The weight chain h -> psi -> V -> W built on top of a certificate:
//   h   smooth 0/1 transition between energy levels R1 and R2,
//   psi = -delta b h(U) (v.grad U)/|grad U|^2 with delta = (3/2) gamma T d,
//   V   = exp(b H + psi) with b = 1/R2,
//   W   = e V + lambda.
class LyapunovWeight {
 public:
  LyapunovWeight(PotentialModel model, const Certificate& cert);

  double h(double q) const;
  double h_prime(double q) const;
  double psi(const PhasePoint& p) const;

  double log_v(const PhasePoint& p) const;  // b H + psi
  double v(const PhasePoint& p) const;      // exp; +inf on overflow
  double w(const PhasePoint& p) const;      // e V + lambda

  // L*V / V assembled from analytic potential derivatives (gradient and two
  // Hessian-vector products); overflow-safe since V never materializes.
  double adjoint_ratio(const PhasePoint& p) const;

  bool indicator_k(const PhasePoint& p) const;

  double r1() const { return cert_.r1; }
  double r2() const { return cert_.r2; }
  double b() const { return b_; }
  double delta() const { return delta_; }
  double lambda() const { return cert_.lambda; }
  const Certificate& certificate() const { return cert_; }
  const PotentialModel& model() const { return model_; }

 private:
  PotentialModel model_;
  Certificate cert_;
  double b_;
  double delta_;
};

struct DriftReport {
  std::size_t n_points = 0;
  std::size_t violations = 0;        // beyond tolerance 1e-8 (1 + |alpha V|)
  double min_margin = 1e300;         // min of RHS - LHS in ratio form
  PhasePoint argmin;
  std::size_t off_k_points = 0;
  std::size_t off_k_violations = 0;  // of the stronger ratio bound L*V/V <= -alpha
  double min_off_k_margin = 1e300;
  bool pass = false;
};

// Verifies L*V <= -alpha V + beta_exact 1_K pointwise (in ratio form), and
// off K the stronger L*V/V <= -alpha.
DriftReport drift_check(const LyapunovWeight& weight, std::span<const PhasePoint> points);

struct WeightHypothesesReport {
  std::size_t n_pairs = 0;
  double min_domination_slack = 1e300;  // min of W|y|^2 - (beta rho'+1)(R/(gamma T)+|y|^2/(2T))
  double min_log_v = 1e300;             // global V >= e^{-1} check
  double tail_ratio = 0;                // (2 beta/alpha) mu(K^c)/mu(K)
  bool domination_pass = false;
  bool tail_pass = false;
  bool pass = false;
};

// Checks the two hypotheses the certified rate rests on: the W-domination
// of the residual form R at sampled (point, unit direction) pairs, and the
// lower bound on V against the measured mass outside the center set K.
WeightHypothesesReport check_weight_hypotheses(const LyapunovWeight& weight,
                                               std::span<const PhasePoint> samples,
                                               int dirs_per_point, std::uint64_t dir_seed,
                                               double mu_k_estimate, double mu_kc_estimate);

// Stress points for drift verification: rescaled copies of base samples far
// into the velocity/position tails, and (for the singular family) pair
// separations shrunk toward coincidence down to `min_sep_fraction` of the
// typical sampled separation.
std::vector<PhasePoint> stress_points(const PotentialModel& model, const ModelParams& mp,
                                      std::span<const PhasePoint> base, std::size_t target_count,
                                      double min_sep_fraction = 0.05);

}  // namespace langcert
