#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "langcert/certificate.hpp"
#include "langcert/dynamics.hpp"
#include "langcert/gamma.hpp"
#include "langcert/lyapunov.hpp"

namespace langcert {

struct MonteCarloEstimate {
  double value = 0;
  double se = 0;
  std::size_t n = 0;
};

// MC estimate of the squared weighted H^1 norm
//   mean over mu-samples of f^2 W + zeta^{-2} (|Yf|^2 + |Zf|^2).
MonteCarloEstimate weighted_h1_norm_sq(const GammaEngine& engine, const ScalarField& f,
                                       double zeta_sq,
                                       const std::function<double(const PhasePoint&)>& weight,
                                       std::span<const PhasePoint> samples);

struct RateEstimate {
  std::string observable;
  double r_hat = 0;   // fitted decay rate (1/time)
  double t_lo = 0, t_hi = 0;
  double se = 0;
  double r_squared = 0;
};

struct WindowPolicy {
  double t_min = 0;     // skip transients before this time
  double snr = 5.0;     // keep lags while C(t) > snr * stderr
};

// Weighted least squares on log C(t) over the largest admissible window.
// Throws statistics_error when no usable window exists.
RateEstimate estimate_decay_rate(std::span<const AutocorrPoint> table, const WindowPolicy& policy,
                                 const std::string& observable = "");

struct RateVerdict {
  bool pass = false;
  double margin = 0;    // r_hat - sigma/2
  double sigma = 0;
  double threshold = 0; // sigma/2
};

// The certificate asserts squared-norm decay at rate sigma with weight
// W >= 1, so the autocovariance amplitude must decay at rate >= sigma/2.
// PASS iff r_hat + 3 se >= sigma/2.
RateVerdict compare_certificate(double sigma, const RateEstimate& rate);

enum class CheckVerdict { kPass, kFail, kInconclusive };

struct TailCheck {
  MonteCarloEstimate estimate;
  double bound = 0;
  CheckVerdict verdict = CheckVerdict::kInconclusive;
};

struct MuTailReport {
  TailCheck grad_sq;        // int |grad U|^2 dmu2 <= kappa2 T sqrt(d)/(1 - 1/(16 sqrt(d)))
  TailCheck position_tail;  // mu2(U >= R2) <= 1/(2(10 e^4 + 1))
  TailCheck k_complement;   // mu(K^c) <= 1/(10 e^4 + 1)
  bool sampler_converged = false;
  bool pass = false;
};

// Monte Carlo checks of the stationary-measure inequalities behind the
// certificate. Pass rule per check: estimate - 3 se <= bound. A
// non-converged sampler makes every verdict inconclusive.
MuTailReport mu_tail_checks(const PotentialModel& model, const ModelParams& mp,
                            const Certificate& cert,
                            std::span<const std::vector<double>> position_samples,
                            std::span<const PhasePoint> phase_samples, bool sampler_converged);

nlohmann::json to_json(const MuTailReport& rep);
nlohmann::json to_json(const RateEstimate& rate, const RateVerdict& verdict);
nlohmann::json to_json(const DriftReport& rep);
nlohmann::json to_json(const WeightHypothesesReport& rep);
nlohmann::json to_json(const HessianBoundReport& rep);
nlohmann::json to_json(const GradientGrowthReport& rep);
nlohmann::json to_json(const AppendixBoundReport& rep);

// CSV writers (schemas documented in the README)
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_autocorrelation_csv(const std::string& path, std::span<const AutocorrPoint> table);
std::vector<AutocorrPoint> read_autocorrelation_csv(const std::string& path);

}  // namespace langcert
