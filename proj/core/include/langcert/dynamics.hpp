#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "langcert/certificate.hpp"
#include "langcert/potential.hpp"
#include "langcert/rng.hpp"

namespace langcert {

enum class Scheme { kBaoab, kEulerMaruyama };

struct SimConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  int ensemble_size = 1;
  std::uint64_t seed = 0;
  int record_stride = 1;     // record every n-th step
  Scheme scheme = Scheme::kBaoab;

  // a step whose force magnitude exceeds this is recursively halved
  double substep_force_threshold = 1e8;
  int max_halving_depth = 40;
  // trajectory flagged invalid if H exceeds this
  double energy_cap = 1e14;

  // invariant-measure sampler knobs
  int burn_in = 2000;
  int thinning = 10;
  double proposal_scale = 0;  // 0 -> sqrt(T)/2 default

  void validate() const;
};

enum class ExitReason { kNone, kEnergyCap, kDomainExit };

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> points;
  bool valid = true;
  ExitReason exit_reason = ExitReason::kNone;
};

// One integration step of the second-order dynamics
//   dx = v dt,  dv = -gamma v dt - grad U dt + sqrt(2 gamma T) dB.
// BAOAB: half kick, half drift, exact Ornstein-Uhlenbeck velocity update
// (factor e^{-gamma dt}, noise variance T(1 - e^{-2 gamma dt})), half drift,
// half kick. Returns nullopt when recursive halving bottoms out without
// finding an admissible substep (domain exit).
std::optional<PhasePoint> step(const PotentialModel& model, const ModelParams& mp,
                               const SimConfig& cfg, const PhasePoint& p, CounterRng& rng);

// Deterministic given (seed, p0, cfg); records every cfg.record_stride steps.
Trajectory simulate_trajectory(const PotentialModel& model, const ModelParams& mp,
                               const SimConfig& cfg, const PhasePoint& p0,
                               std::uint64_t stream = 0);

struct SamplerDiagnostics {
  double acceptance_rate = 0;
  double split_mean_gap_in_se = 0;  // |mean(U) first half - second half| / SE
  bool converged = false;
};

// Draws n phase points from the invariant measure: velocities i.i.d.
// Gaussian with covariance T Id, positions from a random-walk Metropolis
// chain targeting e^{-U/T} on the domain (out-of-domain proposals rejected).
std::vector<PhasePoint> sample_invariant(const PotentialModel& model, const ModelParams& mp,
                                         const SimConfig& cfg, int n,
                                         SamplerDiagnostics* diag = nullptr);

// Positions only (the marginal e^{-U/T}); same chain as sample_invariant.
std::vector<std::vector<double>> sample_position_marginal(const PotentialModel& model,
                                                          const ModelParams& mp,
                                                          const SimConfig& cfg, int n,
                                                          SamplerDiagnostics* diag = nullptr);

// Euler-Maruyama step / trajectory of the position-space system
//   dX = -grad U dt + sqrt(2T) dW,
// with the same force-threshold substepping policy.
std::optional<std::vector<double>> gradient_system_step(const PotentialModel& model, double T,
                                                        const SimConfig& cfg,
                                                        const std::vector<double>& x,
                                                        CounterRng& rng);
struct PositionTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> points;
  bool valid = true;
  ExitReason exit_reason = ExitReason::kNone;
};
PositionTrajectory simulate_gradient_system(const PotentialModel& model, double T,
                                            const SimConfig& cfg, const std::vector<double>& x0,
                                            std::uint64_t stream = 0);

// Values of an observable recorded along a stationary-start ensemble.
// values[m * times.size() + t] belongs to member m at recorded time t.
struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> values;
  int members = 0;
  std::size_t dropped = 0;  // invalidated trajectories, excluded from values
};

ObservableSeries record_observable_ensemble(const PotentialModel& model, const ModelParams& mp,
                                            const SimConfig& cfg,
                                            const std::function<double(const PhasePoint&)>& f,
                                            const std::vector<PhasePoint>& initial);

struct AutocorrPoint {
  double t = 0;
  double value = 0;
  double se = 0;
};

// Stationary autocovariance of the centered observable at every recorded
// lag, one estimate per ensemble member pairing time 0 with time t; standard
// errors across members. Throws statistics_error below 8 members.
std::vector<AutocorrPoint> autocovariance(const ObservableSeries& series);

// Batch-mean variant for a single long stationary series: lag estimates from
// n_batches contiguous batches. Throws statistics_error if data is too short.
std::vector<AutocorrPoint> autocovariance_single(const std::vector<double>& times,
                                                 const std::vector<double>& values,
                                                 std::size_t max_lag, int n_batches = 16);

// A starting configuration inside the domain: particles spread on a cubic
// lattice with unit spacing (ordered along the line when k = 1), velocities
// zero.
PhasePoint domain_anchor(const PotentialModel& model);

}  // namespace langcert
