#include "langcert/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "langcert/errors.hpp"
#include "langcert/parallel.hpp"
#include "langcert/vec.hpp"

namespace langcert {

void SimConfig::validate() const {
  if (dt <= 0) throw std::invalid_argument("sim config: dt must be positive");
  if (t_max < 0) throw std::invalid_argument("sim config: t_max must be >= 0");
  if (ensemble_size < 1) throw std::invalid_argument("sim config: ensemble_size must be >= 1");
  if (record_stride < 1) throw std::invalid_argument("sim config: record_stride must be >= 1");
  if (substep_force_threshold <= 0 || energy_cap <= 0)
    throw std::invalid_argument("sim config: thresholds must be positive");
}

namespace {

bool force_ok(const PotentialModel& model, const SimConfig& cfg, std::span<const double> x,
              std::vector<double>& force_out) {
  if (!model.in_domain(x)) return false;
  force_out = model.gradient(x);
  return norm(force_out) <= cfg.substep_force_threshold;
}

// One BAOAB step of size dt; recursion halves dt when the force blows up or
// a drift leaves the domain.
bool baoab_recursive(const PotentialModel& model, const ModelParams& mp, const SimConfig& cfg,
                     PhasePoint& p, CounterRng& rng, double dt, int depth) {
  if (depth > cfg.max_halving_depth) return false;
  std::vector<double> force;
  if (!force_ok(model, cfg, p.x, force)) {
    if (depth == cfg.max_halving_depth) return false;
    // the current point itself is too stiff for this dt; try two half steps
    return baoab_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1) &&
           baoab_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1);
  }
  PhasePoint q = p;
  const int d = p.dim();
  // B: half kick
  for (int i = 0; i < d; ++i) q.v[i] -= 0.5 * dt * force[i];
  // A: half drift
  for (int i = 0; i < d; ++i) q.x[i] += 0.5 * dt * q.v[i];
  if (!model.in_domain(q.x))
    return depth < cfg.max_halving_depth &&
           baoab_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1) &&
           baoab_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1);
  // O: exact Ornstein-Uhlenbeck velocity update
  const double damp = std::exp(-mp.gamma * dt);
  const double noise = std::sqrt(mp.T * (1.0 - damp * damp));
  for (int i = 0; i < d; ++i) q.v[i] = damp * q.v[i] + noise * rng.normal();
  // A: half drift
  for (int i = 0; i < d; ++i) q.x[i] += 0.5 * dt * q.v[i];
  std::vector<double> force2;
  if (!force_ok(model, cfg, q.x, force2))
    return depth < cfg.max_halving_depth &&
           baoab_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1) &&
           baoab_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1);
  // B: half kick
  for (int i = 0; i < d; ++i) q.v[i] -= 0.5 * dt * force2[i];
  p = std::move(q);
  return true;
}

bool em_recursive(const PotentialModel& model, const ModelParams& mp, const SimConfig& cfg,
                  PhasePoint& p, CounterRng& rng, double dt, int depth) {
  if (depth > cfg.max_halving_depth) return false;
  std::vector<double> force;
  if (!force_ok(model, cfg, p.x, force))
    return depth < cfg.max_halving_depth &&
           em_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1) &&
           em_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1);
  PhasePoint q = p;
  const int d = p.dim();
  const double amp = std::sqrt(2.0 * mp.gamma * mp.T * dt);
  for (int i = 0; i < d; ++i) {
    q.x[i] += dt * p.v[i];
    q.v[i] += dt * (-mp.gamma * p.v[i] - force[i]) + amp * rng.normal();
  }
  if (!model.in_domain(q.x))
    return depth < cfg.max_halving_depth &&
           em_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1) &&
           em_recursive(model, mp, cfg, p, rng, 0.5 * dt, depth + 1);
  p = std::move(q);
  return true;
}

}  // namespace

std::optional<PhasePoint> step(const PotentialModel& model, const ModelParams& mp,
                               const SimConfig& cfg, const PhasePoint& p, CounterRng& rng) {
  if (!model.point_valid(p)) throw std::invalid_argument("step: invalid phase point");
  PhasePoint q = p;
  const bool ok = cfg.scheme == Scheme::kBaoab
                      ? baoab_recursive(model, mp, cfg, q, rng, cfg.dt, 0)
                      : em_recursive(model, mp, cfg, q, rng, cfg.dt, 0);
  if (!ok) return std::nullopt;
  return q;
}

Trajectory simulate_trajectory(const PotentialModel& model, const ModelParams& mp,
                               const SimConfig& cfg, const PhasePoint& p0,
                               std::uint64_t stream) {
  cfg.validate();
  if (!model.point_valid(p0)) throw std::invalid_argument("simulate_trajectory: invalid start");
  if (model.hamiltonian(p0) > cfg.energy_cap)
    throw std::invalid_argument("simulate_trajectory: energy cap below the initial energy");
  CounterRng rng(cfg.seed, stream);
  Trajectory traj;
  const long n_steps = std::lround(cfg.t_max / cfg.dt);
  traj.times.reserve(n_steps / cfg.record_stride + 1);
  traj.points.reserve(n_steps / cfg.record_stride + 1);
  traj.times.push_back(0.0);
  traj.points.push_back(p0);
  PhasePoint p = p0;
  for (long s = 1; s <= n_steps; ++s) {
    auto next = step(model, mp, cfg, p, rng);
    if (!next) {
      traj.valid = false;
      traj.exit_reason = ExitReason::kDomainExit;
      break;
    }
    p = std::move(*next);
    if (model.hamiltonian(p) > cfg.energy_cap) {
      traj.valid = false;
      traj.exit_reason = ExitReason::kEnergyCap;
      break;
    }
    if (s % cfg.record_stride == 0) {
      traj.times.push_back(s * cfg.dt);
      traj.points.push_back(p);
    }
  }
  return traj;
}

PhasePoint domain_anchor(const PotentialModel& model) {
  const int N = model.n_particles(), k = model.k_dim(), d = model.dim();
  PhasePoint p;
  p.x.assign(d, 0.0);
  p.v.assign(d, 0.0);
  if (model.family() == PotentialFamily::kSingularPair) {
    if (k == 1) {
      for (int i = 0; i < N; ++i) p.x[i] = i - 0.5 * (N - 1);
    } else {
      // cubic lattice, unit spacing
      const int side = static_cast<int>(std::ceil(std::pow(double(N), 1.0 / k)));
      for (int i = 0; i < N; ++i) {
        int rem = i;
        for (int l = 0; l < k; ++l) {
          p.x[i * k + l] = rem % side;
          rem /= side;
        }
      }
    }
  }
  if (!model.in_domain(p.x)) throw numerics_error("domain_anchor: failed to build a valid start");
  return p;
}

namespace {

// One Metropolis sweep: single-site-ish global proposal x' = x + s*xi.
bool metropolis_move(const PotentialModel& model, double T, double scale, std::vector<double>& x,
                     double& u_current, CounterRng& rng) {
  const int d = model.dim();
  std::vector<double> prop(d);
  for (int i = 0; i < d; ++i) prop[i] = x[i] + scale * rng.normal();
  const double u_prop = model.value(prop);
  if (!std::isfinite(u_prop)) return false;  // proposals leaving the domain are rejected
  const double du = u_prop - u_current;
  if (du <= 0.0 || rng.uniform() < std::exp(-du / T)) {
    x = std::move(prop);
    u_current = u_prop;
    return true;
  }
  return false;
}

std::vector<std::vector<double>> run_position_chain(const PotentialModel& model,
                                                    const ModelParams& mp, const SimConfig& cfg,
                                                    int n, SamplerDiagnostics* diag) {
  cfg.validate();
  if (n < 1) throw std::invalid_argument("sampler: n must be >= 1");
  CounterRng rng(cfg.seed, 0x9e3779b97f4a7c15ull);  // dedicated sampler stream
  auto anchor = domain_anchor(model);
  std::vector<double> x = anchor.x;
  double u = model.value(x);
  if (!std::isfinite(u)) throw numerics_error("sampler: no valid initial position");
  const double scale = cfg.proposal_scale > 0 ? cfg.proposal_scale : 0.5 * std::sqrt(mp.T);
  std::size_t accepted = 0, proposed = 0;
  for (int s = 0; s < cfg.burn_in; ++s) {
    accepted += metropolis_move(model, mp.T, scale, x, u, rng);
    ++proposed;
  }
  std::vector<std::vector<double>> out;
  out.reserve(n);
  std::vector<double> u_trace;
  u_trace.reserve(n);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < cfg.thinning; ++t) {
      accepted += metropolis_move(model, mp.T, scale, x, u, rng);
      ++proposed;
    }
    out.push_back(x);
    u_trace.push_back(u);
  }
  if (diag) {
    diag->acceptance_rate = proposed ? double(accepted) / double(proposed) : 0.0;
    // split-mean stationarity check on U
    const std::size_t half = u_trace.size() / 2;
    double m1 = 0, m2 = 0, var = 0;
    for (std::size_t i = 0; i < half; ++i) m1 += u_trace[i];
    for (std::size_t i = half; i < u_trace.size(); ++i) m2 += u_trace[i];
    m1 /= std::max<std::size_t>(half, 1);
    m2 /= std::max<std::size_t>(u_trace.size() - half, 1);
    double mean = 0;
    for (double v : u_trace) mean += v;
    mean /= u_trace.size();
    for (double v : u_trace) var += (v - mean) * (v - mean);
    var /= std::max<std::size_t>(u_trace.size() - 1, 1);
    const double se = std::sqrt(var / std::max<std::size_t>(half, 1));
    diag->split_mean_gap_in_se = se > 0 ? std::abs(m1 - m2) / se : 0.0;
    diag->converged = diag->acceptance_rate > 0.05 && diag->acceptance_rate < 0.95 &&
                      diag->split_mean_gap_in_se < 5.0;
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> sample_position_marginal(const PotentialModel& model,
                                                          const ModelParams& mp,
                                                          const SimConfig& cfg, int n,
                                                          SamplerDiagnostics* diag) {
  return run_position_chain(model, mp, cfg, n, diag);
}

std::vector<PhasePoint> sample_invariant(const PotentialModel& model, const ModelParams& mp,
                                         const SimConfig& cfg, int n, SamplerDiagnostics* diag) {
  auto xs = run_position_chain(model, mp, cfg, n, diag);
  CounterRng vrng(cfg.seed, 0xda3e39cb94b95bdbull);  // velocity stream
  const double sd = std::sqrt(mp.T);
  const int d = model.dim();
  std::vector<PhasePoint> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].x = std::move(xs[i]);
    out[i].v.resize(d);
    for (int l = 0; l < d; ++l) out[i].v[l] = sd * vrng.normal();
  }
  return out;
}

std::optional<std::vector<double>> gradient_system_step(const PotentialModel& model, double T,
                                                        const SimConfig& cfg,
                                                        const std::vector<double>& x,
                                                        CounterRng& rng) {
  struct Rec {
    const PotentialModel& model;
    double T;
    const SimConfig& cfg;
    CounterRng& rng;
    bool go(std::vector<double>& pos, double dt, int depth) {
      if (depth > cfg.max_halving_depth) return false;
      if (!model.in_domain(pos)) return false;
      auto force = model.gradient(pos);
      if (norm(force) > cfg.substep_force_threshold)
        return depth < cfg.max_halving_depth && go(pos, 0.5 * dt, depth + 1) &&
               go(pos, 0.5 * dt, depth + 1);
      std::vector<double> prop(pos.size());
      const double amp = std::sqrt(2.0 * T * dt);
      for (std::size_t i = 0; i < pos.size(); ++i)
        prop[i] = pos[i] - dt * force[i] + amp * rng.normal();
      if (!model.in_domain(prop))
        return depth < cfg.max_halving_depth && go(pos, 0.5 * dt, depth + 1) &&
               go(pos, 0.5 * dt, depth + 1);
      pos = std::move(prop);
      return true;
    }
  };
  std::vector<double> pos = x;
  Rec rec{model, T, cfg, rng};
  if (!rec.go(pos, cfg.dt, 0)) return std::nullopt;
  return pos;
}

PositionTrajectory simulate_gradient_system(const PotentialModel& model, double T,
                                            const SimConfig& cfg, const std::vector<double>& x0,
                                            std::uint64_t stream) {
  cfg.validate();
  if (!model.in_domain(x0))
    throw std::invalid_argument("simulate_gradient_system: start outside domain");
  CounterRng rng(cfg.seed, stream);
  PositionTrajectory traj;
  const long n_steps = std::lround(cfg.t_max / cfg.dt);
  traj.times.push_back(0.0);
  traj.points.push_back(x0);
  std::vector<double> x = x0;
  for (long s = 1; s <= n_steps; ++s) {
    auto next = gradient_system_step(model, T, cfg, x, rng);
    if (!next) {
      traj.valid = false;
      traj.exit_reason = ExitReason::kDomainExit;
      break;
    }
    x = std::move(*next);
    if (s % cfg.record_stride == 0) {
      traj.times.push_back(s * cfg.dt);
      traj.points.push_back(x);
    }
  }
  return traj;
}

ObservableSeries record_observable_ensemble(const PotentialModel& model, const ModelParams& mp,
                                            const SimConfig& cfg,
                                            const std::function<double(const PhasePoint&)>& f,
                                            const std::vector<PhasePoint>& initial) {
  cfg.validate();
  if (initial.empty()) throw std::invalid_argument("ensemble: no initial points");
  const long n_steps = std::lround(cfg.t_max / cfg.dt);
  const std::size_t n_rec = static_cast<std::size_t>(n_steps / cfg.record_stride) + 1;
  const int members = static_cast<int>(initial.size());

  ObservableSeries series;
  series.times.resize(n_rec);
  for (std::size_t t = 0; t < n_rec; ++t) series.times[t] = t * cfg.record_stride * cfg.dt;

  std::vector<double> values(static_cast<std::size_t>(members) * n_rec, 0.0);
  std::vector<char> ok(members, 0);

  parallel_for(members, [&](std::size_t m) {
    CounterRng rng(cfg.seed, m + 1);  // stream 0 reserved for samplers
    PhasePoint p = initial[m];
    double* row = values.data() + m * n_rec;
    row[0] = f(p);
    std::size_t rec = 1;
    for (long s = 1; s <= n_steps; ++s) {
      auto next = step(model, mp, cfg, p, rng);
      if (!next) return;  // member dropped
      p = std::move(*next);
      if (model.hamiltonian(p) > cfg.energy_cap) return;
      if (s % cfg.record_stride == 0) row[rec++] = f(p);
    }
    ok[m] = 1;
  });

  // compact out dropped members to keep estimates unbiased by partial rows
  series.values.reserve(values.size());
  for (int m = 0; m < members; ++m) {
    if (!ok[m]) { ++series.dropped; continue; }
    series.values.insert(series.values.end(), values.begin() + m * n_rec,
                         values.begin() + (m + 1) * n_rec);
  }
  series.members = members - static_cast<int>(series.dropped);
  if (series.members == 0) throw statistics_error("ensemble: every member was dropped");
  if (series.dropped > 0 &&
      static_cast<double>(series.dropped) / members > 1e-3)
    throw numerics_error("ensemble: more than 0.1% of members invalidated (" +
                         std::to_string(series.dropped) + "/" + std::to_string(members) + ")");
  return series;
}

std::vector<AutocorrPoint> autocovariance(const ObservableSeries& series) {
  const int M = series.members;
  const std::size_t L = series.times.size();
  if (M < 8) throw statistics_error("autocovariance: need at least 8 ensemble members");
  std::vector<AutocorrPoint> out(L);
  // means at each recorded time
  std::vector<double> mean(L, 0.0);
  for (int m = 0; m < M; ++m)
    for (std::size_t t = 0; t < L; ++t) mean[t] += series.values[m * L + t];
  for (std::size_t t = 0; t < L; ++t) mean[t] /= M;
  for (std::size_t t = 0; t < L; ++t) {
    double acc = 0.0, acc2 = 0.0;
    for (int m = 0; m < M; ++m) {
      const double prod = (series.values[m * L] - mean[0]) * (series.values[m * L + t] - mean[t]);
      acc += prod;
      acc2 += prod * prod;
    }
    const double c = acc / M;
    const double var = std::max(acc2 / M - c * c, 0.0);
    out[t] = {series.times[t], c, std::sqrt(var / M)};
  }
  return out;
}

std::vector<AutocorrPoint> autocovariance_single(const std::vector<double>& times,
                                                 const std::vector<double>& values,
                                                 std::size_t max_lag, int n_batches) {
  if (times.size() != values.size())
    throw std::invalid_argument("autocovariance_single: length mismatch");
  const std::size_t n = values.size();
  if (n_batches < 2 || n < static_cast<std::size_t>(4 * n_batches) || max_lag * 2 >= n / n_batches)
    throw statistics_error("autocovariance_single: series too short for the requested lags");
  const std::size_t batch_len = n / n_batches;
  const double dt = times[1] - times[0];
  std::vector<AutocorrPoint> out(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double sum = 0, sum2 = 0;
    for (int b = 0; b < n_batches; ++b) {
      const double* seg = values.data() + b * batch_len;
      double mean = 0;
      for (std::size_t i = 0; i < batch_len; ++i) mean += seg[i];
      mean /= batch_len;
      double c = 0;
      const std::size_t terms = batch_len - lag;
      for (std::size_t i = 0; i < terms; ++i) c += (seg[i] - mean) * (seg[i + lag] - mean);
      c /= terms;
      sum += c;
      sum2 += c * c;
    }
    const double m = sum / n_batches;
    const double var = std::max(sum2 / n_batches - m * m, 0.0);
    out[lag] = {lag * dt, m, std::sqrt(var / n_batches)};
  }
  return out;
}

}  // namespace langcert
