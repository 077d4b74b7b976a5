// Shared helpers for the test suites: finite-difference oracles for the
// analytic derivatives, random point generation, and tolerance helpers.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "langcert/potential.hpp"
#include "langcert/rng.hpp"
#include "langcert/vec.hpp"

namespace testsup {

using langcert::PhasePoint;
using langcert::PotentialModel;

// Central-difference gradient of the potential value, step 1e-5 scaled by
// the configuration magnitude. Independent of the analytic gradient path.
inline std::vector<double> fd_gradient(const PotentialModel& model, std::span<const double> x) {
  const double h = 1e-5 * std::max(1.0, langcert::norm(x));
  std::vector<double> g(x.size());
  std::vector<double> q(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    q[i] = x[i] + h;
    const double up = model.value(q);
    q[i] = x[i] - h;
    const double um = model.value(q);
    q[i] = x[i];
    g[i] = (up - um) / (2.0 * h);
  }
  return g;
}

// Directional central difference of the analytic gradient: approximates
// Hess U(x) y.
inline std::vector<double> fd_hessian_vec(const PotentialModel& model, std::span<const double> x,
                                          std::span<const double> y) {
  const double ny = langcert::norm(y);
  std::vector<double> out(x.size(), 0.0);
  if (ny == 0.0) return out;
  const double h = 1e-5 * std::max(1.0, langcert::norm(x)) / ny;
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += h * y[i];
    xm[i] -= h * y[i];
  }
  const auto gp = model.gradient(xp);
  const auto gm = model.gradient(xm);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (gp[i] - gm[i]) / (2.0 * h);
  return out;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double rel_err_vec(std::span<const double> got, std::span<const double> want) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

// Random configuration in the domain: iid normals rescaled, resampled until
// inside (for the singular family, particles are spread first so rejection
// is rare).
inline std::vector<double> random_domain_point(const PotentialModel& model,
                                               langcert::CounterRng& rng, double spread = 1.0) {
  const int d = model.dim();
  std::vector<double> x(d);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    if (model.family() == langcert::PotentialFamily::kSingularPair) {
      // equilibrium-like separations: lattice spacing 2 with mild jitter, so
      // finite-difference oracles stay in their accuracy regime
      const int N = model.n_particles(), k = model.k_dim();
      for (int i = 0; i < N; ++i)
        for (int l = 0; l < k; ++l)
          x[i * k + l] = (l == 0 ? 2.0 * i : 0.0) + spread * 0.25 * rng.normal();
      if (k == 1) {  // nudge into the ordered cone
        std::vector<double> sorted(x);
        std::sort(sorted.begin(), sorted.end());
        x = sorted;
      }
    } else {
      for (int i = 0; i < d; ++i) x[i] = spread * rng.normal();
    }
    if (model.in_domain(x)) return x;
  }
  throw std::runtime_error("random_domain_point: rejection sampling failed");
}

inline PhasePoint random_phase_point(const PotentialModel& model, langcert::CounterRng& rng,
                                     double spread = 1.0, double vel_spread = 1.0) {
  PhasePoint p;
  p.x = random_domain_point(model, rng, spread);
  p.v.resize(model.dim());
  for (auto& c : p.v) c = vel_spread * rng.normal();
  return p;
}

}  // namespace testsup
