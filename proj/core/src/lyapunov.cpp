#include "langcert/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "langcert/errors.hpp"
#include "langcert/vec.hpp"

namespace langcert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bump_prime(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
}  // namespace

LyapunovWeight::LyapunovWeight(PotentialModel model, const Certificate& cert)
    : model_(std::move(model)), cert_(cert) {
  if (model_.dim() != cert_.params.dim())
    throw std::invalid_argument("lyapunov weight: model/certificate dimension mismatch");
  b_ = 1.0 / cert_.r2;
  const double Td = cert_.params.T * cert_.params.dim();
  if (!(b_ > 0.0 && b_ <= 1.0 / (2.0 * Td)))
    throw std::invalid_argument("lyapunov weight: b = 1/R2 outside (0, 1/(2Td)]");
  delta_ = 1.5 * cert_.params.gamma * Td;
}

double LyapunovWeight::h(double q) const {
  if (q < 0) throw std::invalid_argument("h: q must be >= 0");
  const double t = (q - cert_.r1) / (cert_.r2 - cert_.r1);
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = bump(t), b = bump(1.0 - t);
  return a / (a + b);
}

double LyapunovWeight::h_prime(double q) const {
  if (q < 0) throw std::invalid_argument("h_prime: q must be >= 0");
  const double width = cert_.r2 - cert_.r1;
  const double t = (q - cert_.r1) / width;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = bump(t), b = bump(1.0 - t);
  const double s = (bump_prime(t) * b + a * bump_prime(1.0 - t)) / ((a + b) * (a + b));
  return s / width;
}

double LyapunovWeight::psi(const PhasePoint& p) const {
  const double u = model_.value(p.x);
  if (u < cert_.r1) return 0.0;
  const auto grad = model_.gradient(p.x);
  const double g2 = norm2(grad);
  if (g2 == 0.0)
    throw numerics_error("psi: gradient vanished above R1; certificate radii are inconsistent");
  return -delta_ * b_ * h(u) * dot(p.v, grad) / g2;
}

double LyapunovWeight::log_v(const PhasePoint& p) const {
  return b_ * model_.hamiltonian(p) + psi(p);
}

double LyapunovWeight::v(const PhasePoint& p) const {
  const double lv = log_v(p);
  return lv > 709.0 ? kInf : std::exp(lv);
}

double LyapunovWeight::w(const PhasePoint& p) const {
  const double val = v(p);
  return std::isinf(val) ? kInf : std::exp(1.0) * val + cert_.lambda;
}

double LyapunovWeight::adjoint_ratio(const PhasePoint& p) const {
  const auto& mp = cert_.params;
  const int d = model_.dim();
  const double Td = mp.T * d;
  const double v2 = norm2(p.v);
  // the b H part: L*(bH) = b gamma (Td - |v|^2)
  double ratio = b_ * mp.gamma * (Td - v2);
  const double u = model_.value(p.x);

  std::vector<double> grad_psi_v(d, 0.0);
  if (u >= cert_.r1) {
    const auto grad = model_.gradient(p.x);
    const double g2 = norm2(grad);
    if (g2 == 0.0)
      throw numerics_error("adjoint_ratio: gradient vanished above R1");
    const double hu = h(u);
    const double hpu = h_prime(u);
    const double vdotg = dot(p.v, grad);
    const double psi_val = -delta_ * b_ * hu * vdotg / g2;

    // grad_x psi = -delta b [ h'(U) (v.G) grad U + h(U)(Hv/g2 - 2(v.gradU) HgradU / g2^2) ]
    const auto hess_v = model_.hessian_vec(p.x, p.v);
    const auto hess_g = model_.hessian_vec(p.x, grad);
    double v_dot_gradx_psi = 0.0;
    for (int i = 0; i < d; ++i) {
      const double gxpsi_i =
          -delta_ * b_ * (hpu * (vdotg / g2) * grad[i] +
                          hu * (hess_v[i] / g2 - 2.0 * vdotg * hess_g[i] / (g2 * g2)));
      v_dot_gradx_psi += p.v[i] * gxpsi_i;
    }
    for (int i = 0; i < d; ++i) grad_psi_v[i] = -delta_ * b_ * hu * grad[i] / g2;
    // L* psi = -v.grad_x psi - gamma psi - delta b h(U)
    ratio += -v_dot_gradx_psi - mp.gamma * psi_val - delta_ * b_ * hu;
  }
  // + gamma T |grad_v (bH + psi)|^2
  double gv2 = 0.0;
  for (int i = 0; i < d; ++i) {
    const double gi = b_ * p.v[i] + grad_psi_v[i];
    gv2 += gi * gi;
  }
  ratio += mp.gamma * mp.T * gv2;
  return ratio;
}

bool LyapunovWeight::indicator_k(const PhasePoint& p) const {
  return norm2(p.v) <= cert_.velocity_cap && model_.value(p.x) <= cert_.energy_cap;
}

DriftReport drift_check(const LyapunovWeight& weight, std::span<const PhasePoint> points) {
  DriftReport rep;
  const Certificate& cert = weight.certificate();
  const double log_beta = std::log(cert.beta_exact);
  for (const auto& p : points) {
    const double ratio = weight.adjoint_ratio(p);
    const double lv = weight.log_v(p);
    const bool in_k = weight.indicator_k(p);
    const double inv_v = std::exp(-lv);  // underflows to 0 at huge V, which is fine
    const double tol_ratio = 1e-8 * (inv_v + cert.alpha);
    const double rhs = -cert.alpha + (in_k ? std::exp(log_beta - lv) : 0.0);
    const double margin = rhs - ratio;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.argmin = p;
    }
    if (margin < -tol_ratio) ++rep.violations;
    if (!in_k) {
      ++rep.off_k_points;
      const double off_margin = -cert.alpha - ratio;
      rep.min_off_k_margin = std::min(rep.min_off_k_margin, off_margin);
      if (off_margin < -tol_ratio) ++rep.off_k_violations;
    }
    ++rep.n_points;
  }
  rep.pass = rep.n_points > 0 && rep.violations == 0 && rep.off_k_violations == 0;
  return rep;
}

WeightHypothesesReport check_weight_hypotheses(const LyapunovWeight& weight,
                                               std::span<const PhasePoint> samples,
                                               int dirs_per_point, std::uint64_t dir_seed,
                                               double mu_k_estimate, double mu_kc_estimate) {
  if (dirs_per_point < 1)
    throw std::invalid_argument("check_weight_hypotheses: need at least one direction");
  WeightHypothesesReport rep;
  const Certificate& cert = weight.certificate();
  const auto& mp = cert.params;
  const int d = weight.model().dim();
  const double pref = cert.beta * cert.rho_k_prime + 1.0;
  CounterRng rng(dir_seed, 0);
  std::vector<double> y(d);
  for (const auto& p : samples) {
    rep.min_log_v = std::min(rep.min_log_v, weight.log_v(p));
    const double wv = weight.w(p);
    for (int rep_dir = 0; rep_dir < dirs_per_point; ++rep_dir) {
      for (int i = 0; i < d; ++i) y[i] = rng.normal();
      const double ny = norm(y);
      if (ny == 0.0) continue;
      for (int i = 0; i < d; ++i) y[i] /= ny;
      const auto hy = weight.model().hessian_vec(p.x, y);
      const double r_val = 2.0 / mp.gamma + norm2(hy) / (2.0 * mp.gamma);
      const double rhs = pref * (r_val / (mp.gamma * mp.T) + 1.0 / (2.0 * mp.T));
      const double slack = (std::isinf(wv) ? 1e300 : wv) - rhs;
      rep.min_domination_slack = std::min(rep.min_domination_slack, slack);
      ++rep.n_pairs;
    }
  }
  rep.tail_ratio = mu_k_estimate > 0
                       ? (2.0 * cert.beta / cert.alpha) * (mu_kc_estimate / mu_k_estimate)
                       : 1e300;
  rep.domination_pass = rep.n_pairs > 0 && rep.min_domination_slack >= -1e-9;
  // strong-normalized weight e V >= 1 must dominate the tail ratio
  rep.tail_pass = rep.tail_ratio <= 1.0 && rep.min_log_v >= -1.0 - 1e-12;
  rep.pass = rep.domination_pass && rep.tail_pass;
  return rep;
}

std::vector<PhasePoint> stress_points(const PotentialModel& model, const ModelParams& mp,
                                      std::span<const PhasePoint> base, std::size_t target_count,
                                      double min_sep_fraction) {
  if (base.empty()) throw std::invalid_argument("stress_points: need base samples");
  std::vector<PhasePoint> out;
  out.reserve(target_count);
  const double vel_cap = velocity_cap(mp);
  const int d = model.dim();

  // typical pair separation of the base cloud (singular family only)
  double typical_sep = 1.0;
  if (model.family() == PotentialFamily::kSingularPair && model.n_particles() > 1) {
    const int N = model.n_particles(), k = model.k_dim();
    double acc = 0.0;
    std::size_t cnt = 0;
    for (const auto& p : base) {
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
          double r2 = 0.0;
          for (int l = 0; l < k; ++l) {
            const double diff = p.x[i * k + l] - p.x[j * k + l];
            r2 += diff * diff;
          }
          acc += std::sqrt(r2);
          ++cnt;
        }
    }
    typical_sep = acc / std::max<std::size_t>(cnt, 1);
  }

  CounterRng rng(0x5742e55ull, 7);
  std::size_t idx = 0;
  while (out.size() < target_count) {
    PhasePoint p = base[idx % base.size()];
    ++idx;
    const int mode = static_cast<int>(out.size() % 3);
    if (mode == 0) {
      // far velocity tail, up to 100x the velocity cap in |v|^2
      const double target_v2 = vel_cap * (1.0 + 99.0 * rng.uniform());
      const double cur = norm2(p.v);
      const double f = std::sqrt(target_v2 / std::max(cur, 1e-12));
      for (int i = 0; i < d; ++i) p.v[i] *= f;
    } else if (mode == 1) {
      // far position field: inflate the configuration
      const double f = 2.0 + 18.0 * rng.uniform();
      for (int i = 0; i < d; ++i) p.x[i] *= f;
    } else if (model.family() == PotentialFamily::kSingularPair && model.n_particles() > 1) {
      // shrink one pair toward coincidence, down to min_sep_fraction of typical
      const int k = model.k_dim();
      const int i = 0, j = 1;
      const double frac = min_sep_fraction * (1.0 + 9.0 * rng.uniform());
      std::vector<double> mid(k), diff(k);
      double r = 0.0;
      for (int l = 0; l < k; ++l) {
        mid[l] = 0.5 * (p.x[i * k + l] + p.x[j * k + l]);
        diff[l] = p.x[i * k + l] - p.x[j * k + l];
        r += diff[l] * diff[l];
      }
      r = std::sqrt(r);
      const double want = frac * typical_sep;
      const double shrink = want / std::max(r, 1e-12);
      for (int l = 0; l < k; ++l) {
        p.x[i * k + l] = mid[l] + 0.5 * shrink * diff[l];
        p.x[j * k + l] = mid[l] - 0.5 * shrink * diff[l];
      }
      if (!model.in_domain(p.x)) continue;
    } else {
      // non-singular families: deep well tail instead
      const double f = 5.0 + 45.0 * rng.uniform();
      for (int i = 0; i < d; ++i) p.x[i] *= f;
    }
    if (model.in_domain(p.x)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace langcert
