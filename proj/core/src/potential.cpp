#include "langcert/potential.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "langcert/vec.hpp"

namespace langcert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}
}  // namespace

PotentialModel PotentialModel::single_well(int n_particles, int k_dim) {
  if (n_particles < 1 || k_dim < 1) throw std::invalid_argument("single_well: N, k must be >= 1");
  return PotentialModel(PotentialFamily::kSingleWell, n_particles, k_dim);
}

PotentialModel PotentialModel::double_well(int n_particles, int k_dim) {
  if (n_particles < 1 || k_dim < 1) throw std::invalid_argument("double_well: N, k must be >= 1");
  return PotentialModel(PotentialFamily::kDoubleWell, n_particles, k_dim);
}

PotentialModel PotentialModel::singular_pair(const SingularPairParams& params) {
  if (params.n_particles < 1 || params.k_dim < 1)
    throw std::invalid_argument("singular_pair: N, k must be >= 1");
  if (params.well_amplitude <= 0 || params.pair_amplitude <= 0)
    throw std::invalid_argument("singular_pair: amplitudes must be positive");
  if (params.well_exponent < 2 || params.well_exponent % 2 != 0)
    throw std::invalid_argument("singular_pair: well exponent must be an even integer >= 2");
  if (params.pair_exponent <= 0)
    throw std::invalid_argument("singular_pair: pair exponent must be positive");
  if (params.k_dim == 1 && !params.ordered)
    throw std::invalid_argument("singular_pair: k = 1 requires the ordering constraint");
  PotentialModel m(PotentialFamily::kSingularPair, params.n_particles, params.k_dim);
  m.pair_ = params;
  return m;
}

const SingularPairParams& PotentialModel::pair_params() const {
  if (family_ != PotentialFamily::kSingularPair)
    throw std::invalid_argument("pair_params: not a singular-pair model");
  return pair_;
}

std::string PotentialModel::family_name() const {
  switch (family_) {
    case PotentialFamily::kSingleWell: return "single_well";
    case PotentialFamily::kDoubleWell: return "double_well";
    case PotentialFamily::kSingularPair: return "singular_pair";
  }
  return "?";
}

void PotentialModel::check_dim(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim())
    throw std::invalid_argument("position vector has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dim()));
}

bool PotentialModel::in_domain(std::span<const double> x) const {
  check_dim(x);
  if (family_ != PotentialFamily::kSingularPair) return true;
  const int N = n_particles_, k = k_dim_;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int l = 0; l < k; ++l) {
        const double diff = x[i * k + l] - x[j * k + l];
        r2 += diff * diff;
      }
      if (r2 < kCoincidenceGuard * kCoincidenceGuard) return false;
    }
  }
  if (k == 1 && pair_.ordered) {
    for (int i = 0; i + 1 < N; ++i)
      if (!(x[i] < x[i + 1])) return false;
  }
  return true;
}

double PotentialModel::value(std::span<const double> x) const {
  check_dim(x);
  switch (family_) {
    case PotentialFamily::kSingleWell:
      return 0.5 * norm2(x);
    case PotentialFamily::kDoubleWell: {
      const double s = norm2(x) - 1.0;
      return 0.25 * s * s;
    }
    case PotentialFamily::kSingularPair: {
      if (!in_domain(x)) return kInf;
      const int N = n_particles_, k = k_dim_;
      const double A = pair_.well_amplitude, B = pair_.pair_amplitude;
      const int a = pair_.well_exponent;
      const double b = pair_.pair_exponent;
      double u = 0.0;
      for (int i = 0; i < N; ++i) {
        double q2 = 0.0;
        for (int l = 0; l < k; ++l) q2 += x[i * k + l] * x[i * k + l];
        u += A * ipow(std::sqrt(q2), a);
      }
      for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
          double r2 = 0.0;
          for (int l = 0; l < k; ++l) {
            const double diff = x[i * k + l] - x[j * k + l];
            r2 += diff * diff;
          }
          u += B * std::pow(r2, -0.5 * b);
        }
      }
      return u;
    }
  }
  return kInf;
}

std::vector<double> PotentialModel::gradient(std::span<const double> x) const {
  check_dim(x);
  if (!in_domain(x)) throw std::domain_error("gradient requested outside the domain");
  std::vector<double> g(x.size(), 0.0);
  switch (family_) {
    case PotentialFamily::kSingleWell:
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i];
      break;
    case PotentialFamily::kDoubleWell: {
      const double s = norm2(x) - 1.0;
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = s * x[i];
      break;
    }
    case PotentialFamily::kSingularPair: {
      const int N = n_particles_, k = k_dim_;
      const double A = pair_.well_amplitude, B = pair_.pair_amplitude;
      const int a = pair_.well_exponent;
      const double b = pair_.pair_exponent;
      // confining wells: Aa x_i |x_i|^{a-2}
      for (int i = 0; i < N; ++i) {
        double q2 = 0.0;
        for (int l = 0; l < k; ++l) q2 += x[i * k + l] * x[i * k + l];
        const double coef = (a == 2) ? A * a : A * a * ipow(std::sqrt(q2), a - 2);
        for (int l = 0; l < k; ++l) g[i * k + l] += coef * x[i * k + l];
      }
      // pair repulsion: -Bb (x_i - x_j) / |x_i - x_j|^{b+2}, antisymmetric
      for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
          double r2 = 0.0;
          for (int l = 0; l < k; ++l) {
            const double diff = x[i * k + l] - x[j * k + l];
            r2 += diff * diff;
          }
          const double coef = B * b * std::pow(r2, -0.5 * (b + 2));
          for (int l = 0; l < k; ++l) {
            const double diff = x[i * k + l] - x[j * k + l];
            g[i * k + l] -= coef * diff;
            g[j * k + l] += coef * diff;
          }
        }
      }
      break;
    }
  }
  return g;
}

std::vector<double> PotentialModel::hessian_vec(std::span<const double> x,
                                                std::span<const double> y) const {
  check_dim(x);
  if (y.size() != x.size()) throw std::invalid_argument("hessian_vec: direction length mismatch");
  if (!in_domain(x)) throw std::domain_error("hessian_vec requested outside the domain");
  std::vector<double> out(x.size(), 0.0);
  switch (family_) {
    case PotentialFamily::kSingleWell:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = y[i];
      break;
    case PotentialFamily::kDoubleWell: {
      // Hess U = (|x|^2 - 1) Id + 2 x x^T
      const double s = norm2(x) - 1.0;
      const double xy = dot(x, y);
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * y[i] + 2.0 * xy * x[i];
      break;
    }
    case PotentialFamily::kSingularPair: {
      const int N = n_particles_, k = k_dim_;
      const double A = pair_.well_amplitude, B = pair_.pair_amplitude;
      const int a = pair_.well_exponent;
      const double b = pair_.pair_exponent;
      // wells: Aa |q|^{a-2} Id + Aa(a-2) |q|^{a-4} q q^T  (second term absent for a = 2)
      for (int i = 0; i < N; ++i) {
        double q2 = 0.0, qy = 0.0;
        for (int l = 0; l < k; ++l) {
          q2 += x[i * k + l] * x[i * k + l];
          qy += x[i * k + l] * y[i * k + l];
        }
        const double q = std::sqrt(q2);
        const double c1 = (a == 2) ? A * a : A * a * ipow(q, a - 2);
        const double c2 = (a == 2) ? 0.0 : A * a * (a - 2) * ipow(q, a - 4);
        for (int l = 0; l < k; ++l)
          out[i * k + l] += c1 * y[i * k + l] + c2 * qy * x[i * k + l];
      }
      // pairs: block Hr = -Bb |r|^{-b-2} Id + Bb(b+2) |r|^{-b-4} r r^T acting
      // on the relative direction y_i - y_j
      for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
          double r2 = 0.0, ry = 0.0;
          for (int l = 0; l < k; ++l) {
            const double diff = x[i * k + l] - x[j * k + l];
            r2 += diff * diff;
            ry += diff * (y[i * k + l] - y[j * k + l]);
          }
          const double c1 = -B * b * std::pow(r2, -0.5 * (b + 2));
          const double c2 = B * b * (b + 2) * std::pow(r2, -0.5 * (b + 4));
          for (int l = 0; l < k; ++l) {
            const double diff = x[i * k + l] - x[j * k + l];
            const double relv = y[i * k + l] - y[j * k + l];
            const double hv = c1 * relv + c2 * ry * diff;
            out[i * k + l] += hv;
            out[j * k + l] -= hv;
          }
        }
      }
      break;
    }
  }
  return out;
}

double PotentialModel::gradient_lower_bound(std::span<const double> x) const {
  if (family_ != PotentialFamily::kSingularPair)
    throw std::invalid_argument("gradient_lower_bound: singular-pair models only");
  check_dim(x);
  const int N = n_particles_, k = k_dim_;
  const double A = pair_.well_amplitude, B = pair_.pair_amplitude;
  const double a = pair_.well_exponent, b = pair_.pair_exponent;
  double well_sum = 0.0, pair_sum = 0.0;
  for (int i = 0; i < N; ++i) {
    double q2 = 0.0;
    for (int l = 0; l < k; ++l) q2 += x[i * k + l] * x[i * k + l];
    well_sum += std::pow(q2, 0.5 * (a - 1));
  }
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int l = 0; l < k; ++l) {
        const double diff = x[i * k + l] - x[j * k + l];
        r2 += diff * diff;
      }
      pair_sum += std::pow(r2, -0.5 * (b + 1));
    }
  }
  const double rootN = std::sqrt(static_cast<double>(N));
  return A * a / (2.0 * N * rootN) * well_sum +
         B * b / (2.0 * N * N * N * rootN) * pair_sum -
         A * a / rootN - B * b * std::pow(static_cast<double>(N), b + 2.5);
}

double PotentialModel::hessian_upper_bound(std::span<const double> x) const {
  if (family_ != PotentialFamily::kSingularPair)
    throw std::invalid_argument("hessian_upper_bound: singular-pair models only");
  check_dim(x);
  const int N = n_particles_, k = k_dim_;
  const double A = pair_.well_amplitude, B = pair_.pair_amplitude;
  const double a = pair_.well_exponent, b = pair_.pair_exponent;
  double well_sum = 0.0, pair_sum = 0.0;
  for (int i = 0; i < N; ++i) {
    double q2 = 0.0;
    for (int l = 0; l < k; ++l) q2 += x[i * k + l] * x[i * k + l];
    well_sum += (pair_.well_exponent == 2) ? 1.0 : std::pow(q2, 0.5 * (a - 2));
  }
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int l = 0; l < k; ++l) {
        const double diff = x[i * k + l] - x[j * k + l];
        r2 += diff * diff;
      }
      pair_sum += std::pow(r2, -0.5 * (b + 2));
    }
  }
  return A * a * (a - 1) * k * well_sum + 4.0 * B * b * (b + 3) * k * pair_sum;
}

double PotentialModel::hamiltonian(const PhasePoint& p) const {
  return 0.5 * norm2(p.v) + value(p.x);
}

void GrowthConstants::validate() const {
  if (kappa2 < 0) throw std::invalid_argument("growth constants: kappa2 must be >= 0");
  if (c0 <= 0 || d0 <= 0 || c_inf <= 0 || d_inf <= 0)
    throw std::invalid_argument("growth constants: c0, d0, c_inf, d_inf must be positive");
  if (!(eta0 < -1.0 || eta0 > 0.0))
    throw std::invalid_argument("growth constants: eta0 must lie in (-inf,-1) or (0,inf)");
  if (!(eta_inf > 1.0)) throw std::invalid_argument("growth constants: eta_inf must be > 1");
}

GrowthConstants single_well_growth_constants() {
  // |grad U|^2 = 2U, Hess U = Id:  2U - 1 <= 2U <= 2U^4 + 1.
  GrowthConstants gc;
  gc.kappa2 = 1;
  gc.c0 = 2; gc.d0 = 1; gc.eta0 = 1;
  gc.c_inf = 2; gc.d_inf = 1; gc.eta_inf = 2;
  return gc;
}

GrowthConstants double_well_growth_constants(double T, int d) {
  if (T <= 0 || d < 1) throw std::invalid_argument("double_well_growth_constants: T > 0, d >= 1");
  // With s = |x|^2:  U = (s-1)^2/4, |grad U|^2 = s(s-1)^2,
  // |Hess U y| <= (3|s-1| + 2)|y|.  kappa2 is the max over s >= 0 of
  //   3|s-1| + 2 - s(s-1)^2 / (16Td),
  // located by a coarse scan plus ternary refinement (phi is smooth and
  // unimodal on each side of s = 1).
  const double kp = 1.0 / (16.0 * T * d);
  auto phi = [&](double s) {
    return 3.0 * std::abs(s - 1.0) + 2.0 - s * (s - 1.0) * (s - 1.0) * kp;
  };
  // the cubic term dominates past s ~ 1 + sqrt(3/kp) + slack
  const double s_hi = 2.0 + 2.0 * std::sqrt(3.0 / kp);
  double best_s = 0.0, best = phi(0.0);
  const int n_scan = 20000;
  for (int i = 1; i <= n_scan; ++i) {
    const double s = s_hi * i / n_scan;
    const double v = phi(s);
    if (v > best) { best = v; best_s = s; }
  }
  double lo = std::max(0.0, best_s - s_hi / n_scan), hi = best_s + s_hi / n_scan;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (phi(m1) < phi(m2)) lo = m1; else hi = m2;
  }
  GrowthConstants gc;
  gc.kappa2 = std::max(best, phi(0.5 * (lo + hi)));
  // 4sU = s(s-1)^2 <= 8U^{3/2} + 4U <= 12 U^{5/2} + 12 and
  // 8U^{3/2} - s(s-1)^2 = |s-1|^3 - s(s-1)^2 <= 1.
  gc.c0 = 12; gc.d0 = 12; gc.eta0 = 4;
  gc.c_inf = 8; gc.d_inf = 1; gc.eta_inf = 4;
  return gc;
}

HessianBoundReport check_growth_bound_1(const PotentialModel& model, const GrowthConstants& gc,
                                        double T, int d,
                                        std::span<const std::vector<double>> xs,
                                        std::span<const std::vector<double>> ys,
                                        double tol) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("check_growth_bound_1: sample/direction count mismatch");
  HessianBoundReport rep;
  const double kp = 1.0 / (16.0 * T * d);
  for (std::size_t n = 0; n < xs.size(); ++n) {
    if (!model.in_domain(xs[n])) { ++rep.skipped; continue; }
    const auto g = model.gradient(xs[n]);
    const auto hy = model.hessian_vec(xs[n], ys[n]);
    const double ny = norm(ys[n]);
    const double lhs = norm(hy);
    const double g2 = norm2(g);
    const double rhs = kp * g2 * ny + gc.kappa2 * ny;
    const double viol = lhs - rhs;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_x.assign(xs[n].begin(), xs[n].end());
    }
    if (g2 > 0) rep.max_hessian_to_gradsq_ratio =
        std::max(rep.max_hessian_to_gradsq_ratio, lhs / (g2 * std::max(ny, 1e-300)));
    ++rep.checked;
  }
  rep.pass = rep.checked > 0 && rep.max_violation <= tol;
  return rep;
}

GradientGrowthReport check_growth_bound_2(const PotentialModel& model, const GrowthConstants& gc,
                                          std::span<const std::vector<double>> xs, double tol) {
  GradientGrowthReport rep;
  for (const auto& x : xs) {
    const double u = model.value(x);
    if (!std::isfinite(u)) { ++rep.skipped; continue; }
    const double g2 = norm2(model.gradient(x));
    const double lower = gc.c_inf * std::pow(u, 2.0 - 2.0 / gc.eta_inf) - gc.d_inf;
    const double upper = gc.c0 * std::pow(u, 2.0 + 2.0 / gc.eta0) + gc.d0;
    const double lv = lower - g2;
    const double uv = g2 - upper;
    if (lv > rep.max_lower_violation) rep.max_lower_violation = lv;
    if (uv > rep.max_upper_violation) {
      rep.max_upper_violation = uv;
      rep.worst_x.assign(x.begin(), x.end());
    }
    ++rep.checked;
  }
  rep.pass = rep.checked > 0 && rep.max_lower_violation <= tol && rep.max_upper_violation <= tol;
  return rep;
}

AppendixBoundReport check_appendix_bounds(const PotentialModel& model,
                                          std::span<const std::vector<double>> xs,
                                          std::span<const std::vector<double>> ys, double tol) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("check_appendix_bounds: sample/direction count mismatch");
  AppendixBoundReport rep;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    if (!model.in_domain(xs[n])) continue;
    const double gnorm = norm(model.gradient(xs[n]));
    rep.max_gradient_violation =
        std::max(rep.max_gradient_violation, model.gradient_lower_bound(xs[n]) - gnorm);
    const double ny = norm(ys[n]);
    if (ny > 0) {
      const double hnorm = norm(model.hessian_vec(xs[n], ys[n])) / ny;
      rep.max_hessian_violation =
          std::max(rep.max_hessian_violation, hnorm - model.hessian_upper_bound(xs[n]));
    }
    ++rep.checked;
  }
  rep.pass = rep.checked > 0 && rep.max_gradient_violation <= tol &&
             rep.max_hessian_violation <= tol;
  return rep;
}

}  // namespace langcert
