#include "langcert/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace langcert {

void ModelParams::validate() const {
  if (gamma <= 0 || T <= 0) throw std::invalid_argument("model params: gamma, T must be positive");
  if (n_particles < 1 || k_dim < 1)
    throw std::invalid_argument("model params: N, k must be >= 1");
}

double friction_constant(double gamma) {
  if (gamma <= 0) throw std::invalid_argument("friction_constant: gamma must be positive");
  return 0.5 * gamma + std::sqrt(0.25 * gamma * gamma + 1.0);
}

GrowthConstants growth_constants_singular(const SingularPairParams& p, double T) {
  if (T <= 0) throw std::invalid_argument("growth_constants_singular: T must be positive");
  // run the constructor validation
  (void)PotentialModel::singular_pair(p);
  const double N = p.n_particles, k = p.k_dim;
  const double A = p.well_amplitude, B = p.pair_amplitude;
  const double a = p.well_exponent, b = p.pair_exponent;

  GrowthConstants gc;
  gc.eta0 = b;
  gc.eta_inf = a;
  gc.kappa2 = std::pow(N, 5.0 - 8.0 / a) * A * a * (a - 1) * k *
                  std::pow(128.0 * (a - 1) * k * k * T / (A * a), (a - 2) / a) +
              std::pow(N, 10.0 + 16.0 / b) * 4.0 * B * b * (b + 3) * k *
                  std::pow(512.0 * (b + 3) * k * k * T / (B * b), (b + 2) / b) +
              A * A * a * a / (8.0 * N * N * k * T) +
              B * B * b * b * std::pow(N, 2 * b + 4) / (8.0 * k * T);
  gc.c0 = N * N * N * 4.0 * b * b / std::pow(B, 2.0 / b);
  gc.d0 = std::pow(N, 1.0 - 2.0 * (a - 1) * b / (a + b)) * 2.0 * A * A * a * a *
          std::pow(std::pow(A, 2.0 / b) * b * b / (std::pow(B, 2.0 / b) * a * a),
                   (a - 1) * b / (a + b));
  gc.c_inf = std::pow(A, 2.0 / a) * a * a /
             (std::pow(2.0, 5.0 - 2.0 / a) * std::pow(N, 5.0 - 2.0 / a));
  gc.d_inf = std::pow(N, b * (6 * a - 2) * (a - 1) / (a * (a + b)) + 2.0 / a - 1.0) *
                 (std::pow(A, 2.0 / a) * a * a * B * B / (8.0 * std::pow(B, 2.0 / a))) *
                 std::pow(std::pow(A, 2.0 / a) * a * a / (std::pow(B, 2.0 / a) * b * b),
                          b * (a - 1) / (a + b)) +
             2.0 * A * A * a * a / N + 2.0 * B * B * b * b * std::pow(N, 2 * b + 5);
  gc.validate();
  return gc;
}

double kappa_prime(const ModelParams& mp) { return 1.0 / (16.0 * mp.T * mp.dim()); }

std::pair<double, double> compute_r1_r2(const GrowthConstants& gc, const ModelParams& mp) {
  mp.validate();
  if (!(gc.eta_inf > 1.0))
    throw std::invalid_argument("compute_r1_r2: eta_inf must exceed 1 (exponent undefined)");
  const double Td = mp.T * mp.dim();
  const double inner = std::max((40.0 * kE4 + 4.0) * Td * (gc.kappa2 + 1.0),
                                92.0 * mp.gamma * mp.gamma * Td);
  const double r1 =
      std::pow(gc.d_inf / gc.c_inf + inner / gc.c_inf, 1.0 / (2.0 - 2.0 / gc.eta_inf));
  return {r1, r1 + 32.0 * Td};
}

namespace {
// log(sum exp(t_i)) without overflow
double logsumexp4(double t0, double t1, double t2, double t3) {
  const double m = std::max(std::max(t0, t1), std::max(t2, t3));
  return m + std::log(std::exp(t0 - m) + std::exp(t1 - m) + std::exp(t2 - m) + std::exp(t3 - m));
}
}  // namespace

double log_d_of_r(double r, const GrowthConstants& gc, const ModelParams& mp) {
  if (r < 0) throw std::invalid_argument("d_of_r: r must be >= 0");
  const double kp = kappa_prime(mp);
  const double g2t = mp.gamma * mp.gamma * mp.T;
  const double p = 4.0 + 4.0 / gc.eta0;
  const double t_power = (r == 0.0 && p > 0.0)
                             ? -std::numeric_limits<double>::infinity()
                             : std::log(2.0) + 2.0 * std::log(gc.c0 * kp) + p * std::log(r);
  const double t_d0 = std::log(2.0) + 2.0 * std::log(gc.d0 * kp);
  const double t_k = std::log(gc.kappa2 * gc.kappa2 + 2.0);
  return logsumexp4(t_power - std::log(g2t), t_d0 - std::log(g2t), t_k - std::log(g2t),
                    -std::log(2.0 * mp.T));
}

double d_of_r(double r, const GrowthConstants& gc, const ModelParams& mp) {
  if (r < 0) throw std::invalid_argument("d_of_r: r must be >= 0");
  const double kp = kappa_prime(mp);
  const double num = 2.0 * (gc.c0 * kp) * (gc.c0 * kp) * std::pow(r, 4.0 + 4.0 / gc.eta0) +
                     2.0 * (gc.d0 * kp) * (gc.d0 * kp) + gc.kappa2 * gc.kappa2 + 2.0;
  return num / (mp.gamma * mp.gamma * mp.T) + 1.0 / (2.0 * mp.T);
}

AlphaBeta compute_alpha_beta(const ModelParams& mp, double r2) {
  if (r2 <= 0) throw std::invalid_argument("compute_alpha_beta: R2 must be positive");
  const double Td = mp.T * mp.dim();
  const double base = 5.0 * mp.gamma * Td / (4.0 * r2);
  AlphaBeta ab;
  ab.alpha = mp.gamma * Td / (4.0 * r2);
  ab.beta = base * kE4;
  ab.beta_exact = base * std::exp(2.0 + 5.0 * Td / r2);
  return ab;
}

double solve_lambda0(const GrowthConstants& gc, const ModelParams& mp, double beta,
                     double rho_k_prime, double r2) {
  if (beta <= 0 || rho_k_prime <= 0 || r2 <= 0)
    throw std::invalid_argument("solve_lambda0: inputs must be positive");
  const double penalty = r2 * std::log1p(beta * rho_k_prime);
  auto g = [&](double lam) { return lam - r2 * log_d_of_r(lam, gc, mp) - penalty; };

  const double lo = penalty;
  // beyond a_star, D'/D <= (4+4/eta0)/lambda makes g strictly increasing
  const double a_star = r2 * (4.0 + 4.0 / gc.eta0);
  double hi = std::max(std::max(lo, a_star), 1.0);
  while (g(hi) < 0) {
    hi *= 2.0;
    if (hi > 1e300)
      throw std::overflow_error("solve_lambda0: no admissible lambda0 below 1e300");
  }
  // last sign change on a geometric scan of [lo, hi], then bisect
  const int M = 4096;
  const double ratio = std::pow(hi / lo, 1.0 / M);
  int last_neg = -1;
  for (int j = 0; j <= M; ++j) {
    const double t = lo * std::pow(ratio, j);
    if (g(t) < 0) last_neg = j;
  }
  if (last_neg < 0) return lo;
  double blo = lo * std::pow(ratio, last_neg);
  double bhi = lo * std::pow(ratio, last_neg + 1);
  for (int it = 0; it < 200 && (bhi - blo) > 1e-16 * bhi; ++it) {
    const double mid = 0.5 * (blo + bhi);
    if (g(mid) < 0) blo = mid; else bhi = mid;
  }
  return bhi;  // upper end: the inequality holds on evaluation
}

Certificate build_certificate(const GrowthConstants& gc, const ModelParams& mp, double rho_k,
                              RhoProvenance prov) {
  mp.validate();
  gc.validate();
  if (rho_k <= 0) throw std::invalid_argument("build_certificate: rho_k must be positive");
  Certificate c;
  c.params = mp;
  c.growth = gc;
  c.c_gamma = friction_constant(mp.gamma);
  c.kappa_prime = kappa_prime(mp);
  std::tie(c.r1, c.r2) = compute_r1_r2(gc, mp);
  const AlphaBeta ab = compute_alpha_beta(mp, c.r2);
  c.alpha = ab.alpha;
  c.beta = ab.beta;
  c.beta_exact = ab.beta_exact;
  c.rho_k = rho_k;
  c.rho_k_provenance = prov;
  c.rho_k_prime = (4.0 * c.c_gamma * c.c_gamma + 4.0) * rho_k / mp.gamma;
  c.lambda0 = solve_lambda0(gc, mp, c.beta, c.rho_k_prime, c.r2);
  c.lambda = (c.beta * c.rho_k_prime + 1.0) * d_of_r(c.lambda0, gc, mp);
  if (!std::isfinite(c.lambda))
    throw std::overflow_error("build_certificate: lambda overflowed double range");
  c.zeta_sq = 2.0 / (1.0 + c.beta * c.rho_k_prime);
  c.sigma = std::min(c.alpha / (2.0 * (1.0 + c.lambda)),
                     mp.gamma / (1.0 + c.beta * c.rho_k_prime));
  c.velocity_cap = velocity_cap(mp);
  c.energy_cap = c.r2;
  return c;
}

VillaniCertificate villani_certificate(const ModelParams& mp, double m_bound, double rho) {
  mp.validate();
  if (m_bound <= 0 || rho <= 0)
    throw std::invalid_argument("villani_certificate: M and rho must be positive");
  const double cg = friction_constant(mp.gamma);
  VillaniCertificate v;
  v.params = mp;
  v.rho = rho;
  v.m_sq = m_bound * m_bound;
  v.zeta_sq = (2.0 + v.m_sq) / (mp.gamma * mp.gamma * mp.T) + cg * cg / (2.0 * mp.T) +
              1.0 / (4.0 * mp.T);
  v.sigma = 0.25 * mp.gamma * std::min(1.0, 1.0 / (rho * v.zeta_sq));
  return v;
}

VillaniCertificate villani_certificate_from_kappas(const ModelParams& mp, double kappa0,
                                                   double kappa0p, double rho) {
  mp.validate();
  if (kappa0 <= 0 || kappa0p <= 0 || rho <= 0)
    throw std::invalid_argument("villani_certificate_from_kappas: inputs must be positive");
  const double cg = friction_constant(mp.gamma);
  const double threshold = mp.gamma / (2.0 * std::sqrt(mp.T + mp.T * cg * cg));
  if (kappa0 > threshold * (1.0 + 1e-12))
    throw std::invalid_argument(
        "villani_certificate_from_kappas: kappa0 exceeds gamma/(2 sqrt(T + T c^2(gamma))) = " +
        std::to_string(threshold));
  const double d = mp.dim();
  const double c2 = cg * cg;
  const double m_sq = 2.0 * mp.gamma * mp.gamma * mp.T * kappa0 * d / (4.0 * c2) +
                      std::sqrt(2.0 * d) * kappa0p * mp.gamma * mp.gamma / (4.0 * c2) +
                      kappa0p * kappa0p;
  VillaniCertificate v;
  v.params = mp;
  v.rho = rho;
  v.m_sq = m_sq;
  v.zeta_sq = (2.0 + m_sq) / (mp.gamma * mp.gamma * mp.T) + c2 / (2.0 * mp.T) +
              1.0 / (4.0 * mp.T);
  v.sigma = 0.25 * mp.gamma * std::min(1.0, 1.0 / (rho * v.zeta_sq));
  return v;
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json j;
  j["route"] = "general";
  j["model"] = {{"gamma", params.gamma}, {"T", params.T},
                {"N", params.n_particles}, {"k", params.k_dim}, {"d", params.dim()}};
  j["growth"] = {{"kappa2", growth.kappa2}, {"c0", growth.c0}, {"d0", growth.d0},
                 {"c_inf", growth.c_inf}, {"d_inf", growth.d_inf},
                 {"eta0", growth.eta0}, {"eta_inf", growth.eta_inf}};
  auto field = [](double v, const char* formula) {
    return nlohmann::json{{"value", v}, {"formula", formula}};
  };
  j["c_gamma"] = field(c_gamma, "gamma/2 + sqrt(gamma^2/4 + 1)");
  j["kappa_prime"] = field(kappa_prime, "1/(16 T d)");
  j["R1"] = field(r1,
      "{d_inf/c_inf + max((40e^4+4)Td(kappa2+1), 92 gamma^2 Td)/c_inf}^{1/(2-2/eta_inf)}");
  j["R2"] = field(r2, "R1 + 32 T d");
  j["alpha"] = field(alpha, "gamma T d / (4 R2)");
  j["beta"] = field(beta, "(5 gamma T d / (4 R2)) e^4");
  j["beta_exact"] = field(beta_exact, "(5 gamma T d / (4 R2)) e^{2 + 5Td/R2}");
  j["rho_K"] = {{"value", rho_k},
                {"provenance", rho_k_provenance == RhoProvenance::kUserSupplied
                                   ? "user-supplied" : "spectral-estimated"}};
  j["rho_K_prime"] = field(rho_k_prime, "(4 c^2(gamma) + 4) rho_K / gamma");
  j["lambda0"] = field(lambda0, "min root of lambda0 >= R2 log D(lambda0) + R2 log(beta rho'+1)");
  j["lambda"] = field(lambda, "(beta rho_K' + 1) D(lambda0)");
  j["zeta_sq"] = field(zeta_sq, "2 / (1 + beta rho_K')");
  j["sigma"] = field(sigma, "min(alpha/(2(1+lambda)), gamma/(1 + beta rho_K'))");
  j["velocity_cap"] = field(velocity_cap, "(20 e^4 + 2) T d");
  j["energy_cap"] = field(energy_cap, "R2");
  return j;
}

nlohmann::json VillaniCertificate::to_json() const {
  nlohmann::json j;
  j["route"] = "villani";
  j["model"] = {{"gamma", params.gamma}, {"T", params.T},
                {"N", params.n_particles}, {"k", params.k_dim}, {"d", params.dim()}};
  j["M_sq"] = m_sq;
  j["rho"] = rho;
  j["zeta_sq"] = {{"value", zeta_sq}, {"formula", "(2+M^2)/(gamma^2 T) + c^2/(2T) + 1/(4T)"}};
  j["sigma"] = {{"value", sigma}, {"formula", "(gamma/4) min(1, 1/(rho zeta^2))"}};
  return j;
}

}  // namespace langcert
