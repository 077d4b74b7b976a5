#pragma once

#include <string>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "langcert/potential.hpp"

namespace langcert {

// Friction, temperature, and system size of the dynamics.
struct ModelParams {
  double gamma = 1;
  double T = 1;
  int n_particles = 1;
  int k_dim = 1;
  int dim() const { return n_particles * k_dim; }
  void validate() const;
};

// c(gamma) = gamma/2 + sqrt(gamma^2/4 + 1), the velocity-shear coefficient
// that cancels the cross term in the iterated-form computation. (One display
// in the source material prints gamma^2/2 under the root; the derivation and
// all worked examples force gamma^2/4, which is what is used everywhere here.)
double friction_constant(double gamma);

// Closed-form growth constants for the singular pair family, with
// eta0 = pair exponent and eta_inf = well exponent.
GrowthConstants growth_constants_singular(const SingularPairParams& params, double T);

double kappa_prime(const ModelParams& mp);  // 1/(16Td)

// R1 = { d_inf/c_inf + max((40e^4+4)Td(kappa2+1), 92 gamma^2 Td)/c_inf }^{1/(2-2/eta_inf)},
// R2 = R1 + 32Td.
std::pair<double, double> compute_r1_r2(const GrowthConstants& gc, const ModelParams& mp);

// D(r) = (2 (c0 kp)^2 r^{4+4/eta0} + 2 (d0 kp)^2 + kappa2^2 + 2) / (gamma^2 T) + 1/(2T).
// The "+2" comes from the proof that uses D; the summary display omits it.
// Including it only enlarges lambda (and shrinks sigma), so the certificate
// stays valid.
double d_of_r(double r, const GrowthConstants& gc, const ModelParams& mp);
double log_d_of_r(double r, const GrowthConstants& gc, const ModelParams& mp);  // overflow-safe

struct AlphaBeta {
  double alpha;       // gamma*T*d / (4 R2)
  double beta;        // (5 gamma T d / (4 R2)) e^4 -- the rounded constant the rate uses
  double beta_exact;  // (5 gamma T d / (4 R2)) e^{2 + 5Td/R2} -- drift-verifier constant
};
AlphaBeta compute_alpha_beta(const ModelParams& mp, double r2);

// Smallest lambda0 with lambda0 >= R2 log D(lambda0) + R2 log(beta rho' + 1),
// valid for every larger argument as well. Doubling bracket + geometric
// sign scan + bisection; throws std::overflow_error past 1e300.
double solve_lambda0(const GrowthConstants& gc, const ModelParams& mp, double beta,
                     double rho_k_prime, double r2);

enum class RhoProvenance { kUserSupplied, kSpectralEstimated };

struct Certificate {
  ModelParams params;
  GrowthConstants growth;

  double c_gamma = 0;
  double kappa_prime = 0;
  double r1 = 0, r2 = 0;
  double alpha = 0, beta = 0, beta_exact = 0;
  double rho_k = 0;
  RhoProvenance rho_k_provenance = RhoProvenance::kUserSupplied;
  double rho_k_prime = 0;
  double lambda0 = 0, lambda = 0;
  double zeta_sq = 0;
  double sigma = 0;
  double velocity_cap = 0;  // (20 e^4 + 2) T d
  double energy_cap = 0;    // R2

  // Every field with its value, the formula it came from, and the rho_K
  // provenance tag.
  nlohmann::json to_json() const;
};

// Assembles the full constant chain from the growth constants and a local
// Poincare constant. All Certificate invariants hold on the output.
Certificate build_certificate(const GrowthConstants& gc, const ModelParams& mp, double rho_k,
                              RhoProvenance prov);

struct VillaniCertificate {
  ModelParams params;
  double m_sq = 0;
  double zeta_sq = 0;
  double sigma = 0;
  double rho = 0;
  nlohmann::json to_json() const;
};

// Bounded-Hessian route: |Hess U y| <= M |y| globally and a global Poincare
// constant rho. zeta^2 = (2+M^2)/(gamma^2 T) + c^2/(2T) + 1/(4T),
// sigma = (gamma/4) min(1, 1/(rho zeta^2)).
VillaniCertificate villani_certificate(const ModelParams& mp, double m_bound, double rho);

// Same conclusion from |Hess U y| <= kappa0 |grad U||y| + kappa0p |y| with
// kappa0 <= gamma / (2 sqrt(T + T c^2)); M^2 is then
// 2 gamma^2 T kappa0 d/(4c^2) + sqrt(2d) kappa0p gamma^2/(4c^2) + kappa0p^2.
VillaniCertificate villani_certificate_from_kappas(const ModelParams& mp, double kappa0,
                                                   double kappa0p, double rho);

inline constexpr double kE4 = 54.598150033144236;  // e^4
inline double velocity_cap(const ModelParams& mp) {
  return (20.0 * kE4 + 2.0) * mp.T * mp.dim();
}

}  // namespace langcert
