#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "golden_values.hpp"
#include "langcert/certificate.hpp"
#include "langcert/rng.hpp"
#include "test_support.hpp"

using namespace langcert;
using testsup::rel_err;

TEST_CASE("friction constant closed form") {
  CHECK(friction_constant(1.5) == doctest::Approx(2.0).epsilon(1e-15));  // 3/4 + 5/4
  CHECK(friction_constant(2.0) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS((void)friction_constant(0.0), std::invalid_argument);
  // c(gamma)/gamma -> 1 for large friction
  CHECK(friction_constant(1e6) / 1e6 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cross-term root property: c^2 - gamma c - 1 = 0") {
  CounterRng rng(99, 0);
  for (int i = 0; i < 100; ++i) {
    const double gamma = 0.1 + 99.9 * rng.uniform();
    const double c = friction_constant(gamma);
    // residual scaled by c^2, the size of the terms that cancel
    CHECK(std::abs(c * c - gamma * c - 1.0) / (c * c) < 1e-14);
  }
}

TEST_CASE("singular growth constants: structural zero-exponent cases") {
  SingularPairParams p;
  p.n_particles = 2;
  p.k_dim = 3;
  p.well_amplitude = 1;
  p.pair_amplitude = 1;
  p.well_exponent = 2;
  p.pair_exponent = 6;
  const auto gc = growth_constants_singular(p, 1.0);
  // a = 2: the first summand's bracket exponent (a-2)/a vanishes, leaving
  // N^{5-8/a} A a (a-1) k = 2 * 1*2*1*3 = 12
  const double term1 = std::pow(2.0, 5.0 - 4.0) * 1.0 * 2.0 * 1.0 * 3.0;
  CHECK(term1 == 12.0);
  // B = 1, b = 6: c0 = N^3 4 b^2 / B^{2/b} = 8 * 144 = 1152 exactly
  CHECK(gc.c0 == 1152.0);
  CHECK(gc.eta0 == 6.0);
  CHECK(gc.eta_inf == 2.0);
}

TEST_CASE("singular growth constants match the high-precision goldens") {
  for (const auto& g : golden::kGrowthCases) {
    SingularPairParams p;
    p.n_particles = g.N;
    p.k_dim = g.k;
    p.well_amplitude = g.A;
    p.pair_amplitude = g.B;
    p.well_exponent = g.a;
    p.pair_exponent = g.b;
    p.ordered = (g.k == 1);
    const auto gc = growth_constants_singular(p, g.T);
    CHECK(rel_err(gc.kappa2, g.kappa2) < 1e-12);
    CHECK(rel_err(gc.c0, g.c0) < 1e-12);
    CHECK(rel_err(gc.d0, g.d0) < 1e-12);
    CHECK(rel_err(gc.c_inf, g.c_inf) < 1e-12);
    CHECK(rel_err(gc.d_inf, g.d_inf) < 1e-12);
  }
}

TEST_CASE("R1/R2: worked synthetic example and structure") {
  GrowthConstants gc;
  gc.kappa2 = 1; gc.c0 = 1; gc.d0 = 1; gc.c_inf = 1; gc.d_inf = 1e-300;
  gc.eta0 = 1; gc.eta_inf = 2;
  ModelParams mp;  // gamma = T = N = k = 1
  // exponent 1/(2 - 1) = 1; inner max((40e^4+4)*2, 92) = 2(40e^4+4)
  const auto [r1, r2] = compute_r1_r2(gc, mp);
  CHECK(r1 == doctest::Approx(2.0 * (40.0 * kE4 + 4.0)).epsilon(1e-12));
  CHECK(r2 == doctest::Approx(r1 + 32.0).epsilon(1e-15));
}

TEST_CASE("R1 scaling in c_inf and the R2 - R1 = 32Td identity") {
  CounterRng rng(3, 1);
  for (int i = 0; i < 100; ++i) {
    GrowthConstants gc;
    gc.kappa2 = 10.0 * rng.uniform();
    gc.c0 = 0.1 + rng.uniform();
    gc.d0 = 0.1 + rng.uniform();
    gc.c_inf = 0.1 + 2.0 * rng.uniform();
    gc.d_inf = 1e-300;  // so the scaling property is exact
    gc.eta0 = 0.5 + 3.0 * rng.uniform();
    gc.eta_inf = 1.1 + 3.0 * rng.uniform();
    ModelParams mp;
    mp.gamma = 0.2 + 3.0 * rng.uniform();
    mp.T = 0.2 + 2.0 * rng.uniform();
    mp.n_particles = 1 + static_cast<int>(3 * rng.uniform());
    const auto [r1a, r2a] = compute_r1_r2(gc, mp);
    CHECK(r2a == r1a + 32.0 * mp.T * mp.dim());
    CHECK(r2a >= 32.0 * mp.T * mp.dim());
    GrowthConstants gc2 = gc;
    gc2.c_inf = 2.0 * gc.c_inf;
    const auto [r1b, r2b] = compute_r1_r2(gc2, mp);
    const double p = 2.0 - 2.0 / gc.eta_inf;
    CHECK(rel_err(std::pow(r1b, p), std::pow(r1a, p) / 2.0) < 1e-10);
  }
  GrowthConstants bad;
  bad.eta_inf = 1.0;
  CHECK_THROWS_AS((void)compute_r1_r2(bad, ModelParams{}), std::invalid_argument);
}

TEST_CASE("D(r): worked values with the proof's +2 term") {
  GrowthConstants gc;
  gc.kappa2 = 0; gc.c0 = 1; gc.d0 = 1e-300; gc.eta0 = 1;
  gc.c_inf = 1; gc.d_inf = 1; gc.eta_inf = 2;
  ModelParams mp;  // T = gamma = d = 1 -> kappa' = 1/16
  CHECK(kappa_prime(mp) == doctest::Approx(1.0 / 16.0));
  CHECK(d_of_r(0.0, gc, mp) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(d_of_r(2.0, gc, mp) == doctest::Approx(4.5).epsilon(1e-14));
  // log route agrees with the direct route
  CHECK(rel_err(std::exp(log_d_of_r(2.0, gc, mp)), 4.5) < 1e-13);
}

TEST_CASE("D(r) is nondecreasing in r") {
  CounterRng rng(4, 2);
  GrowthConstants gc;
  gc.kappa2 = 0.5; gc.c0 = 2; gc.d0 = 1; gc.eta0 = 2; gc.c_inf = 1; gc.d_inf = 1; gc.eta_inf = 2;
  ModelParams mp;
  for (int i = 0; i < 200; ++i) {
    const double a = 10.0 * rng.uniform(), b = 10.0 * rng.uniform();
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(d_of_r(lo, gc, mp) <= d_of_r(hi, gc, mp) * (1 + 1e-15));
  }
}

TEST_CASE("alpha/beta: ratio, arithmetic, and the exact-vs-rounded envelope") {
  ModelParams mp;
  const auto ab = compute_alpha_beta(mp, 40.0);
  CHECK(ab.alpha == doctest::Approx(1.0 / 160.0).epsilon(1e-15));
  CHECK(ab.beta / ab.alpha == doctest::Approx(5.0 * kE4).epsilon(1e-13));
  // beta_exact <= beta whenever R2 >= 32 Td (exponent 2 + 5Td/R2 <= 4)
  CounterRng rng(5, 3);
  for (int i = 0; i < 200; ++i) {
    ModelParams m2;
    m2.gamma = 0.1 + 5.0 * rng.uniform();
    m2.T = 0.1 + 5.0 * rng.uniform();
    m2.n_particles = 1 + static_cast<int>(5 * rng.uniform());
    const double r2 = 32.0 * m2.T * m2.dim() * (1.0 + 10.0 * rng.uniform());
    const auto ab2 = compute_alpha_beta(m2, r2);
    CHECK(ab2.beta_exact <= ab2.beta * (1 + 1e-14));
  }
}

TEST_CASE("lambda0: constant-D limit gives the closed-form root") {
  GrowthConstants gc;
  gc.kappa2 = 0;
  gc.c0 = 1e-150;  // kills the r-dependent term at working scales
  gc.d0 = 1e-300;
  gc.eta0 = 1;
  gc.c_inf = 1; gc.d_inf = 1; gc.eta_inf = 2;
  ModelParams mp;  // D == 2/1 + 0.5 = 2.5
  const double beta = 0.7, rho_prime = 2.0, r2 = 50.0;
  const double lam0 = solve_lambda0(gc, mp, beta, rho_prime, r2);
  const double want = r2 * std::log(2.5) + r2 * std::log(beta * rho_prime + 1.0);
  CHECK(rel_err(lam0, want) < 1e-10);
  // the defining inequality holds at the root and fails just below it
  CHECK(lam0 >= r2 * log_d_of_r(lam0, gc, mp) + r2 * std::log(beta * rho_prime + 1.0));
  const double below = lam0 - std::max(1e-6, 1e-12 * lam0) * 10;
  CHECK(below < r2 * log_d_of_r(below, gc, mp) + r2 * std::log(beta * rho_prime + 1.0));
}

TEST_CASE("lambda0 is nondecreasing in beta*rho'") {
  GrowthConstants gc;
  gc.kappa2 = 1; gc.c0 = 2; gc.d0 = 1; gc.eta0 = 1; gc.c_inf = 2; gc.d_inf = 1; gc.eta_inf = 2;
  ModelParams mp;
  double prev = 0.0;
  for (const double brp : {0.1, 0.5, 1.0, 5.0, 20.0, 100.0}) {
    const double lam0 = solve_lambda0(gc, mp, brp, 1.0, 100.0);
    CHECK(lam0 >= prev);
    prev = lam0;
  }
}

TEST_CASE("full chain matches the high-precision goldens") {
  for (const auto& g : golden::kChainCases) {
    GrowthConstants gc;
    gc.kappa2 = g.kappa2; gc.c0 = g.c0; gc.d0 = g.d0;
    gc.c_inf = g.c_inf; gc.d_inf = g.d_inf; gc.eta0 = g.eta0; gc.eta_inf = g.eta_inf;
    ModelParams mp;
    mp.gamma = g.gamma; mp.T = g.T; mp.n_particles = g.N; mp.k_dim = g.k;
    const auto cert = build_certificate(gc, mp, g.rho_k, RhoProvenance::kUserSupplied);
    CHECK(rel_err(cert.c_gamma, g.c_gamma) < 1e-12);
    CHECK(rel_err(cert.r1, g.r1) < 1e-12);
    CHECK(rel_err(cert.r2, g.r2) < 1e-12);
    CHECK(rel_err(cert.alpha, g.alpha) < 1e-12);
    CHECK(rel_err(cert.beta, g.beta) < 1e-12);
    CHECK(rel_err(cert.beta_exact, g.beta_exact) < 1e-12);
    CHECK(rel_err(cert.rho_k_prime, g.rho_k_prime) < 1e-12);
    CHECK(rel_err(cert.lambda0, g.lambda0) < 1e-12);
    CHECK(rel_err(cert.lambda, g.lambda) < 1e-12);
    CHECK(rel_err(cert.zeta_sq, g.zeta_sq) < 1e-12);
    CHECK(rel_err(cert.sigma, g.sigma) < 1e-12);
  }
}

TEST_CASE("certificate invariants hold on every build") {
  CounterRng rng(6, 4);
  for (int i = 0; i < 50; ++i) {
    GrowthConstants gc;
    gc.kappa2 = 5.0 * rng.uniform();
    gc.c0 = 0.5 + 2.0 * rng.uniform();
    gc.d0 = 0.5 + 2.0 * rng.uniform();
    gc.c_inf = 0.5 + 2.0 * rng.uniform();
    gc.d_inf = 0.5 + 2.0 * rng.uniform();
    gc.eta0 = 0.5 + 4.0 * rng.uniform();
    gc.eta_inf = 1.5 + 4.0 * rng.uniform();
    ModelParams mp;
    mp.gamma = 0.2 + 3.0 * rng.uniform();
    mp.T = 0.2 + 2.0 * rng.uniform();
    const double rho_k = 0.1 + 5.0 * rng.uniform();
    const auto c = build_certificate(gc, mp, rho_k, RhoProvenance::kUserSupplied);
    CHECK(c.r2 == doctest::Approx(c.r1 + 32.0 * mp.T * mp.dim()));
    CHECK(c.zeta_sq == doctest::Approx(2.0 / (1.0 + c.beta * c.rho_k_prime)));
    CHECK(c.sigma == doctest::Approx(std::min(c.alpha / (2.0 * (1.0 + c.lambda)),
                                              mp.gamma / (1.0 + c.beta * c.rho_k_prime))));
    CHECK(c.lambda >= (c.beta * c.rho_k_prime + 1.0) * d_of_r(c.lambda0, gc, mp) * (1 - 1e-14));
    CHECK(c.lambda0 >=
          c.r2 * log_d_of_r(c.lambda0, gc, mp) + c.r2 * std::log1p(c.beta * c.rho_k_prime));
    CHECK(c.sigma > 0.0);
    CHECK(c.zeta_sq > 0.0);
    CHECK(c.zeta_sq <= 2.0);
    CHECK(c.sigma <= mp.gamma);
    // b = 1/R2 lands in (0, 1/(2Td)]
    CHECK(1.0 / c.r2 <= 1.0 / (2.0 * mp.T * mp.dim()));
  }
}

TEST_CASE("sigma is nonincreasing in rho_K") {
  GrowthConstants gc;
  gc.kappa2 = 1; gc.c0 = 2; gc.d0 = 1; gc.eta0 = 1; gc.c_inf = 2; gc.d_inf = 1; gc.eta_inf = 2;
  ModelParams mp;
  mp.gamma = 2.0;
  double prev = 1e300;
  for (const double rho : {0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
    const auto c = build_certificate(gc, mp, rho, RhoProvenance::kUserSupplied);
    CHECK(c.sigma <= prev * (1 + 1e-14));
    prev = c.sigma;
  }
}

TEST_CASE("villani certificates match the goldens") {
  for (const auto& g : golden::kVillaniCases) {
    ModelParams mp;
    mp.gamma = g.gamma; mp.T = g.T; mp.n_particles = g.d;
    const auto v = g.via_kappa
        ? villani_certificate_from_kappas(mp, g.m_or_kappa0, g.kappa0p, g.rho)
        : villani_certificate(mp, g.m_or_kappa0, g.rho);
    CHECK(rel_err(v.m_sq, g.m_sq) < 1e-12);
    CHECK(rel_err(v.zeta_sq, g.zeta_sq) < 1e-12);
    CHECK(rel_err(v.sigma, g.sigma) < 1e-12);
  }
}

TEST_CASE("villani: quadratic-well worked example (gamma = 2, T = 1, rho = T)") {
  ModelParams mp;
  mp.gamma = 2.0;
  const auto v = villani_certificate(mp, 1.0, 1.0);
  CHECK(rel_err(v.zeta_sq, 2.5 + std::sqrt(2.0)) < 1e-15);
  CHECK(rel_err(v.sigma, 0.5 / (2.5 + std::sqrt(2.0))) < 1e-15);
}

TEST_CASE("villani: kappa0 threshold is enforced by name") {
  ModelParams mp;
  mp.gamma = 2.0;
  const double cg = friction_constant(2.0);
  const double threshold = 2.0 / (2.0 * std::sqrt(1.0 + cg * cg));
  CHECK_THROWS_AS(
      (void)villani_certificate_from_kappas(mp, threshold * 1.01, 10.0, 1.0),
      std::invalid_argument);
  CHECK_NOTHROW((void)villani_certificate_from_kappas(mp, threshold, 10.0, 1.0));
}

TEST_CASE("villani: sigma -> 0 as rho -> infinity") {
  ModelParams mp;
  mp.gamma = 2.0;
  double prev = 1e300;
  for (const double rho : {1.0, 1e2, 1e4, 1e8}) {
    const auto v = villani_certificate(mp, 1.0, rho);
    CHECK(v.sigma < prev);
    prev = v.sigma;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("certificate JSON carries values, formulas, and provenance") {
  GrowthConstants gc;
  gc.kappa2 = 1; gc.c0 = 2; gc.d0 = 1; gc.eta0 = 1; gc.c_inf = 2; gc.d_inf = 1; gc.eta_inf = 2;
  ModelParams mp;
  const auto cert = build_certificate(gc, mp, 1.0, RhoProvenance::kSpectralEstimated);
  const auto j = cert.to_json();
  CHECK(j["sigma"]["value"].get<double>() == cert.sigma);
  CHECK(j["sigma"].contains("formula"));
  CHECK(j["rho_K"]["provenance"] == "spectral-estimated");
  // round-trip is byte-identical (keys are already canonically ordered)
  const auto reparsed = nlohmann::json::parse(j.dump());
  CHECK(reparsed.dump() == j.dump());
}
