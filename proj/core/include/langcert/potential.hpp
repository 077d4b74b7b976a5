#pragma once

#include <span>
#include <string>
#include <vector>

namespace langcert {

// Position-velocity pair on the state space O x R^d, d = N*k.
// Points outside O are representable; valid() reports domain membership
// with respect to a given potential.
struct PhasePoint {
  std::vector<double> x;
  std::vector<double> v;

  int dim() const { return static_cast<int>(x.size()); }
};

enum class PotentialFamily { kSingleWell, kDoubleWell, kSingularPair };

// Parameters of the singular family
//   U(x) = sum_i A |x_i|^a + sum_{i<j} B |x_i - x_j|^{-b},
// with A,B > 0, a an even integer >= 2, b > 0. For k = 1 the domain is the
// ordered cone x_1 < x_2 < ... < x_N (the `ordered` flag is mandatory then).
struct SingularPairParams {
  int n_particles = 1;        // N >= 1
  int k_dim = 1;              // k >= 1
  double well_amplitude = 1;  // A
  double pair_amplitude = 1;  // B
  int well_exponent = 2;      // a
  double pair_exponent = 1;   // b
  bool ordered = false;
};

// Pair separations below this are treated as coincident (value +inf);
// force scales there are far beyond anything representable.
inline constexpr double kCoincidenceGuard = 1e-12;

class PotentialModel {
 public:
  static PotentialModel single_well(int n_particles, int k_dim);
  static PotentialModel double_well(int n_particles, int k_dim);
  static PotentialModel singular_pair(const SingularPairParams& params);

  PotentialFamily family() const { return family_; }
  int n_particles() const { return n_particles_; }
  int k_dim() const { return k_dim_; }
  int dim() const { return n_particles_ * k_dim_; }
  const SingularPairParams& pair_params() const;  // SingularPair only
  std::string family_name() const;

  bool in_domain(std::span<const double> x) const;

  // U(x); +inf exactly when x is outside O. Throws std::invalid_argument on
  // a dimension mismatch.
  double value(std::span<const double> x) const;

  // Analytic gradient / Hessian-vector product. Throw std::domain_error
  // outside O.
  std::vector<double> gradient(std::span<const double> x) const;
  std::vector<double> hessian_vec(std::span<const double> x, std::span<const double> y) const;

  // Gradient lower bound for the singular family,
  //   (Aa/2N^{3/2}) sum_i |x_i|^{a-1} + (Bb/2N^{7/2}) sum_{i<j} |x_i-x_j|^{-b-1}
  //     - Aa/sqrt(N) - Bb N^{b+5/2},
  // valid pointwise on O: |grad U| >= this. Throws std::invalid_argument for
  // other families.
  double gradient_lower_bound(std::span<const double> x) const;

  // Hessian operator-norm upper bound for the singular family,
  //   Aa(a-1)k sum_i |x_i|^{a-2} + 4Bb(b+3)k sum_{i<j} |x_i-x_j|^{-b-2}.
  double hessian_upper_bound(std::span<const double> x) const;

  bool point_valid(const PhasePoint& p) const {
    return p.x.size() == p.v.size() && p.dim() == dim() && in_domain(p.x);
  }

  double hamiltonian(const PhasePoint& p) const;

 private:
  PotentialModel(PotentialFamily f, int n, int k) : family_(f), n_particles_(n), k_dim_(k) {}

  void check_dim(std::span<const double> x) const;

  PotentialFamily family_;
  int n_particles_;
  int k_dim_;
  SingularPairParams pair_{};
};

// The constants of the growth condition on the potential:
//   |Hess U(x) y| <= (1/(16Td)) |grad U(x)|^2 |y| + kappa2 |y|
//   c_inf U^{2-2/eta_inf} - d_inf <= |grad U|^2 <= c0 U^{2+2/eta0} + d0.
struct GrowthConstants {
  double kappa2 = 0;
  double c0 = 1;
  double d0 = 1;
  double c_inf = 1;
  double d_inf = 1;
  double eta0 = 1;    // in (-inf,-1) u (0,inf)
  double eta_inf = 2; // > 1
  void validate() const;  // throws std::invalid_argument on a bad range
};

// Valid constant sets for the two polynomial families. The quadratic well
// has |grad U|^2 = 2U and identity Hessian; the quartic double well needs a
// temperature/dimension-dependent kappa2 (maximized numerically over the
// radial variable).
GrowthConstants single_well_growth_constants();
GrowthConstants double_well_growth_constants(double T, int d);

struct HessianBoundReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_violation = -1e300;        // max over samples of LHS - RHS
  double max_hessian_to_gradsq_ratio = 0;  // diagnostic: |Hess U y| / |grad U|^2
  std::vector<double> worst_x;
  bool pass = false;
};

struct GradientGrowthReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_lower_violation = -1e300;  // max of (c_inf U^{..} - d_inf) - |grad U|^2
  double max_upper_violation = -1e300;  // max of |grad U|^2 - (c0 U^{..} + d0)
  std::vector<double> worst_x;
  bool pass = false;
};

struct AppendixBoundReport {
  std::size_t checked = 0;
  double max_gradient_violation = -1e300;  // lower bound minus |grad U|
  double max_hessian_violation = -1e300;   // |Hess U y| minus upper bound
  bool pass = false;
};

// Verifies |Hess U(x) y| <= (1/(16Td)) |grad U|^2 |y| + kappa2 |y| at each
// sample (x paired with a direction y). Out-of-domain samples are skipped
// and counted. pass == (max_violation <= tol).
HessianBoundReport check_growth_bound_1(const PotentialModel& model, const GrowthConstants& gc,
                                        double T, int d,
                                        std::span<const std::vector<double>> xs,
                                        std::span<const std::vector<double>> ys,
                                        double tol = 1e-9);

// Verifies the two-sided gradient growth bound pointwise on samples.
GradientGrowthReport check_growth_bound_2(const PotentialModel& model, const GrowthConstants& gc,
                                          std::span<const std::vector<double>> xs,
                                          double tol = 1e-9);

// Verifies |grad U| >= gradient_lower_bound and |Hess U y| <= hessian_upper_bound
// (on the paired unit directions) for the singular family.
AppendixBoundReport check_appendix_bounds(const PotentialModel& model,
                                          std::span<const std::vector<double>> xs,
                                          std::span<const std::vector<double>> ys,
                                          double tol = 1e-9);

}  // namespace langcert
