#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "langcert/certificate.hpp"
#include "langcert/potential.hpp"

namespace langcert {

// Tensor grid of cell centers; one entry per axis. Supported: one or two
// axes (a 2-D phase grid for d = 1, or position-only studies in <= 2
// variables). Higher dimensions raise capability_error.
struct GridSpec {
  std::vector<std::pair<double, double>> ranges;
  std::vector<int> points;  // cells per axis, >= 16
  void validate() const;
};

using WeightFn = std::function<double(std::span<const double>)>;
using MaskFn = std::function<bool(std::span<const double>)>;

// The cell-centered no-flux discretization of the weighted Dirichlet form
//   form(f) = sum_edges w_face (f_i - f_j)^2 vol / h^2,
//   mass(f) = sum_nodes w_node f_i^2 vol,
// with nodes outside the mask dropped and edges crossing the mask boundary
// dropped (no-flux).
class DiscreteForm {
 public:
  static DiscreteForm assemble(const GridSpec& grid, const WeightFn& weight, const MaskFn& mask);

  int n_nodes() const { return static_cast<int>(mass_.size()); }
  bool connected() const;

  double form_energy(std::span<const double> f) const;  // f^T A f
  double mass_norm(std::span<const double> f) const;    // f^T M f
  double weighted_mean(std::span<const double> f) const;

  // form(f) / mass(f - mean). Any non-constant trial upper-bounds lambda1,
  // so 1/R(f) lower-bounds the Poincare constant. Throws on constant trials.
  double rayleigh_quotient(std::span<const double> f) const;

  // Smallest nonzero generalized eigenvalue of (A, M): deflated inverse
  // power iteration, conjugate-gradient inner solves, mean-zero projection;
  // converged when the Rayleigh quotient moves less than rtol.
  double smallest_nonzero_eigenvalue(double rtol = 1e-8, int max_iters = 200) const;

  // Dense eigensolver oracle; refuses more than 4096 nodes.
  double smallest_nonzero_eigenvalue_dense() const;

  // coordinates of kept node i (for building trial functions in tests)
  std::vector<double> node_coords(int i) const;

 private:
  struct Edge { int a, b; double cond; };
  std::vector<double> mass_;         // M diagonal
  std::vector<Edge> edges_;
  std::vector<std::vector<double>> coords_;
  void apply_form(std::span<const double> f, std::span<double> out) const;  // out = A f
};

struct PoincareResult {
  double rho = 0;      // 1/lambda1 at the finest level
  double lambda1 = 0;
  std::vector<int> nodes_by_level;
  std::vector<double> lambda1_by_level;
  std::vector<double> richardson_gaps;  // |lambda1(l) - lambda1(l-1)|
  bool connected = true;
};

// lambda1 of the weighted no-flux problem on `grid`, refined `refinements`
// times (each level doubles every axis). rho = 1/lambda1.
PoincareResult local_poincare_estimate(const GridSpec& grid, const WeightFn& weight,
                                       const MaskFn& mask, int refinements = 2,
                                       bool dense_oracle = false);

// Phase grid covering the center set K = {|v|^2 <= cap} x {U <= R2} for
// one-dimensional models (d = 1): axis 0 is position, axis 1 is velocity.
GridSpec phase_grid_for_center_set(const PotentialModel& model, const Certificate& cert,
                                   int points_per_axis);

// rho_K for a d = 1 model: eigensolve of the e^{-H/T}-weighted form masked
// to K. Throws capability_error above the supported dimension.
PoincareResult estimate_rho_k(const PotentialModel& model, const Certificate& cert,
                              int points_per_axis, int refinements = 2);

}  // namespace langcert
