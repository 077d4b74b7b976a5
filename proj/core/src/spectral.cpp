#include "langcert/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "langcert/errors.hpp"
#include "langcert/vec.hpp"

namespace langcert {

void GridSpec::validate() const {
  if (ranges.empty() || ranges.size() != points.size())
    throw std::invalid_argument("grid spec: ranges/points mismatch");
  if (ranges.size() > 2)
    throw capability_error("grid spec: only 1- or 2-axis grids are supported; supply rho_K");
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (!(ranges[i].first < ranges[i].second))
      throw std::invalid_argument("grid spec: empty range");
    if (points[i] < 16) throw std::invalid_argument("grid spec: need >= 16 points per axis");
  }
}

DiscreteForm DiscreteForm::assemble(const GridSpec& grid, const WeightFn& weight,
                                    const MaskFn& mask) {
  grid.validate();
  const int dims = static_cast<int>(grid.ranges.size());
  std::vector<double> h(dims);
  double vol = 1.0;
  for (int a = 0; a < dims; ++a) {
    h[a] = (grid.ranges[a].second - grid.ranges[a].first) / grid.points[a];
    vol *= h[a];
  }
  const int nx = grid.points[0];
  const int ny = dims == 2 ? grid.points[1] : 1;
  auto center = [&](int ix, int iy) {
    std::vector<double> c(dims);
    c[0] = grid.ranges[0].first + (ix + 0.5) * h[0];
    if (dims == 2) c[1] = grid.ranges[1].first + (iy + 0.5) * h[1];
    return c;
  };

  // nodes carrying less than 1e-15 of the peak weight are dropped from the
  // grid: the mass scaling needs weights bounded away from zero, and the
  // dropped cells shift lambda1 only at the level of the floor
  double w_max = 0.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      auto c = center(ix, iy);
      if (mask(c)) w_max = std::max(w_max, weight(c));
    }
  if (w_max <= 0.0) throw std::invalid_argument("discrete form: weight vanishes on the mask");
  const double w_floor = 1e-15 * w_max;

  std::vector<int> id(static_cast<std::size_t>(nx) * ny, -1);
  DiscreteForm form;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      auto c = center(ix, iy);
      if (!mask(c)) continue;
      const double w = weight(c);
      if (w < w_floor) continue;
      id[static_cast<std::size_t>(iy) * nx + ix] = form.n_nodes();
      form.mass_.push_back(w * vol);
      form.coords_.push_back(std::move(c));
    }
  }
  if (form.n_nodes() == 0) throw std::invalid_argument("discrete form: mask kept no nodes");

  auto midpoint_weight = [&](int ix, int iy, int axis) {
    auto c = center(ix, iy);
    c[axis] += 0.5 * h[axis];
    return weight(c);
  };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int a = id[static_cast<std::size_t>(iy) * nx + ix];
      if (a < 0) continue;
      if (ix + 1 < nx) {
        const int b = id[static_cast<std::size_t>(iy) * nx + ix + 1];
        if (b >= 0)
          form.edges_.push_back({a, b, midpoint_weight(ix, iy, 0) * vol / (h[0] * h[0])});
      }
      if (dims == 2 && iy + 1 < ny) {
        const int b = id[static_cast<std::size_t>(iy + 1) * nx + ix];
        if (b >= 0)
          form.edges_.push_back({a, b, midpoint_weight(ix, iy, 1) * vol / (h[1] * h[1])});
      }
    }
  }
  return form;
}

bool DiscreteForm::connected() const {
  const int n = n_nodes();
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges_) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) { seen[v] = 1; ++count; stack.push_back(v); }
  }
  return count == n;
}

void DiscreteForm::apply_form(std::span<const double> f, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& e : edges_) {
    const double diff = f[e.a] - f[e.b];
    out[e.a] += e.cond * diff;
    out[e.b] -= e.cond * diff;
  }
}

double DiscreteForm::form_energy(std::span<const double> f) const {
  double acc = 0.0;
  for (const auto& e : edges_) {
    const double diff = f[e.a] - f[e.b];
    acc += e.cond * diff * diff;
  }
  return acc;
}

double DiscreteForm::mass_norm(std::span<const double> f) const {
  double acc = 0.0;
  for (int i = 0; i < n_nodes(); ++i) acc += mass_[i] * f[i] * f[i];
  return acc;
}

double DiscreteForm::weighted_mean(std::span<const double> f) const {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n_nodes(); ++i) {
    num += mass_[i] * f[i];
    den += mass_[i];
  }
  return num / den;
}

double DiscreteForm::rayleigh_quotient(std::span<const double> f) const {
  const double mean = weighted_mean(f);
  std::vector<double> g(f.begin(), f.end());
  for (double& v : g) v -= mean;
  const double m = mass_norm(g);
  if (m <= 1e-28 * mass_norm(f) || m == 0.0)
    throw std::invalid_argument("rayleigh_quotient: trial function is constant on the grid");
  return form_energy(g) / m;
}

std::vector<double> DiscreteForm::node_coords(int i) const { return coords_[i]; }

double DiscreteForm::smallest_nonzero_eigenvalue(double rtol, int max_iters) const {
  const int n = n_nodes();
  // Symmetrized operator B = M^{-1/2} A M^{-1/2}; kernel direction M^{1/2} 1.
  std::vector<double> inv_sqrt_m(n), kernel(n);
  double knorm = 0.0;
  for (int i = 0; i < n; ++i) {
    inv_sqrt_m[i] = 1.0 / std::sqrt(mass_[i]);
    kernel[i] = std::sqrt(mass_[i]);
    knorm += kernel[i] * kernel[i];
  }
  knorm = std::sqrt(knorm);
  for (double& v : kernel) v /= knorm;

  auto project = [&](std::span<double> u) {
    const double c = dot(u, kernel);
    for (int i = 0; i < n; ++i) u[i] -= c * kernel[i];
  };
  auto apply_b = [&](std::span<const double> u, std::span<double> out) {
    std::vector<double> tmp(n);
    for (int i = 0; i < n; ++i) tmp[i] = inv_sqrt_m[i] * u[i];
    apply_form(tmp, out);
    for (int i = 0; i < n; ++i) out[i] *= inv_sqrt_m[i];
  };
  // deflated CG solve of B z = r on the mean-zero subspace
  auto solve = [&](std::span<const double> rhs, std::span<double> z) {
    std::vector<double> r(rhs.begin(), rhs.end()), p(r), bp(n);
    std::fill(z.begin(), z.end(), 0.0);
    project(r);
    p = r;
    double rr = dot(r, r);
    const double rr0 = rr;
    const int cg_max = std::max(200, 40 * static_cast<int>(std::sqrt(double(n))) * 8);
    for (int it = 0; it < cg_max && rr > 1e-24 * rr0; ++it) {
      apply_b(p, bp);
      project(bp);
      const double alpha = rr / dot(p, bp);
      for (int i = 0; i < n; ++i) z[i] += alpha * p[i];
      for (int i = 0; i < n; ++i) r[i] -= alpha * bp[i];
      const double rr_new = dot(r, r);
      for (int i = 0; i < n; ++i) p[i] = r[i] + (rr_new / rr) * p[i];
      rr = rr_new;
    }
    project(z);
  };

  // deterministic pseudo-random start, orthogonal to the kernel
  std::vector<double> u(n), bu(n), z(n);
  for (int i = 0; i < n; ++i) u[i] = std::sin(12.9898 * (i + 1)) * 0.5 + (i % 7) * 0.01;
  project(u);
  double unorm = norm(u);
  if (unorm == 0.0) throw numerics_error("eigensolve: degenerate start vector");
  for (double& v : u) v /= unorm;

  double lambda_prev = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    solve(u, z);
    const double zn = norm(z);
    if (!(zn > 0.0) || !std::isfinite(zn))
      throw numerics_error("eigensolve: inverse iteration broke down");
    for (int i = 0; i < n; ++i) u[i] = z[i] / zn;
    apply_b(u, bu);
    const double lambda = dot(u, bu);
    if (it > 0 && std::abs(lambda - lambda_prev) <= rtol * std::abs(lambda)) return lambda;
    lambda_prev = lambda;
  }
  throw numerics_error("eigensolve: inverse power iteration did not converge");
}

double DiscreteForm::smallest_nonzero_eigenvalue_dense() const {
  const int n = n_nodes();
  if (n > 4096)
    throw capability_error("dense eigensolver limited to 4096 nodes");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> ism(n);
  for (int i = 0; i < n; ++i) ism[i] = 1.0 / std::sqrt(mass_[i]);
  for (const auto& e : edges_) {
    B(e.a, e.a) += e.cond * ism[e.a] * ism[e.a];
    B(e.b, e.b) += e.cond * ism[e.b] * ism[e.b];
    B(e.a, e.b) -= e.cond * ism[e.a] * ism[e.b];
    B(e.b, e.a) -= e.cond * ism[e.a] * ism[e.b];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerics_error("dense eigensolver failed");
  return es.eigenvalues()(1);  // (0) is the constant mode
}

PoincareResult local_poincare_estimate(const GridSpec& grid, const WeightFn& weight,
                                       const MaskFn& mask, int refinements, bool dense_oracle) {
  if (refinements < 0) throw std::invalid_argument("refinements must be >= 0");
  PoincareResult res;
  GridSpec level = grid;
  for (int l = 0; l <= refinements; ++l) {
    auto form = DiscreteForm::assemble(level, weight, mask);
    if (l == 0) res.connected = form.connected();
    const double lam = dense_oracle ? form.smallest_nonzero_eigenvalue_dense()
                                    : form.smallest_nonzero_eigenvalue();
    res.nodes_by_level.push_back(form.n_nodes());
    res.lambda1_by_level.push_back(lam);
    if (l > 0)
      res.richardson_gaps.push_back(
          std::abs(res.lambda1_by_level[l] - res.lambda1_by_level[l - 1]));
    for (int& p : level.points) p *= 2;
  }
  res.lambda1 = res.lambda1_by_level.back();
  if (!(res.lambda1 > 0) && res.connected)
    throw numerics_error("poincare estimate: lambda1 is not positive");
  res.rho = res.lambda1 > 0 ? 1.0 / res.lambda1 : std::numeric_limits<double>::infinity();
  return res;
}

GridSpec phase_grid_for_center_set(const PotentialModel& model, const Certificate& cert,
                                   int points_per_axis) {
  if (model.dim() != 1)
    throw capability_error("phase grids are built for d = 1 models only; supply rho_K");
  const double vcap = std::sqrt(cert.velocity_cap);
  // bracket {U <= R2} by marching outward from the origin
  double lo = 0.0, hi = 0.0, step = 0.5;
  std::vector<double> x(1);
  auto u_at = [&](double q) { x[0] = q; return model.value(x); };
  while (u_at(hi) <= cert.r2 && hi < 1e12) hi += step, step *= 1.25;
  step = 0.5;
  while (u_at(lo) <= cert.r2 && lo > -1e12) lo -= step, step *= 1.25;
  GridSpec g;
  g.ranges = {{lo, hi}, {-vcap * 1.02, vcap * 1.02}};

  // The grid covers all of K, but e^{-H/T} concentrates the retained mass in
  // {H <= 34.5 T} (the assembly floor). Scale the point budget so the active
  // band keeps its nominal resolution; the empty tail cells are dropped at
  // assembly and cost nothing.
  const double h_active = 34.5 * cert.params.T;
  double alo = 0.0, ahi = 0.0;
  step = 0.25;
  while (u_at(ahi) <= h_active && ahi < hi) ahi += step, step *= 1.1;
  step = 0.25;
  while (u_at(alo) <= h_active && alo > lo) alo -= step, step *= 1.1;
  const double ratio_x = (hi - lo) / std::max(ahi - alo, 1e-12);
  const double ratio_v = 2.0 * vcap * 1.02 / std::max(2.0 * std::sqrt(2.0 * h_active), 1e-12);
  auto scaled = [&](double ratio) {
    const double want = points_per_axis * std::max(ratio, 1.0);
    return static_cast<int>(std::min(want, 1024.0));
  };
  g.points = {scaled(ratio_x), scaled(ratio_v)};
  return g;
}

PoincareResult estimate_rho_k(const PotentialModel& model, const Certificate& cert,
                              int points_per_axis, int refinements) {
  const GridSpec grid = phase_grid_for_center_set(model, cert, points_per_axis);
  const double T = cert.params.T;
  WeightFn weight = [&model, T](std::span<const double> c) {
    std::vector<double> x{c[0]};
    return std::exp(-(0.5 * c[1] * c[1] + model.value(x)) / T);
  };
  MaskFn mask = [&model, &cert](std::span<const double> c) {
    std::vector<double> x{c[0]};
    const double u = model.value(x);
    return c[1] * c[1] <= cert.velocity_cap && u <= cert.energy_cap;
  };
  return local_poincare_estimate(grid, weight, mask, refinements);
}

}  // namespace langcert
