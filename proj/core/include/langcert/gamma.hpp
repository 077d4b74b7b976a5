#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "langcert/certificate.hpp"
#include "langcert/potential.hpp"

namespace langcert {

// A smooth test observable on phase space. `eval` is mandatory; the analytic
// derivative callbacks are optional and, when present, are used by the
// closed-form routes (the definitional routes stay finite-difference only so
// the two stay independent).
struct ScalarField {
  std::string name;
  std::function<double(const PhasePoint&)> eval;

  // fills d/dx and d/dv (each length d)
  std::function<void(const PhasePoint&, std::span<double>, std::span<double>)> grad;
  // row-major d x d second-derivative blocks
  std::function<void(const PhasePoint&, std::span<double>)> hess_vv;  // d2/dv_i dv_j
  std::function<void(const PhasePoint&, std::span<double>)> hess_xv;  // d2/dx_i dv_j

  bool has_grad() const { return static_cast<bool>(grad); }
  bool has_hess() const { return static_cast<bool>(hess_vv) && static_cast<bool>(hess_xv); }
};

// Finite-difference step sizes. Steps are scaled per coordinate by
// max(1, |coordinate|). h_nested drives every stencil inside the
// definitional iterated forms, where difference noise propagates through two
// levels of differencing and a larger step is needed to stay above roundoff.
struct StencilConfig {
  double h_x = 1e-4;
  double h_v = 1e-4;
  double h_nested = 1e-3;  // Richardson pair (h, 2h); noise floor ~3e-6, truncation residual ~h^4
};

struct GammaInequalityReport {
  std::size_t n_points = 0;
  double min_slack = 1e300;  // min over points of LHS - RHS
  PhasePoint argmin;
  bool pass = false;
};

class GammaEngine {
 public:
  GammaEngine(const PotentialModel& model, const ModelParams& mp, StencilConfig cfg = {});

  double friction() const { return c_; }

  // Lf = v.grad_x f - gamma v.grad_v f - grad U.grad_v f + gamma T lap_v f.
  // Uses analytic field derivatives when asked and available, else central
  // differences.
  double apply_generator(const ScalarField& f, const PhasePoint& p, bool prefer_analytic = true) const;

  // L*f = -v.grad_x f - gamma v.grad_v f + grad U.grad_v f + gamma T lap_v f.
  double apply_adjoint(const ScalarField& f, const PhasePoint& p, bool prefer_analytic = true) const;

  std::vector<double> y_op(const ScalarField& f, const PhasePoint& p) const;  // grad_v f
  std::vector<double> z_op(const ScalarField& f, const PhasePoint& p) const;  // grad_x f - c grad_v f

  // Gamma(f) = gamma T |grad_v f|^2.
  double gamma_form(const ScalarField& f, const PhasePoint& p) const;
  // The defining combination (1/2)[L f^2 - 2 f L f], by finite differences.
  double gamma_form_by_definition(const ScalarField& f, const PhasePoint& p) const;

  enum class Direction { kY, kZ };

  // Iterated form by its definition, (1/2)[L G(f) - 2 G(f, Lf)] with
  // G in {|Yf|^2, |Zf|^2}, all by nested central differences on `eval`,
  // evaluated at h_nested and h_nested/2 and Richardson-combined. If
  // `quality` is non-null it receives the step-halving disagreement.
  double gamma2_definitional(Direction dir, const ScalarField& f, const PhasePoint& p,
                             double* quality = nullptr) const;

  // Closed forms:
  //   Gamma2_Y(f) = gamma T |grad_v(Yf)|^2 - Yf.Zf + (gamma - c) |Yf|^2
  //   Gamma2_Z(f) = gamma T |grad_v(Zf)|^2 + c |Zf|^2 + c(c-gamma) Yf.Zf
  //                 + (Hess U) Yf . Zf
  double gamma2_closed_form(Direction dir, const ScalarField& f, const PhasePoint& p) const;

  // R(x, y) = (2/gamma)|y|^2 + |Hess U(x) y|^2 / (2 gamma).
  double r_term(std::span<const double> x, std::span<const double> y) const;

  // Pointwise check of
  //   Gamma2_Y + Gamma2_Z >= gamma T|grad_v Yf|^2 + gamma T|grad_v Zf|^2
  //                          + (gamma/2)|Zf|^2 - R(x, Yf)
  // using the closed forms on the left.
  GammaInequalityReport check_gamma3_inequality(const ScalarField& f,
                                                std::span<const PhasePoint> points,
                                                double tol = 1e-7) const;

  const PotentialModel& model() const { return model_; }
  const ModelParams& params() const { return mp_; }
  const StencilConfig& stencil() const { return cfg_; }

 private:
  struct Derivs {
    std::vector<double> gx, gv;
    double lap_v = 0;
  };
  Derivs fd_derivs(const ScalarField& f, const PhasePoint& p, double hx, double hv) const;
  std::vector<double> fd_grad_v(const std::function<double(const PhasePoint&)>& f,
                                const PhasePoint& p, double h) const;
  std::vector<double> fd_grad_x(const std::function<double(const PhasePoint&)>& f,
                                const PhasePoint& p, double h) const;
  double generator_fd(const std::function<double(const PhasePoint&)>& f, const PhasePoint& p,
                      double hx, double hv) const;
  double gamma2_def_at_step(Direction dir, const ScalarField& f, const PhasePoint& p,
                            double h) const;

  const PotentialModel& model_;
  ModelParams mp_;
  StencilConfig cfg_;
  double c_;  // c(gamma)
};

// The documented, reproducible field library used by the identity suites:
// low-degree polynomials in (x, v), Gaussian-damped products and
// trigonometric fields, all with analytic derivatives attached.
std::vector<ScalarField> standard_test_fields(int d);

}  // namespace langcert
