#include "langcert/gamma.hpp"

#include <cmath>
#include <stdexcept>

#include "langcert/vec.hpp"

namespace langcert {

namespace {
// smooth in the coordinate: nested stencils differentiate through the inner
// truncation error, so any kink in the step choice would show up there
double scaled_step(double h, double coord) { return h * std::sqrt(1.0 + coord * coord); }
}  // namespace

GammaEngine::GammaEngine(const PotentialModel& model, const ModelParams& mp, StencilConfig cfg)
    : model_(model), mp_(mp), cfg_(cfg), c_(friction_constant(mp.gamma)) {
  if (cfg_.h_x <= 0 || cfg_.h_v <= 0 || cfg_.h_nested <= 0)
    throw std::invalid_argument("stencil steps must be positive");
  if (model.dim() != mp.dim())
    throw std::invalid_argument("model and params disagree on dimension");
}

std::vector<double> GammaEngine::fd_grad_v(const std::function<double(const PhasePoint&)>& f,
                                           const PhasePoint& p, double h) const {
  const int d = p.dim();
  std::vector<double> g(d);
  PhasePoint q = p;
  for (int i = 0; i < d; ++i) {
    const double hi = scaled_step(h, p.v[i]);
    q.v[i] = p.v[i] + hi;
    const double fp = f(q);
    q.v[i] = p.v[i] - hi;
    const double fm = f(q);
    q.v[i] = p.v[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

std::vector<double> GammaEngine::fd_grad_x(const std::function<double(const PhasePoint&)>& f,
                                           const PhasePoint& p, double h) const {
  const int d = p.dim();
  std::vector<double> g(d);
  PhasePoint q = p;
  for (int i = 0; i < d; ++i) {
    const double hi = scaled_step(h, p.x[i]);
    q.x[i] = p.x[i] + hi;
    const double fp = f(q);
    q.x[i] = p.x[i] - hi;
    const double fm = f(q);
    q.x[i] = p.x[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

GammaEngine::Derivs GammaEngine::fd_derivs(const ScalarField& f, const PhasePoint& p, double hx,
                                           double hv) const {
  const int d = p.dim();
  Derivs out;
  out.gx.resize(d);
  out.gv.resize(d);
  const double f0 = f.eval(p);
  PhasePoint q = p;
  for (int i = 0; i < d; ++i) {
    const double hi = scaled_step(hx, p.x[i]);
    q.x[i] = p.x[i] + hi;
    const double fp = f.eval(q);
    q.x[i] = p.x[i] - hi;
    const double fm = f.eval(q);
    q.x[i] = p.x[i];
    out.gx[i] = (fp - fm) / (2.0 * hi);
  }
  for (int i = 0; i < d; ++i) {
    const double hi = scaled_step(hv, p.v[i]);
    q.v[i] = p.v[i] + hi;
    const double fp = f.eval(q);
    q.v[i] = p.v[i] - hi;
    const double fm = f.eval(q);
    q.v[i] = p.v[i];
    out.gv[i] = (fp - fm) / (2.0 * hi);
    out.lap_v += (fp - 2.0 * f0 + fm) / (hi * hi);
  }
  return out;
}

double GammaEngine::generator_fd(const std::function<double(const PhasePoint&)>& f,
                                 const PhasePoint& p, double hx, double hv) const {
  const int d = p.dim();
  const auto gradU = model_.gradient(p.x);
  const double f0 = f(p);
  double acc = 0.0;
  PhasePoint q = p;
  for (int i = 0; i < d; ++i) {
    const double hi = scaled_step(hx, p.x[i]);
    q.x[i] = p.x[i] + hi;
    const double fp = f(q);
    q.x[i] = p.x[i] - hi;
    const double fm = f(q);
    q.x[i] = p.x[i];
    acc += p.v[i] * (fp - fm) / (2.0 * hi);
  }
  for (int i = 0; i < d; ++i) {
    const double hi = scaled_step(hv, p.v[i]);
    q.v[i] = p.v[i] + hi;
    const double fp = f(q);
    q.v[i] = p.v[i] - hi;
    const double fm = f(q);
    q.v[i] = p.v[i];
    const double dv = (fp - fm) / (2.0 * hi);
    acc += (-mp_.gamma * p.v[i] - gradU[i]) * dv;
    acc += mp_.gamma * mp_.T * (fp - 2.0 * f0 + fm) / (hi * hi);
  }
  return acc;
}

double GammaEngine::apply_generator(const ScalarField& f, const PhasePoint& p,
                                    bool prefer_analytic) const {
  if (!model_.point_valid(p)) throw std::domain_error("apply_generator: point outside state space");
  const int d = p.dim();
  if (prefer_analytic && f.has_grad()) {
    std::vector<double> gx(d), gv(d);
    f.grad(p, gx, gv);
    const auto gradU = model_.gradient(p.x);
    double lap = 0.0;
    if (f.hess_vv) {
      std::vector<double> hvv(d * d);
      f.hess_vv(p, hvv);
      for (int i = 0; i < d; ++i) lap += hvv[i * d + i];
    } else {
      lap = fd_derivs(f, p, cfg_.h_x, cfg_.h_v).lap_v;
    }
    return dot(p.v, gx) - mp_.gamma * dot(p.v, gv) - dot(gradU, gv) + mp_.gamma * mp_.T * lap;
  }
  return generator_fd(f.eval, p, cfg_.h_x, cfg_.h_v);
}

double GammaEngine::apply_adjoint(const ScalarField& f, const PhasePoint& p,
                                  bool prefer_analytic) const {
  if (!model_.point_valid(p)) throw std::domain_error("apply_adjoint: point outside state space");
  const int d = p.dim();
  std::vector<double> gx(d), gv(d);
  double lap = 0.0;
  if (prefer_analytic && f.has_grad()) {
    f.grad(p, gx, gv);
    if (f.hess_vv) {
      std::vector<double> hvv(d * d);
      f.hess_vv(p, hvv);
      for (int i = 0; i < d; ++i) lap += hvv[i * d + i];
    } else {
      lap = fd_derivs(f, p, cfg_.h_x, cfg_.h_v).lap_v;
    }
  } else {
    Derivs der = fd_derivs(f, p, cfg_.h_x, cfg_.h_v);
    gx = std::move(der.gx);
    gv = std::move(der.gv);
    lap = der.lap_v;
  }
  const auto gradU = model_.gradient(p.x);
  return -dot(p.v, gx) - mp_.gamma * dot(p.v, gv) + dot(gradU, gv) + mp_.gamma * mp_.T * lap;
}

std::vector<double> GammaEngine::y_op(const ScalarField& f, const PhasePoint& p) const {
  if (!model_.point_valid(p)) throw std::domain_error("y_op: point outside state space");
  const int d = p.dim();
  if (f.has_grad()) {
    std::vector<double> gx(d), gv(d);
    f.grad(p, gx, gv);
    return gv;
  }
  return fd_grad_v(f.eval, p, cfg_.h_v);
}

std::vector<double> GammaEngine::z_op(const ScalarField& f, const PhasePoint& p) const {
  if (!model_.point_valid(p)) throw std::domain_error("z_op: point outside state space");
  const int d = p.dim();
  std::vector<double> gx(d), gv(d);
  if (f.has_grad()) {
    f.grad(p, gx, gv);
  } else {
    gx = fd_grad_x(f.eval, p, cfg_.h_x);
    gv = fd_grad_v(f.eval, p, cfg_.h_v);
  }
  for (int i = 0; i < d; ++i) gx[i] -= c_ * gv[i];
  return gx;
}

double GammaEngine::gamma_form(const ScalarField& f, const PhasePoint& p) const {
  const auto yf = y_op(f, p);
  return mp_.gamma * mp_.T * norm2(yf);
}

double GammaEngine::gamma_form_by_definition(const ScalarField& f, const PhasePoint& p) const {
  if (!model_.point_valid(p)) throw std::domain_error("gamma_form: point outside state space");
  auto f2 = [&f](const PhasePoint& q) { const double v = f.eval(q); return v * v; };
  const double lf2 = generator_fd(f2, p, cfg_.h_nested, cfg_.h_nested);
  const double lf = generator_fd(f.eval, p, cfg_.h_nested, cfg_.h_nested);
  return 0.5 * (lf2 - 2.0 * f.eval(p) * lf);
}

double GammaEngine::gamma2_def_at_step(Direction dir, const ScalarField& f, const PhasePoint& p,
                                       double h) const {
  // the D-form |Df|^2 as a plain field, everything by differences on eval
  auto d_of = [&](const PhasePoint& q) -> std::vector<double> {
    if (dir == Direction::kY) return fd_grad_v(f.eval, q, h);
    auto gx = fd_grad_x(f.eval, q, h);
    const auto gv = fd_grad_v(f.eval, q, h);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] -= c_ * gv[i];
    return gx;
  };
  auto form_field = [&](const PhasePoint& q) { return norm2(d_of(q)); };
  auto lf_field = [&](const PhasePoint& q) { return generator_fd(f.eval, q, h, h); };

  const double l_of_form = generator_fd(form_field, p, h, h);
  const auto df = d_of(p);
  std::vector<double> dlf;
  if (dir == Direction::kY) {
    dlf = fd_grad_v(lf_field, p, h);
  } else {
    dlf = fd_grad_x(lf_field, p, h);
    const auto gv = fd_grad_v(lf_field, p, h);
    for (std::size_t i = 0; i < dlf.size(); ++i) dlf[i] -= c_ * gv[i];
  }
  return 0.5 * l_of_form - dot(df, dlf);
}

double GammaEngine::gamma2_definitional(Direction dir, const ScalarField& f, const PhasePoint& p,
                                        double* quality) const {
  if (!model_.point_valid(p))
    throw std::domain_error("gamma2_definitional: point outside state space");
  // second-order stencils at h and 2h give both the step-halving quality
  // estimate and a Richardson combination that cancels the h^2 term. The
  // coarse step sits on the noisy side: differencing noise grows as
  // eps/h^3 through the nesting, so extrapolation must lean on the finer
  // evaluation, not refine below it.
  const double v_h = gamma2_def_at_step(dir, f, p, cfg_.h_nested);
  const double v_2h = gamma2_def_at_step(dir, f, p, 2.0 * cfg_.h_nested);
  if (quality) *quality = std::abs(v_h - v_2h);
  return (4.0 * v_h - v_2h) / 3.0;
}

double GammaEngine::gamma2_closed_form(Direction dir, const ScalarField& f,
                                       const PhasePoint& p) const {
  if (!model_.point_valid(p))
    throw std::domain_error("gamma2_closed_form: point outside state space");
  const int d = p.dim();
  std::vector<double> gx(d), gv(d), hvv(d * d), hxv(d * d);
  if (f.has_grad()) {
    f.grad(p, gx, gv);
  } else {
    gx = fd_grad_x(f.eval, p, cfg_.h_x);
    gv = fd_grad_v(f.eval, p, cfg_.h_v);
  }
  if (f.has_hess()) {
    f.hess_vv(p, hvv);
    f.hess_xv(p, hxv);
  } else {
    // difference the (analytic or FD) gradient fields; nested step
    PhasePoint q = p;
    std::vector<double> gxp(d), gvp(d), gxm(d), gvm(d);
    auto fill_grad = [&](const PhasePoint& at, std::vector<double>& ox, std::vector<double>& ov) {
      if (f.has_grad()) f.grad(at, ox, ov);
      else {
        ox = fd_grad_x(f.eval, at, cfg_.h_nested);
        ov = fd_grad_v(f.eval, at, cfg_.h_nested);
      }
    };
    for (int j = 0; j < d; ++j) {
      const double hj = scaled_step(cfg_.h_nested, p.v[j]);
      q.v[j] = p.v[j] + hj;
      fill_grad(q, gxp, gvp);
      q.v[j] = p.v[j] - hj;
      fill_grad(q, gxm, gvm);
      q.v[j] = p.v[j];
      for (int i = 0; i < d; ++i) {
        hvv[i * d + j] = (gvp[i] - gvm[i]) / (2.0 * hj);
        hxv[i * d + j] = (gxp[i] - gxm[i]) / (2.0 * hj);
      }
    }
  }
  std::vector<double> yf = gv;
  std::vector<double> zf = gx;
  for (int i = 0; i < d; ++i) zf[i] -= c_ * gv[i];
  const double yz = dot(yf, zf);
  const double gT = mp_.gamma * mp_.T;
  if (dir == Direction::kY) {
    double fro = 0.0;
    for (double h : hvv) fro += h * h;
    return gT * fro - yz + (mp_.gamma - c_) * norm2(yf);
  }
  double fro = 0.0;
  for (int i = 0; i < d * d; ++i) {
    const double entry = hxv[i] - c_ * hvv[i];
    fro += entry * entry;
  }
  const auto hy = model_.hessian_vec(p.x, yf);
  return gT * fro + c_ * norm2(zf) + c_ * (c_ - mp_.gamma) * yz + dot(hy, zf);
}

double GammaEngine::r_term(std::span<const double> x, std::span<const double> y) const {
  const auto hy = model_.hessian_vec(x, y);
  return 2.0 / mp_.gamma * norm2(y) + norm2(hy) / (2.0 * mp_.gamma);
}

GammaInequalityReport GammaEngine::check_gamma3_inequality(const ScalarField& f,
                                                           std::span<const PhasePoint> points,
                                                           double tol) const {
  GammaInequalityReport rep;
  const int d = model_.dim();
  for (const auto& p : points) {
    const double lhs = gamma2_closed_form(Direction::kY, f, p) +
                       gamma2_closed_form(Direction::kZ, f, p);
    // the two Frobenius terms, recomputed from the same derivative data
    std::vector<double> gx(d), gv(d), hvv(d * d), hxv(d * d);
    if (f.has_grad() && f.has_hess()) {
      f.grad(p, gx, gv);
      f.hess_vv(p, hvv);
      f.hess_xv(p, hxv);
    } else {
      gx = fd_grad_x(f.eval, p, cfg_.h_x);
      gv = fd_grad_v(f.eval, p, cfg_.h_v);
      // same nested differencing as the closed form
      PhasePoint q = p;
      for (int j = 0; j < d; ++j) {
        const double hj = scaled_step(cfg_.h_nested, p.v[j]);
        q.v[j] = p.v[j] + hj;
        auto gxp = fd_grad_x(f.eval, q, cfg_.h_nested);
        auto gvp = fd_grad_v(f.eval, q, cfg_.h_nested);
        q.v[j] = p.v[j] - hj;
        auto gxm = fd_grad_x(f.eval, q, cfg_.h_nested);
        auto gvm = fd_grad_v(f.eval, q, cfg_.h_nested);
        q.v[j] = p.v[j];
        for (int i = 0; i < d; ++i) {
          hvv[i * d + j] = (gvp[i] - gvm[i]) / (2.0 * hj);
          hxv[i * d + j] = (gxp[i] - gxm[i]) / (2.0 * hj);
        }
      }
    }
    std::vector<double> yf = gv, zf = gx;
    for (int i = 0; i < d; ++i) zf[i] -= c_ * gv[i];
    double fro_y = 0.0, fro_z = 0.0;
    for (int i = 0; i < d * d; ++i) {
      fro_y += hvv[i] * hvv[i];
      const double e = hxv[i] - c_ * hvv[i];
      fro_z += e * e;
    }
    const double gT = mp_.gamma * mp_.T;
    const double rhs = gT * fro_y + gT * fro_z + 0.5 * mp_.gamma * norm2(zf) -
                       r_term(p.x, yf);
    const double slack = lhs - rhs;
    if (slack < rep.min_slack) {
      rep.min_slack = slack;
      rep.argmin = p;
    }
    ++rep.n_points;
  }
  rep.pass = rep.n_points > 0 && rep.min_slack >= -tol;
  return rep;
}

namespace {

void zero_fill(std::span<double> s) { for (double& v : s) v = 0.0; }

}  // namespace

std::vector<ScalarField> standard_test_fields(int d) {
  if (d < 1) throw std::invalid_argument("standard_test_fields: d must be >= 1");
  const int last = d - 1;
  std::vector<ScalarField> fields;

  {
    ScalarField f;
    f.name = "x1";
    f.eval = [](const PhasePoint& p) { return p.x[0]; };
    f.grad = [](const PhasePoint&, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv); gx[0] = 1.0;
    };
    f.hess_vv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); };
    f.hess_xv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "v1";
    f.eval = [](const PhasePoint& p) { return p.v[0]; };
    f.grad = [](const PhasePoint&, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv); gv[0] = 1.0;
    };
    f.hess_vv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); };
    f.hess_xv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "x1v1";
    f.eval = [](const PhasePoint& p) { return p.x[0] * p.v[0]; };
    f.grad = [](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv); gx[0] = p.v[0]; gv[0] = p.x[0];
    };
    f.hess_vv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); };
    f.hess_xv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); h[0] = 1.0; };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "quadratic";
    f.eval = [](const PhasePoint& p) {
      return 0.5 * (norm2(p.x) + norm2(p.v));
    };
    f.grad = [d](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      for (int i = 0; i < d; ++i) { gx[i] = p.x[i]; gv[i] = p.v[i]; }
    };
    f.hess_vv = [d](const PhasePoint&, std::span<double> h) {
      zero_fill(h);
      for (int i = 0; i < d; ++i) h[i * d + i] = 1.0;
    };
    f.hess_xv = [](const PhasePoint&, std::span<double> h) { zero_fill(h); };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "cubic";
    f.eval = [last](const PhasePoint& p) {
      return p.x[0] * p.x[0] * p.x[0] / 3.0 + p.x[0] * p.v[last] * p.v[last];
    };
    f.grad = [last](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv);
      gx[0] = p.x[0] * p.x[0] + p.v[last] * p.v[last];
      gv[last] = 2.0 * p.x[0] * p.v[last];
    };
    f.hess_vv = [d, last](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[last * d + last] = 2.0 * p.x[0];
    };
    f.hess_xv = [d, last](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0 * d + last] = 2.0 * p.v[last];
    };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "gauss";
    auto val = [](const PhasePoint& p) {
      return std::exp(-0.5 * (norm2(p.x) + norm2(p.v)));
    };
    f.eval = val;
    f.grad = [val, d](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      const double e = val(p);
      for (int i = 0; i < d; ++i) { gx[i] = -p.x[i] * e; gv[i] = -p.v[i] * e; }
    };
    f.hess_vv = [val, d](const PhasePoint& p, std::span<double> h) {
      const double e = val(p);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          h[i * d + j] = (p.v[i] * p.v[j] - (i == j ? 1.0 : 0.0)) * e;
    };
    f.hess_xv = [val, d](const PhasePoint& p, std::span<double> h) {
      const double e = val(p);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) h[i * d + j] = p.x[i] * p.v[j] * e;
    };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "gauss_xv";
    auto damp = [](const PhasePoint& p) { return std::exp(-0.5 * norm2(p.v)); };
    f.eval = [damp](const PhasePoint& p) { return p.x[0] * damp(p); };
    f.grad = [damp, d](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      const double e = damp(p);
      zero_fill(gx);
      gx[0] = e;
      for (int i = 0; i < d; ++i) gv[i] = -p.x[0] * p.v[i] * e;
    };
    f.hess_vv = [damp, d](const PhasePoint& p, std::span<double> h) {
      const double e = damp(p);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          h[i * d + j] = p.x[0] * (p.v[i] * p.v[j] - (i == j ? 1.0 : 0.0)) * e;
    };
    f.hess_xv = [damp, d](const PhasePoint& p, std::span<double> h) {
      const double e = damp(p);
      zero_fill(h);
      for (int j = 0; j < d; ++j) h[0 * d + j] = -p.v[j] * e;
    };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "trig";
    f.eval = [](const PhasePoint& p) { return std::sin(p.x[0]) * std::cos(p.v[0]); };
    f.grad = [](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv);
      gx[0] = std::cos(p.x[0]) * std::cos(p.v[0]);
      gv[0] = -std::sin(p.x[0]) * std::sin(p.v[0]);
    };
    f.hess_vv = [](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0] = -std::sin(p.x[0]) * std::cos(p.v[0]);
    };
    f.hess_xv = [](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0] = -std::cos(p.x[0]) * std::sin(p.v[0]);
    };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "sin_sum";
    f.eval = [](const PhasePoint& p) { return std::sin(p.x[0] + p.v[0]); };
    f.grad = [](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv);
      const double cv = std::cos(p.x[0] + p.v[0]);
      gx[0] = cv; gv[0] = cv;
    };
    f.hess_vv = [](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0] = -std::sin(p.x[0] + p.v[0]);
    };
    f.hess_xv = [](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0] = -std::sin(p.x[0] + p.v[0]);
    };
    fields.push_back(std::move(f));
  }
  {
    ScalarField f;
    f.name = "poly_mix";
    f.eval = [](const PhasePoint& p) {
      return p.v[0] * p.v[0] * p.v[0] / 3.0 + p.x[0] * p.x[0] * p.v[0];
    };
    f.grad = [](const PhasePoint& p, std::span<double> gx, std::span<double> gv) {
      zero_fill(gx); zero_fill(gv);
      gx[0] = 2.0 * p.x[0] * p.v[0];
      gv[0] = p.v[0] * p.v[0] + p.x[0] * p.x[0];
    };
    f.hess_vv = [](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0] = 2.0 * p.v[0];
    };
    f.hess_xv = [](const PhasePoint& p, std::span<double> h) {
      zero_fill(h);
      h[0] = 2.0 * p.x[0];
    };
    fields.push_back(std::move(f));
  }
  return fields;
}

}  // namespace langcert
