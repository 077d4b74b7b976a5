#include "langcert/harness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "langcert/errors.hpp"
#include "langcert/vec.hpp"

namespace langcert {

MonteCarloEstimate weighted_h1_norm_sq(const GammaEngine& engine, const ScalarField& f,
                                       double zeta_sq,
                                       const std::function<double(const PhasePoint&)>& weight,
                                       std::span<const PhasePoint> samples) {
  if (samples.size() < 2) throw statistics_error("weighted_h1_norm_sq: need at least 2 samples");
  double acc = 0.0, acc2 = 0.0;
  for (const auto& p : samples) {
    const double fv = f.eval(p);
    const auto yf = engine.y_op(f, p);
    const auto zf = engine.z_op(f, p);
    const double term = fv * fv * weight(p) + (norm2(yf) + norm2(zf)) / zeta_sq;
    acc += term;
    acc2 += term * term;
  }
  const double n = static_cast<double>(samples.size());
  MonteCarloEstimate est;
  est.n = samples.size();
  est.value = acc / n;
  const double var = std::max(acc2 / n - est.value * est.value, 0.0);
  est.se = std::sqrt(var / n);
  return est;
}

RateEstimate estimate_decay_rate(std::span<const AutocorrPoint> table, const WindowPolicy& policy,
                                 const std::string& observable) {
  // largest contiguous window starting at t >= t_min where C stays positive
  // and above snr * stderr
  std::vector<const AutocorrPoint*> window;
  bool started = false;
  for (const auto& pt : table) {
    if (pt.t < policy.t_min) continue;
    const bool usable = pt.value > 0 && (pt.se <= 0 || pt.value > policy.snr * pt.se);
    if (usable) {
      window.push_back(&pt);
      started = true;
    } else if (started) {
      break;
    }
  }
  if (window.size() < 3) throw statistics_error("estimate_decay_rate: no usable fit window");

  // weighted least squares of log C on t; var(log C) = (se/C)^2
  bool have_se = false;
  for (const auto* pt : window)
    if (pt->se > 0) have_se = true;
  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto* pt : window) {
    const double y = std::log(pt->value);
    const double w = have_se && pt->se > 0 ? (pt->value / pt->se) * (pt->value / pt->se) : 1.0;
    sw += w;
    st += w * pt->t;
    sy += w * y;
    stt += w * pt->t * pt->t;
    sty += w * pt->t * y;
  }
  const double det = sw * stt - st * st;
  if (det <= 0) throw statistics_error("estimate_decay_rate: degenerate window");
  const double slope = (sw * sty - st * sy) / det;
  const double intercept = (sy - slope * st) / sw;

  double ss_res = 0, ss_tot = 0;
  const double y_mean = sy / sw;
  for (const auto* pt : window) {
    const double y = std::log(pt->value);
    const double w = have_se && pt->se > 0 ? (pt->value / pt->se) * (pt->value / pt->se) : 1.0;
    const double fit = intercept + slope * pt->t;
    ss_res += w * (y - fit) * (y - fit);
    ss_tot += w * (y - y_mean) * (y - y_mean);
  }
  RateEstimate est;
  est.observable = observable;
  est.r_hat = -slope;
  est.t_lo = window.front()->t;
  est.t_hi = window.back()->t;
  est.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (have_se) {
    est.se = std::sqrt(sw / det);
  } else {
    const double dof = std::max<double>(window.size() - 2, 1);
    est.se = std::sqrt((ss_res / dof) * (sw / det));
  }
  if (!std::isfinite(est.r_hat)) throw statistics_error("estimate_decay_rate: non-finite rate");
  return est;
}

RateVerdict compare_certificate(double sigma, const RateEstimate& rate) {
  RateVerdict v;
  v.sigma = sigma;
  v.threshold = 0.5 * sigma;
  v.margin = rate.r_hat - v.threshold;
  v.pass = rate.r_hat + 3.0 * rate.se >= v.threshold;
  return v;
}

namespace {

MonteCarloEstimate mean_estimate(std::span<const double> xs) {
  MonteCarloEstimate est;
  est.n = xs.size();
  if (xs.empty()) return est;
  double acc = 0, acc2 = 0;
  for (double v : xs) { acc += v; acc2 += v * v; }
  est.value = acc / xs.size();
  const double var = std::max(acc2 / xs.size() - est.value * est.value, 0.0);
  est.se = std::sqrt(var / xs.size());
  return est;
}

MonteCarloEstimate fraction_estimate(std::size_t hits, std::size_t n) {
  MonteCarloEstimate est;
  est.n = n;
  if (n == 0) return est;
  est.value = static_cast<double>(hits) / n;
  est.se = std::sqrt(est.value * (1.0 - est.value) / n);
  return est;
}

CheckVerdict one_sided(const MonteCarloEstimate& est, double bound, bool converged) {
  if (!converged) return CheckVerdict::kInconclusive;
  return est.value - 3.0 * est.se <= bound ? CheckVerdict::kPass : CheckVerdict::kFail;
}

}  // namespace

MuTailReport mu_tail_checks(const PotentialModel& model, const ModelParams& mp,
                            const Certificate& cert,
                            std::span<const std::vector<double>> position_samples,
                            std::span<const PhasePoint> phase_samples, bool sampler_converged) {
  MuTailReport rep;
  rep.sampler_converged = sampler_converged;
  const double d = mp.dim();

  std::vector<double> grad_sq;
  grad_sq.reserve(position_samples.size());
  std::size_t tail_hits = 0;
  for (const auto& x : position_samples) {
    grad_sq.push_back(norm2(model.gradient(x)));
    if (model.value(x) >= cert.r2) ++tail_hits;
  }
  rep.grad_sq.estimate = mean_estimate(grad_sq);
  rep.grad_sq.bound =
      cert.growth.kappa2 * mp.T * std::sqrt(d) / (1.0 - 1.0 / (16.0 * std::sqrt(d)));
  rep.grad_sq.verdict = one_sided(rep.grad_sq.estimate, rep.grad_sq.bound, sampler_converged);

  rep.position_tail.estimate = fraction_estimate(tail_hits, position_samples.size());
  rep.position_tail.bound = 1.0 / (2.0 * (10.0 * kE4 + 1.0));
  rep.position_tail.verdict =
      one_sided(rep.position_tail.estimate, rep.position_tail.bound, sampler_converged);

  std::size_t outside = 0;
  for (const auto& p : phase_samples) {
    const bool in_k = norm2(p.v) <= cert.velocity_cap && model.value(p.x) <= cert.energy_cap;
    if (!in_k) ++outside;
  }
  rep.k_complement.estimate = fraction_estimate(outside, phase_samples.size());
  rep.k_complement.bound = 1.0 / (10.0 * kE4 + 1.0);
  rep.k_complement.verdict =
      one_sided(rep.k_complement.estimate, rep.k_complement.bound, sampler_converged);

  rep.pass = rep.grad_sq.verdict == CheckVerdict::kPass &&
             rep.position_tail.verdict == CheckVerdict::kPass &&
             rep.k_complement.verdict == CheckVerdict::kPass;
  return rep;
}

namespace {
const char* verdict_name(CheckVerdict v) {
  switch (v) {
    case CheckVerdict::kPass: return "PASS";
    case CheckVerdict::kFail: return "FAIL";
    case CheckVerdict::kInconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

nlohmann::json tail_to_json(const TailCheck& t) {
  return {{"estimate", t.estimate.value}, {"se", t.estimate.se},
          {"n", t.estimate.n}, {"bound", t.bound}, {"verdict", verdict_name(t.verdict)}};
}
}  // namespace

nlohmann::json to_json(const MuTailReport& rep) {
  return {{"grad_sq_mean", tail_to_json(rep.grad_sq)},
          {"position_tail", tail_to_json(rep.position_tail)},
          {"k_complement", tail_to_json(rep.k_complement)},
          {"sampler_converged", rep.sampler_converged},
          {"pass", rep.pass}};
}

nlohmann::json to_json(const RateEstimate& rate, const RateVerdict& verdict) {
  return {{"observable", rate.observable},
          {"r_hat", rate.r_hat},
          {"se", rate.se},
          {"window", {rate.t_lo, rate.t_hi}},
          {"r_squared", rate.r_squared},
          {"sigma", verdict.sigma},
          {"threshold_sigma_over_2", verdict.threshold},
          {"margin", verdict.margin},
          {"pass", verdict.pass}};
}

nlohmann::json to_json(const DriftReport& rep) {
  nlohmann::json j{{"n_points", rep.n_points},
                   {"violations", rep.violations},
                   {"min_margin", rep.min_margin},
                   {"off_k_points", rep.off_k_points},
                   {"off_k_violations", rep.off_k_violations},
                   {"min_off_k_margin", rep.min_off_k_margin},
                   {"pass", rep.pass}};
  j["argmin"] = {{"x", rep.argmin.x}, {"v", rep.argmin.v}};
  return j;
}

nlohmann::json to_json(const WeightHypothesesReport& rep) {
  return {{"n_pairs", rep.n_pairs},
          {"min_domination_slack", rep.min_domination_slack},
          {"min_log_v", rep.min_log_v},
          {"tail_ratio", rep.tail_ratio},
          {"domination_pass", rep.domination_pass},
          {"tail_pass", rep.tail_pass},
          {"pass", rep.pass}};
}

nlohmann::json to_json(const HessianBoundReport& rep) {
  return {{"checked", rep.checked}, {"skipped", rep.skipped},
          {"max_violation", rep.max_violation},
          {"max_hessian_to_gradsq_ratio", rep.max_hessian_to_gradsq_ratio},
          {"worst_x", rep.worst_x}, {"pass", rep.pass}};
}

nlohmann::json to_json(const GradientGrowthReport& rep) {
  return {{"checked", rep.checked}, {"skipped", rep.skipped},
          {"max_lower_violation", rep.max_lower_violation},
          {"max_upper_violation", rep.max_upper_violation},
          {"worst_x", rep.worst_x}, {"pass", rep.pass}};
}

nlohmann::json to_json(const AppendixBoundReport& rep) {
  return {{"checked", rep.checked},
          {"max_gradient_violation", rep.max_gradient_violation},
          {"max_hessian_violation", rep.max_hessian_violation},
          {"pass", rep.pass}};
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  if (traj.points.empty()) throw std::invalid_argument("empty trajectory");
  const int d = traj.points.front().dim();
  out << "t";
  for (int i = 0; i < d; ++i) out << ",x" << i;
  for (int i = 0; i < d; ++i) out << ",v" << i;
  out << "\n";
  out.precision(17);
  for (std::size_t s = 0; s < traj.points.size(); ++s) {
    out << traj.times[s];
    for (int i = 0; i < d; ++i) out << "," << traj.points[s].x[i];
    for (int i = 0; i < d; ++i) out << "," << traj.points[s].v[i];
    out << "\n";
  }
}

void write_autocorrelation_csv(const std::string& path, std::span<const AutocorrPoint> table) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  out << "t,C,stderr\n";
  out.precision(17);
  for (const auto& pt : table) out << pt.t << "," << pt.value << "," << pt.se << "\n";
}

std::vector<AutocorrPoint> read_autocorrelation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,C,stderr", 0) != 0)
    throw std::invalid_argument("bad autocorrelation CSV header in " + path);
  std::vector<AutocorrPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AutocorrPoint pt;
    std::istringstream ss(line);
    char comma;
    if (!(ss >> pt.t >> comma >> pt.value >> comma >> pt.se))
      throw std::invalid_argument("bad autocorrelation CSV row: " + line);
    out.push_back(pt);
  }
  return out;
}

}  // namespace langcert
