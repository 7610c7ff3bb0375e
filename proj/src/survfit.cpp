#include "scr/survfit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "scr/stats.hpp"

namespace scr {

// ---------------------------------------------------------------- StepFunction

StepFunction::StepFunction(std::vector<double> times, std::vector<double> jumps)
    : times_(std::move(times)), jumps_(std::move(jumps)) {
  if (times_.size() != jumps_.size())
    throw std::invalid_argument("StepFunction: times/jumps length mismatch");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(std::isfinite(times_[i])))
      throw std::invalid_argument("StepFunction: non-finite time");
    if (i > 0 && !(times_[i] > times_[i - 1]))
      throw std::invalid_argument("StepFunction: times must be strictly increasing");
    if (!(jumps_[i] >= 0.0) || !std::isfinite(jumps_[i]))
      throw std::invalid_argument("StepFunction: jumps must be finite and >= 0");
  }
  cum_.resize(jumps_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < jumps_.size(); ++i) cum_[i] = (acc += jumps_[i]);
}

double StepFunction::at(double t) const {
  // Right-continuous: include jumps with time <= t.
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return cum_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::jump_at(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) return 0.0;
  return jumps_[static_cast<std::size_t>(it - times_.begin())];
}

// ------------------------------------------------------- Laplace transform

double log_gamma_laplace_deriv_abs(double theta, double k, int q) {
  if (theta < 0.0 || k < 0.0 || q < 0 || q > 2)
    throw std::invalid_argument("gamma_laplace_deriv: bad arguments");
  if (theta == 0.0) return -k;  // degenerate frailty at 1
  const double l1p = std::log1p(theta * k);
  switch (q) {
    case 0: return -l1p / theta;
    case 1: return -(1.0 / theta + 1.0) * l1p;
    default: return std::log1p(theta) - (1.0 / theta + 2.0) * l1p;
  }
}

double gamma_laplace_deriv(double theta, double k, int q) {
  const double mag = std::exp(log_gamma_laplace_deriv_abs(theta, k, q));
  return (q == 1) ? -mag : mag;
}

FrailtyPosterior posterior_frailty_moments(double theta, double k,
                                           int delta_prime) {
  if (theta < 0.0 || k < 0.0 || delta_prime < 0 || delta_prime > 2)
    throw std::invalid_argument("posterior_frailty_moments: bad arguments");
  if (theta == 0.0) return {1.0, 0.0};
  const double inv = 1.0 / theta;
  return {(1.0 + theta * delta_prime) / (1.0 + theta * k),
          digamma(inv + delta_prime) - std::log(inv + k)};
}

// ------------------------------------------------------------------ compute_k

namespace {

double linear_predictor(const std::vector<double>& x,
                        const std::vector<double>& beta) {
  if (x.size() != beta.size())
    throw std::invalid_argument("covariate/coefficient length mismatch");
  double lp = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) lp += x[j] * beta[j];
  return lp;
}

}  // namespace

double compute_k(const ObservedRecord& rec, const CoxComponent& c01,
                 const CoxComponent& c02, const CoxComponent& c12) {
  const double e01 = std::exp(linear_predictor(rec.x, c01.beta));
  const double e02 = std::exp(linear_predictor(rec.x, c02.beta));
  double k = c01.baseline.at(rec.y1) * e01 + c02.baseline.at(rec.y1) * e02;
  if (rec.d1) {
    const double e12 = std::exp(linear_predictor(rec.x, c12.beta));
    k += (c12.baseline.at(rec.y2) - c12.baseline.at(rec.y1)) * e12;
  }
  return k;
}

// ----------------------------------------------------------------- Cox fitting

namespace {

void validate_cox_data(const CoxData& d) {
  if (d.entry.size() != d.n || d.exit.size() != d.n || d.event.size() != d.n ||
      d.offset.size() != d.n || d.x.size() != d.n * d.p)
    throw std::invalid_argument("cox data: inconsistent sizes");
  for (std::size_t i = 0; i < d.n; ++i) {
    if (!(d.entry[i] <= d.exit[i]))
      throw std::invalid_argument("cox data: entry after exit");
    if (d.entry[i] == d.exit[i] && !d.event[i])
      throw std::invalid_argument("cox data: empty risk interval without event");
  }
}

// Rows grouped by distinct event time, descending; degenerate rows
// (entry == exit, event) are kept out of the risk-set sweep and added back
// only at their own event instant.
struct CoxSweep {
  std::vector<std::size_t> by_exit, by_entry;         // descending, sweep rows
  std::vector<std::vector<std::size_t>> event_groups; // rows per distinct time
  std::vector<double> event_times;                    // descending
  std::vector<std::vector<std::size_t>> degenerate_at; // parallel to groups
  std::size_t n_events = 0;
};

CoxSweep build_sweep(const CoxData& d) {
  CoxSweep s;
  std::vector<std::size_t> sweep_rows;
  std::vector<std::pair<double, std::size_t>> events;
  for (std::size_t i = 0; i < d.n; ++i) {
    const bool degen = d.event[i] && d.entry[i] == d.exit[i];
    if (!degen) sweep_rows.push_back(i);
    if (d.event[i]) events.emplace_back(d.exit[i], i);
  }
  s.n_events = events.size();

  s.by_exit = sweep_rows;
  std::sort(s.by_exit.begin(), s.by_exit.end(),
            [&](std::size_t a, std::size_t b) { return d.exit[a] > d.exit[b]; });
  s.by_entry = sweep_rows;
  std::sort(s.by_entry.begin(), s.by_entry.end(),
            [&](std::size_t a, std::size_t b) { return d.entry[a] > d.entry[b]; });

  std::sort(events.begin(), events.end(),
            [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < events.size();) {
    std::size_t j = i;
    while (j < events.size() && events[j].first == events[i].first) ++j;
    s.event_times.push_back(events[i].first);
    std::vector<std::size_t> group, degen;
    for (std::size_t q = i; q < j; ++q) {
      const std::size_t row = events[q].second;
      group.push_back(row);
      if (d.entry[row] == d.exit[row]) degen.push_back(row);
    }
    s.event_groups.push_back(std::move(group));
    s.degenerate_at.push_back(std::move(degen));
    i = j;
  }
  return s;
}

struct SweepEval {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

// One descending pass: log partial likelihood, and optionally score/info,
// over the active (non-pinned) columns.
SweepEval sweep_eval(const CoxData& d, const CoxSweep& s,
                     const std::vector<double>& beta,
                     const std::vector<std::size_t>& active, bool derivs) {
  const std::size_t pa = active.size();
  SweepEval out;
  out.score = Eigen::VectorXd::Zero(pa);
  out.info = Eigen::MatrixXd::Zero(pa, pa);

  std::vector<double> w(d.n);
  std::vector<double> lp(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    double v = d.offset[i];
    for (std::size_t j = 0; j < d.p; ++j) v += d.x[i * d.p + j] * beta[j];
    lp[i] = v;
    w[i] = std::exp(v);
  }

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(pa);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(pa, pa);
  Eigen::VectorXd xi(pa);

  auto add_row = [&](std::size_t i, double sign, double& S0, Eigen::VectorXd& S1,
                     Eigen::MatrixXd& S2) {
    for (std::size_t a = 0; a < pa; ++a) xi[a] = d.x[i * d.p + active[a]];
    S0 += sign * w[i];
    if (derivs) {
      S1.noalias() += sign * w[i] * xi;
      S2.noalias() += sign * w[i] * xi * xi.transpose();
    }
  };

  std::size_t ie = 0, ib = 0;
  for (std::size_t g = 0; g < s.event_times.size(); ++g) {
    const double t = s.event_times[g];
    while (ie < s.by_exit.size() && d.exit[s.by_exit[ie]] >= t)
      add_row(s.by_exit[ie++], +1.0, s0, s1, s2);
    while (ib < s.by_entry.size() && d.entry[s.by_entry[ib]] >= t)
      add_row(s.by_entry[ib++], -1.0, s0, s1, s2);

    double S0 = s0;
    Eigen::VectorXd* S1p = &s1;
    Eigen::MatrixXd* S2p = &s2;
    Eigen::VectorXd s1d;
    Eigen::MatrixXd s2d;
    if (!s.degenerate_at[g].empty()) {
      s1d = s1;
      s2d = s2;
      for (std::size_t i : s.degenerate_at[g]) add_row(i, +1.0, S0, s1d, s2d);
      S1p = &s1d;
      S2p = &s2d;
    }

    const double dsz = static_cast<double>(s.event_groups[g].size());
    if (!(S0 > 0.0))
      throw std::runtime_error("cox_newton: empty risk set at an event time");
    for (std::size_t i : s.event_groups[g]) {
      out.loglik += lp[i];
      if (derivs)
        for (std::size_t a = 0; a < pa; ++a)
          out.score[a] += d.x[i * d.p + active[a]];
    }
    out.loglik -= dsz * std::log(S0);
    if (derivs) {
      const Eigen::VectorXd mean = *S1p / S0;
      out.score.noalias() -= dsz * mean;
      out.info.noalias() += dsz * (*S2p / S0 - mean * mean.transpose());
    }
  }
  return out;
}

}  // namespace

CoxFitResult cox_newton(const CoxData& d, const CoxOptions& opts,
                        const std::vector<double>* warm_start) {
  validate_cox_data(d);
  const CoxSweep sweep = build_sweep(d);
  if (sweep.n_events == 0)
    throw std::invalid_argument("cox_newton: no events in the data");

  CoxFitResult res;
  res.beta.assign(d.p, 0.0);
  res.pinned.assign(d.p, 0);

  // Pin constant columns: they carry no likelihood information.
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < d.p; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < d.n; ++i) {
      lo = std::fmin(lo, d.x[i * d.p + j]);
      hi = std::fmax(hi, d.x[i * d.p + j]);
    }
    if (hi - lo < 1e-12 * (1.0 + std::fabs(hi)))
      res.pinned[j] = 1;
    else
      active.push_back(j);
  }

  if (warm_start) {
    if (warm_start->size() != d.p)
      throw std::invalid_argument("cox_newton: warm start length mismatch");
    for (std::size_t j : active) res.beta[j] = (*warm_start)[j];
  }

  SweepEval cur = sweep_eval(d, sweep, res.beta, active, true);
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.max_score = active.empty() ? 0.0 : cur.score.cwiseAbs().maxCoeff();
    if (res.max_score < opts.tol) {
      res.converged = true;
      break;
    }
    Eigen::MatrixXd H = cur.info;
    // Guard a semi-definite information matrix with a relative ridge.
    const double ridge = 1e-12 * (1.0 + H.trace() / std::max<std::size_t>(1, active.size()));
    for (Eigen::Index a = 0; a < H.rows(); ++a) H(a, a) += ridge;
    const Eigen::VectorXd delta = H.ldlt().solve(cur.score);

    double step = 1.0;
    bool accepted = false;
    std::vector<double> beta_new = res.beta;
    for (int h = 0; h < 40; ++h) {
      for (std::size_t a = 0; a < active.size(); ++a)
        beta_new[active[a]] = res.beta[active[a]] + step * delta[a];
      const SweepEval trial = sweep_eval(d, sweep, beta_new, active, true);
      if (trial.loglik >= cur.loglik - 1e-12 * (1.0 + std::fabs(cur.loglik))) {
        res.beta = beta_new;
        cur = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stalled; convergence judged by the score below

    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t j = active[a];
      if (std::fabs(res.beta[j]) > opts.beta_cap &&
          std::fabs(cur.score[a]) > 1e-3)
        throw std::runtime_error(
            "cox_newton: coefficient diverging (monotone likelihood)");
    }
  }
  res.max_score = active.empty() ? 0.0 : cur.score.cwiseAbs().maxCoeff();
  if (!res.converged) res.converged = res.max_score < opts.tol;
  res.loglik = cur.loglik;
  return res;
}

StepFunction breslow(const CoxData& d, const std::vector<double>& beta) {
  validate_cox_data(d);
  if (beta.size() != d.p)
    throw std::invalid_argument("breslow: coefficient length mismatch");
  const CoxSweep sweep = build_sweep(d);

  std::vector<double> w(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    double v = d.offset[i];
    for (std::size_t j = 0; j < d.p; ++j) v += d.x[i * d.p + j] * beta[j];
    w[i] = std::exp(v);
  }

  std::vector<double> times, jumps;
  times.reserve(sweep.event_times.size());
  jumps.reserve(sweep.event_times.size());

  double s0 = 0.0;
  std::size_t ie = 0, ib = 0;
  for (std::size_t g = 0; g < sweep.event_times.size(); ++g) {
    const double t = sweep.event_times[g];
    while (ie < sweep.by_exit.size() && d.exit[sweep.by_exit[ie]] >= t)
      s0 += w[sweep.by_exit[ie++]];
    while (ib < sweep.by_entry.size() && d.entry[sweep.by_entry[ib]] >= t)
      s0 -= w[sweep.by_entry[ib++]];
    double S0 = s0;
    for (std::size_t i : sweep.degenerate_at[g]) S0 += w[i];
    if (!(S0 > 0.0))
      throw std::runtime_error("breslow: empty risk set at an event time");
    times.push_back(t);
    jumps.push_back(static_cast<double>(sweep.event_groups[g].size()) / S0);
  }
  std::reverse(times.begin(), times.end());
  std::reverse(jumps.begin(), jumps.end());
  return StepFunction(std::move(times), std::move(jumps));
}

// ------------------------------------------------------------------------ EM

namespace {

// Bounded scalar minimization (Brent, golden fallback).
double brent_minimize(const std::function<double(double)>& f, double a,
                      double b, double tol, int max_iter = 200) {
  const double gold = 0.3819660112501051;
  double x = a + gold * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = tol * std::fabs(x) + 1e-12;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::fabs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_old = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) &&
          p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m) ? b - x : a - x;
      d = gold * e;
    }
    const double u = (std::fabs(d) >= tol1) ? x + d : x + ((d > 0) ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

void validate_records(const std::vector<ObservedRecord>& records) {
  if (records.empty()) throw std::invalid_argument("em_fit: no records");
  const int arm = records.front().arm;
  const std::size_t p = records.front().x.size();
  for (const auto& r : records) {
    if (r.arm != arm)
      throw std::invalid_argument("em_fit: records span both arms");
    if (r.x.size() != p)
      throw std::invalid_argument("em_fit: ragged covariate rows");
    if (!(r.y1 > 0.0) || !(r.y2 > 0.0) || r.y1 > r.y2)
      throw std::invalid_argument("em_fit: invalid follow-up times");
    if (!r.d1 && r.y1 != r.y2)
      throw std::invalid_argument(
          "em_fit: no infection recorded but y1 differs from y2");
    if (r.d1 && r.y1 == r.y2 && !r.d2)
      throw std::invalid_argument(
          "em_fit: infection at y2 without terminal event flag");
  }
}

struct TransitionData {
  CoxData cox;
  std::vector<std::size_t> subject;  // row -> record index
  bool any_event = false;
};

TransitionData build_transition(const std::vector<ObservedRecord>& recs,
                                int which) {
  TransitionData t;
  const std::size_t p = recs.front().x.size();
  t.cox.p = p;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    double entry = 0.0, exit = 0.0;
    bool ev = false, include = true;
    switch (which) {
      case 0:  // healthy -> infected
        entry = 0.0; exit = r.y1; ev = r.d1;
        break;
      case 1:  // healthy -> dead
        entry = 0.0; exit = r.y1; ev = !r.d1 && r.d2;
        break;
      default:  // infected -> dead, calendar clock
        include = r.d1;
        entry = r.y1; exit = r.y2; ev = r.d2;
        break;
    }
    if (!include) continue;
    t.cox.entry.push_back(entry);
    t.cox.exit.push_back(exit);
    t.cox.event.push_back(ev);
    t.cox.offset.push_back(0.0);
    t.cox.x.insert(t.cox.x.end(), r.x.begin(), r.x.end());
    t.subject.push_back(i);
    t.any_event = t.any_event || ev;
  }
  t.cox.n = t.cox.entry.size();
  return t;
}

CoxComponent pinned_component(std::size_t p) {
  CoxComponent c;
  c.beta.assign(p, 0.0);
  c.pinned.assign(p, 1);
  c.baseline = StepFunction{};
  return c;
}

}  // namespace

double marginal_loglik(const std::vector<ObservedRecord>& records,
                       const CoxComponent& c01, const CoxComponent& c02,
                       const CoxComponent& c12, double theta) {
  if (theta < 0.0) throw std::invalid_argument("marginal_loglik: negative theta");
  std::vector<double> terms(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double k = compute_k(r, c01, c02, c12);
    const int dp = (r.d1 ? 1 : 0) + (r.d2 ? 1 : 0);
    double ll = log_gamma_laplace_deriv_abs(theta, k, dp);
    auto event_term = [&](const CoxComponent& c, double t) {
      const double jump = c.baseline.jump_at(t);
      if (!(jump > 0.0))
        throw std::runtime_error(
            "marginal_loglik: event time carries no baseline hazard mass");
      return std::log(jump) + linear_predictor(r.x, c.beta);
    };
    if (r.d1) ll += event_term(c01, r.y1);
    if (!r.d1 && r.d2) ll += event_term(c02, r.y1);
    if (r.d1 && r.d2) ll += event_term(c12, r.y2);
    terms[i] = ll;
  }
  return pairwise_sum(terms);
}

ArmFit em_fit(const std::vector<ObservedRecord>& records, const EmOptions& opts) {
  validate_records(records);
  if (opts.fixed_theta && *opts.fixed_theta < 0.0)
    throw std::invalid_argument("em_fit: negative fixed theta");

  ArmFit fit;
  fit.arm = records.front().arm;
  fit.n = records.size();
  fit.p = records.front().x.size();

  TransitionData tr[3] = {build_transition(records, 0),
                          build_transition(records, 1),
                          build_transition(records, 2)};
  CoxComponent* comps[3] = {&fit.c01, &fit.c02, &fit.c12};
  const char* names[3] = {"01", "02", "12"};

  auto refit = [&](int j, const std::vector<double>* warm) {
    if (!tr[j].any_event || tr[j].cox.n == 0) {
      *comps[j] = pinned_component(fit.p);
      return;
    }
    const CoxFitResult r = cox_newton(tr[j].cox, opts.cox, warm);
    comps[j]->beta = r.beta;
    comps[j]->pinned = r.pinned;
    comps[j]->baseline = breslow(tr[j].cox, r.beta);
  };

  for (int j = 0; j < 3; ++j) {
    if (!tr[j].any_event)
      fit.warnings.push_back(std::string("transition ") + names[j] +
                             ": no events; component pinned at zero");
    refit(j, nullptr);
  }

  fit.theta = opts.fixed_theta.value_or(opts.theta_init);
  if (opts.fixed_theta) fit.warnings.push_back("frailty variance frozen");

  auto params_vector = [&] {
    std::vector<double> v;
    for (int j = 0; j < 3; ++j)
      v.insert(v.end(), comps[j]->beta.begin(), comps[j]->beta.end());
    v.push_back(fit.theta);
    return v;
  };

  auto e_step = [&] {
    fit.subjects.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const double k = compute_k(r, fit.c01, fit.c02, fit.c12);
      const int dp = (r.d1 ? 1 : 0) + (r.d2 ? 1 : 0);
      const FrailtyPosterior post = posterior_frailty_moments(fit.theta, k, dp);
      fit.subjects[i] = {k, dp, post.mean, post.mean_log};
    }
    for (int j = 0; j < 3; ++j)
      for (std::size_t row = 0; row < tr[j].cox.n; ++row)
        tr[j].cox.offset[row] = std::log(fit.subjects[tr[j].subject[row]].mean);
  };

  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> prev_params = params_vector();
  fit.converged = false;

  for (fit.iterations = 1; fit.iterations <= opts.max_iter; ++fit.iterations) {
    e_step();

    std::vector<double> warm[3] = {fit.c01.beta, fit.c02.beta, fit.c12.beta};
    for (int j = 0; j < 3; ++j) refit(j, &warm[j]);

    if (!opts.fixed_theta) {
      std::vector<double> means(fit.n), logs(fit.n);
      for (std::size_t i = 0; i < fit.n; ++i) {
        means[i] = fit.subjects[i].mean;
        logs[i] = fit.subjects[i].mean_log;
      }
      const double sg = pairwise_sum(means), se = pairwise_sum(logs);
      const double n = static_cast<double>(fit.n);
      // Expected complete-data log-density of the frailty sample.
      auto neg_q = [&](double logth) {
        const double th = std::exp(logth);
        const double inv = 1.0 / th;
        return -((inv - 1.0) * se - sg * inv - n * std::lgamma(inv) -
                 n * inv * std::log(th));
      };
      fit.theta = std::exp(brent_minimize(neg_q, opts.log_theta_lo,
                                          opts.log_theta_hi, 1e-10));
    }

    const double ll =
        marginal_loglik(records, fit.c01, fit.c02, fit.c12, fit.theta);
    fit.loglik_path.push_back(ll);
    fit.loglik = ll;

    const std::vector<double> params = params_vector();
    double change = 0.0;
    for (std::size_t j = 0; j < params.size(); ++j)
      change = std::fmax(change, std::fabs(params[j] - prev_params[j]) /
                                     (1.0 + std::fabs(prev_params[j])));
    fit.final_change = change;
    fit.final_loglik_change = std::fabs(ll - prev_ll);
    prev_params = params;
    prev_ll = ll;

    if (change < opts.tol) {
      fit.converged = true;
      break;
    }
  }

  e_step();  // leave the stored posteriors in sync with the final parameters

  if (!fit.converged) {
    fit.iterations = opts.max_iter;
    throw EmNotConverged("em_fit: no convergence within " +
                             std::to_string(opts.max_iter) + " iterations",
                         fit);
  }
  return fit;
}

FrailtyIllnessDeathFit fit_both_arms(const std::vector<ObservedRecord>& records,
                                     const EmOptions& opts) {
  std::vector<ObservedRecord> a0, a1;
  for (const auto& r : records) (r.arm == 0 ? a0 : a1).push_back(r);
  FrailtyIllnessDeathFit fit;
  fit.arm0 = em_fit(a0, opts);
  fit.arm1 = em_fit(a1, opts);
  return fit;
}

}  // namespace scr
