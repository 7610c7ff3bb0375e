#include "scr/design.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "scr/parallel.hpp"
#include "scr/rng.hpp"
#include "scr/stats.hpp"

namespace scr {

namespace {

std::size_t covariate_count(const std::vector<ObservedRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("design: no records");
  const std::size_t p = records[0].x.size();
  for (const auto& rec : records)
    if (rec.x.size() != p)
      throw std::invalid_argument("design: inconsistent covariate lengths");
  return p;
}

// Sequential rank screen on the Gram matrix: a column whose Cholesky pivot
// collapses is linearly dependent on the columns before it and gets pinned.
// Keeping natural order guarantees the intercept survives.
std::vector<std::uint8_t> dependent_columns(const Eigen::MatrixXd& gram) {
  const auto d = gram.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  std::vector<std::uint8_t> pinned(static_cast<std::size_t>(d), 0);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = gram(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot <= 1e-10 * std::max(gram(j, j), 1e-300)) {
      pinned[static_cast<std::size_t>(j)] = 1;
      continue;
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double v = gram(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return pinned;
}

double logistic(double eta) {
  // Stable in both tails.
  if (eta >= 0.0) {
    const double e = std::exp(-eta);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

PropensityModel fit_propensity(const std::vector<ObservedRecord>& records,
                               const PropensityOptions& opts) {
  const std::size_t p = covariate_count(records);
  const std::size_t n = records.size();
  const std::size_t d = p + 1;

  std::size_t n1 = 0;
  for (const auto& rec : records) {
    if (rec.arm != 0 && rec.arm != 1)
      throw std::invalid_argument("propensity: arm must be 0 or 1");
    n1 += static_cast<std::size_t>(rec.arm);
  }
  if (n1 == 0 || n1 == n)
    throw std::invalid_argument("propensity: both arms must be present");

  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
          records[i].x[j];
    y(static_cast<Eigen::Index>(i)) = records[i].arm;
  }

  PropensityModel model;
  model.pinned = dependent_columns(x.transpose() * x);
  std::vector<Eigen::Index> active;
  for (std::size_t j = 0; j < d; ++j) {
    if (model.pinned[j]) {
      model.warnings.push_back(
          "propensity: column " + std::to_string(j) +
          " is linearly dependent on earlier columns; coefficient pinned to 0");
    } else {
      active.push_back(static_cast<Eigen::Index>(j));
    }
  }
  const auto na = static_cast<Eigen::Index>(active.size());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(na);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prob(n), w(n);
  const double tol = opts.tol_per_obs * static_cast<double>(n);

  auto loglik_at = [&](const Eigen::VectorXd& e) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      // log p when y=1, log(1-p) when y=0, in a tail-stable form.
      const double z = y(i) > 0.5 ? e(i) : -e(i);
      ll += z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
    }
    return ll;
  };

  auto compute_eta = [&](const Eigen::VectorXd& b, Eigen::VectorXd& out) {
    out.setZero(static_cast<Eigen::Index>(n));
    for (Eigen::Index a = 0; a < na; ++a) out += b(a) * x.col(active[a]);
  };

  double ll = loglik_at(eta);
  bool converged = false;
  double max_score = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      prob(i) = logistic(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    Eigen::VectorXd score(na);
    Eigen::MatrixXd info(na, na);
    const Eigen::VectorXd resid = y - prob;
    for (Eigen::Index a = 0; a < na; ++a)
      score(a) = x.col(active[a]).dot(resid);
    for (Eigen::Index a = 0; a < na; ++a)
      for (Eigen::Index b2 = a; b2 < na; ++b2) {
        info(a, b2) = (x.col(active[a]).array() * w.array() *
                       x.col(active[b2]).array())
                          .sum();
        info(b2, a) = info(a, b2);
      }
    max_score = na > 0 ? score.cwiseAbs().maxCoeff() : 0.0;
    if (max_score < tol) {
      converged = true;
      break;
    }

    info.diagonal().array() += 1e-12 * (1.0 + info.diagonal().maxCoeff());
    Eigen::VectorXd step = info.ldlt().solve(score);
    double scale = 1.0;
    Eigen::VectorXd cand_eta(n);
    for (int half = 0; half < 40; ++half) {
      const Eigen::VectorXd cand = beta + scale * step;
      compute_eta(cand, cand_eta);
      const double cand_ll = loglik_at(cand_eta);
      if (cand_ll >= ll - 1e-12 * (1.0 + std::fabs(ll))) {
        beta = cand;
        eta = cand_eta;
        ll = cand_ll;
        break;
      }
      scale *= 0.5;
    }
    if (beta.size() > 0 && beta.cwiseAbs().maxCoeff() > opts.beta_cap &&
        max_score > 1e-3)
      throw std::runtime_error(
          "propensity: coefficient diverging -- the arms are separated on the "
          "covariates");
  }
  if (!converged)
    throw std::runtime_error("propensity: Newton iteration did not converge");

  model.coefficients.assign(d, 0.0);
  for (Eigen::Index a = 0; a < na; ++a)
    model.coefficients[static_cast<std::size_t>(active[a])] = beta(a);
  model.fitted.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    model.fitted[i] = logistic(eta(static_cast<Eigen::Index>(i)));
  model.iterations = it;
  model.converged = converged;
  model.max_score = max_score;
  return model;
}

MatchedSet mahalanobis_match(const std::vector<ObservedRecord>& records,
                             const PropensityModel& ps, double caliper_sd,
                             bool ps_only) {
  const std::size_t p = covariate_count(records);
  const std::size_t n = records.size();
  if (ps.fitted.size() != n)
    throw std::invalid_argument("match: model fitted on a different dataset");
  if (!(caliper_sd >= 0.0))
    throw std::invalid_argument("match: caliper must be nonnegative");

  MatchedSet out;
  out.caliper_sd = caliper_sd;
  out.ps_only = ps_only;
  out.caliper_width = caliper_sd * sample_sd(ps.fitted);

  // Pooled covariance of the raw covariates over all subjects, with a small
  // ridge so near-collinear covariates stay invertible.
  Eigen::MatrixXd sigma_inv;
  if (!ps_only && p > 0) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (const auto& rec : records)
      for (std::size_t j = 0; j < p; ++j)
        mean(static_cast<Eigen::Index>(j)) += rec.x[j];
    mean /= static_cast<double>(n);
    Eigen::MatrixXd sigma =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                              static_cast<Eigen::Index>(p));
    for (const auto& rec : records) {
      Eigen::VectorXd c(static_cast<Eigen::Index>(p));
      for (std::size_t j = 0; j < p; ++j)
        c(static_cast<Eigen::Index>(j)) = rec.x[j];
      c -= mean;
      sigma.noalias() += c * c.transpose();
    }
    sigma /= static_cast<double>(n > 1 ? n - 1 : 1);
    const double ridge =
        1e-8 * std::max(sigma.trace() / static_cast<double>(p), 1e-300);
    sigma.diagonal().array() += ridge;
    sigma_inv = sigma.inverse();
  }

  std::vector<std::size_t> arm0, arm1;
  for (std::size_t i = 0; i < n; ++i)
    (records[i].arm == 0 ? arm0 : arm1).push_back(i);

  // Arm-1 candidates sorted by propensity for caliper windowing.
  std::vector<std::size_t> arm1_by_ps = arm1;
  std::stable_sort(arm1_by_ps.begin(), arm1_by_ps.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (ps.fitted[a] != ps.fitted[b])
                       return ps.fitted[a] < ps.fitted[b];
                     return a < b;
                   });
  std::vector<double> arm1_ps(arm1_by_ps.size());
  for (std::size_t k = 0; k < arm1_by_ps.size(); ++k)
    arm1_ps[k] = ps.fitted[arm1_by_ps[k]];

  // Greedy order: arm-0 subjects by ascending propensity.
  std::vector<std::size_t> order = arm0;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (ps.fitted[a] != ps.fitted[b])
                       return ps.fitted[a] < ps.fitted[b];
                     return a < b;
                   });

  std::vector<std::uint8_t> used(n, 0);
  Eigen::VectorXd diff(static_cast<Eigen::Index>(p));
  for (const std::size_t i0 : order) {
    const double target = ps.fitted[i0];
    const auto lo = std::lower_bound(arm1_ps.begin(), arm1_ps.end(),
                                     target - out.caliper_width);
    const auto hi = std::upper_bound(arm1_ps.begin(), arm1_ps.end(),
                                     target + out.caliper_width);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = n;
    for (auto it = lo; it != hi; ++it) {
      const std::size_t i1 = arm1_by_ps[static_cast<std::size_t>(it - arm1_ps.begin())];
      if (used[i1]) continue;
      double dist;
      if (ps_only || p == 0) {
        dist = std::fabs(target - ps.fitted[i1]);
      } else {
        for (std::size_t j = 0; j < p; ++j)
          diff(static_cast<Eigen::Index>(j)) =
              records[i0].x[j] - records[i1].x[j];
        dist = diff.dot(sigma_inv * diff);
      }
      if (dist < best || (dist == best && i1 < best_idx)) {
        best = dist;
        best_idx = i1;
      }
    }
    if (best_idx == n) {
      ++out.unmatched0;
      continue;
    }
    used[best_idx] = 1;
    const double reported =
        (ps_only || p == 0) ? best : std::sqrt(std::max(best, 0.0));
    out.pairs.push_back({i0, best_idx, reported});
  }
  out.unmatched1 = arm1.size() - out.pairs.size();
  return out;
}

std::vector<SmdRow> smd_table(const std::vector<ObservedRecord>& records,
                              const MatchedSet* matched) {
  const std::size_t p = covariate_count(records);

  auto smd_over = [&](const std::vector<std::size_t>& idx, std::size_t j) {
    double m[2] = {0, 0}, n_arm[2] = {0, 0};
    for (const std::size_t i : idx) {
      m[records[i].arm] += records[i].x[j];
      n_arm[records[i].arm] += 1.0;
    }
    if (n_arm[0] == 0.0 || n_arm[1] == 0.0) return 0.0;
    m[0] /= n_arm[0];
    m[1] /= n_arm[1];
    double v[2] = {0, 0};
    for (const std::size_t i : idx) {
      const double c = records[i].x[j] - m[records[i].arm];
      v[records[i].arm] += c * c;
    }
    for (int a = 0; a < 2; ++a)
      v[a] = n_arm[a] > 1.0 ? v[a] / (n_arm[a] - 1.0) : 0.0;
    const double pooled = std::sqrt((v[0] + v[1]) / 2.0);
    return pooled > 0.0 ? (m[1] - m[0]) / pooled : 0.0;
  };

  std::vector<std::size_t> everyone(records.size());
  std::iota(everyone.begin(), everyone.end(), 0);
  std::vector<std::size_t> matched_idx;
  if (matched) {
    matched_idx.reserve(2 * matched->pairs.size());
    for (const auto& pr : matched->pairs) {
      matched_idx.push_back(pr.index0);
      matched_idx.push_back(pr.index1);
    }
  }

  std::vector<SmdRow> rows;
  rows.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    SmdRow row;
    row.covariate = j;
    row.before = smd_over(everyone, j);
    if (matched) row.after = smd_over(matched_idx, j);
    rows.push_back(row);
  }
  return rows;
}

BootstrapResult pair_bootstrap(
    std::size_t n_pairs,
    const std::function<std::vector<double>(std::span<const std::size_t>)>& statistic,
    int b, std::uint64_t seed) {
  if (n_pairs == 0) throw std::invalid_argument("bootstrap: no pairs");
  if (b < 2) throw std::invalid_argument("bootstrap: need at least 2 replicates");

  BootstrapResult out;
  out.replicates = b;

  std::vector<std::size_t> identity(n_pairs);
  std::iota(identity.begin(), identity.end(), 0);
  out.point = statistic(identity);
  const std::size_t dim = out.point.size();

  // Each replicate owns a substream, so results are independent of thread
  // scheduling; values land in per-replicate slots and are summarized in
  // replicate order.
  std::vector<std::optional<std::vector<double>>> values(
      static_cast<std::size_t>(b));
  parallel_chunks(static_cast<std::size_t>(b), 1,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    std::vector<std::size_t> idx(n_pairs);
                    for (std::size_t rep = begin; rep < end; ++rep) {
                      Stream s(seed, rep, 0xB007ULL);
                      for (std::size_t i = 0; i < n_pairs; ++i) {
                        const auto draw = static_cast<std::size_t>(
                            s.next_double() * static_cast<double>(n_pairs));
                        idx[i] = std::min(draw, n_pairs - 1);
                      }
                      try {
                        std::vector<double> v = statistic(idx);
                        if (v.size() == dim) values[rep] = std::move(v);
                      } catch (const std::exception&) {
                        // recorded below as a failure
                      }
                    }
                  });

  std::vector<std::vector<double>> kept;
  for (const auto& v : values)
    if (v) kept.push_back(*v);
  out.used = static_cast<int>(kept.size());
  out.failures = b - out.used;
  if (out.failures * 10 > b)
    throw std::runtime_error(
        "bootstrap: more than 10% of replicates failed (" +
        std::to_string(out.failures) + " of " + std::to_string(b) + ")");

  out.se.assign(dim, 0.0);
  out.ci_lower.resize(dim);
  out.ci_upper.resize(dim);
  std::vector<double> column(kept.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < kept.size(); ++k) column[k] = kept[k][j];
    out.se[j] = kept.size() > 1 ? sample_sd(column) : 0.0;
    out.ci_lower[j] = out.point[j] - 1.96 * out.se[j];
    out.ci_upper[j] = out.point[j] + 1.96 * out.se[j];
  }
  return out;
}

}  // namespace scr
