#include "scr/sensitivity.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "scr/domain.hpp"
#include "scr/parallel.hpp"
#include "scr/rng.hpp"
#include "scr/stats.hpp"

namespace scr {

namespace {

// A principal stratum with less mass than this is treated as empty and its
// conditional effect reported as undefined.
constexpr double kStratumEps = 1e-6;

// Stream channel for the frailty-pair draws; salted with the correlation so
// every (row, rho) pair owns an independent substream.
std::uint64_t rho_channel(double rho) {
  return std::bit_cast<std::uint64_t>(rho) ^ 0x63726f7373ULL;  // "cross"
}

void check_grid(std::span<const double> grid, double r) {
  if (!(r > 0.0 && r <= 1.0))
    throw std::invalid_argument("horizon must lie in (0, 1]");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= r))
      throw std::invalid_argument("grid points must lie in (0, horizon]");
    if (i > 0 && grid[i] < grid[i - 1])
      throw std::invalid_argument("grid must be nondecreasing");
  }
}

double linear_predictor(const CoxComponent& c, std::span<const double> x) {
  if (c.beta.size() != x.size())
    throw std::invalid_argument(
        "covariate row length does not match fitted coefficients");
  double lp = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) lp += c.beta[j] * x[j];
  return lp;
}

// Patient type (0-based) for a pair of horizon-cell indices
// (infected<<1)|survived under each arm.
std::array<std::array<int, 4>, 4> type_of_cells() {
  std::array<std::array<int, 4>, 4> t{};
  for (int a0 = 0; a0 < 4; ++a0)
    for (int a1 = 0; a1 < 4; ++a1) {
      const IndicatorQuadruple q{(a0 & 2) != 0, (a0 & 1) != 0, (a1 & 2) != 0,
                                 (a1 & 1) != 0};
      t[a0][a1] = classify_patient_type(q).value - 1;
    }
  return t;
}

// Flat per-batch accumulator layout: ten grid-length numerator blocks
// followed by the scalar block.
struct StatLayout {
  std::size_t ge = 0;
  // Grid blocks.
  std::size_t a1, a0;      // feasible-infection numerators
  std::size_t s1, s0;      // always-survivor numerators
  std::size_t t1, t0;      // population risks
  std::size_t ai1, ai0;    // always-infected numerators
  std::size_t p89_1, p89_0;
  // Scalars.
  std::size_t pios, pas, pai, pt;  // pt spans 16 slots
  std::size_t total;

  explicit StatLayout(std::size_t grid_len) : ge(grid_len) {
    std::size_t o = 0;
    auto block = [&](std::size_t len) {
      const std::size_t at = o;
      o += len;
      return at;
    };
    a1 = block(ge); a0 = block(ge);
    s1 = block(ge); s0 = block(ge);
    t1 = block(ge); t0 = block(ge);
    ai1 = block(ge); ai0 = block(ge);
    p89_1 = block(ge); p89_0 = block(ge);
    pios = block(1); pas = block(1); pai = block(1);
    pt = block(16);
    total = o;
  }
};

double batch_sd(std::span<const double> batch_values) {
  if (batch_values.size() < 2) return 0.0;
  return sample_sd(batch_values) /
         std::sqrt(static_cast<double>(batch_values.size()));
}

}  // namespace

ArmModel arm_model(const ArmFit& fit) {
  return {fit.c01, fit.c02, fit.c12, fit.theta};
}

ArmModel arm_model_from_specs(const std::array<TransitionHazardSpec, 3>& hazards,
                              double theta, std::size_t n_jumps,
                              double horizon) {
  return {discretize_weibull(hazards[0], n_jumps, horizon),
          discretize_weibull(hazards[1], n_jumps, horizon),
          discretize_weibull(hazards[2], n_jumps, horizon), theta};
}

ConditionalLawEvaluator::ConditionalLawEvaluator(const ArmModel& m,
                                                 std::span<const double> x,
                                                 std::span<const double> grid,
                                                 double r)
    : grid_(grid.begin(), grid.end()) {
  check_grid(grid, r);
  const double rate01 = std::exp(linear_predictor(m.c01, x));
  const double rate02 = std::exp(linear_predictor(m.c02, x));
  const double rate12 = std::exp(linear_predictor(m.c12, x));

  // Infection mass sits at the jump times u_j of the 01 baseline. With
  // rate-weighted exposures z_j (both transitions at their left limits) and
  // a_j = z_j + rate01 * jump01(u_j), the infection probability at u_j given
  // frailty gamma is exp(-gamma z_j) - exp(-gamma a_j). A subject infected at
  // u_j survives past the horizon with probability exp(-gamma tail_j), where
  // tail_j covers the 12 hazard on (u_j, r] -- the 12 clock starts just after
  // the infection instant, so a 12 jump exactly at u_j does not act on the
  // newly infected.
  const auto& b01 = m.c01.baseline;
  const auto& times = b01.times();
  const auto& jumps = b01.jumps();
  const auto& cum = b01.cumulative();
  const double l12_r = m.c12.baseline.at(r);
  for (std::size_t j = 0; j < times.size() && times[j] <= r; ++j) {
    const double u = times[j];
    const double l01_before = cum[j] - jumps[j];
    const double l02_before = m.c02.baseline.at(u) - m.c02.baseline.jump_at(u);
    const double z = rate01 * l01_before + rate02 * l02_before;
    u_.push_back(u);
    pre_.push_back(z);
    post_.push_back(z + rate01 * jumps[j]);
    tail_.push_back(rate12 * (l12_r - m.c12.baseline.at(u)));
  }
  zr_ = rate01 * b01.at(r) + rate02 * m.c02.baseline.at(r);
}

ConditionalLawEvaluator::Cells ConditionalLawEvaluator::eval(double gamma,
                                                             double* f1,
                                                             double* j11) const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("frailty value must be finite and nonnegative");
  double facc = 0.0, jacc = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    for (; j < u_.size() && u_[j] <= grid_[i]; ++j) {
      const double inc = std::exp(-gamma * pre_[j]) - std::exp(-gamma * post_[j]);
      facc += inc;
      jacc += inc * std::exp(-gamma * tail_[j]);
    }
    f1[i] = facc;
    j11[i] = jacc;
  }
  for (; j < u_.size(); ++j) {
    const double inc = std::exp(-gamma * pre_[j]) - std::exp(-gamma * post_[j]);
    facc += inc;
    jacc += inc * std::exp(-gamma * tail_[j]);
  }
  Cells c;
  c.f1_r = facc;
  c.c11 = jacc;
  c.c10 = facc - jacc;
  c.c01 = std::exp(-gamma * zr_);
  c.c00 = 1.0 - facc - c.c01;
  c.psi = facc + c.c01;
  return c;
}

ConditionalCurves ConditionalLawEvaluator::curves(double gamma) const {
  ConditionalCurves out;
  out.f1.resize(grid_.size());
  out.joint11.resize(grid_.size());
  const Cells c = eval(gamma, out.f1.data(), out.joint11.data());
  out.f1_r = c.f1_r;
  out.c11 = c.c11;
  out.c10 = c.c10;
  out.c01 = c.c01;
  out.c00 = c.c00;
  out.psi = c.psi;
  return out;
}

ConditionalCurves conditional_curves(const CoxComponent& c01,
                                     const CoxComponent& c02,
                                     const CoxComponent& c12,
                                     std::span<const double> x, double gamma,
                                     std::span<const double> grid, double r) {
  const ArmModel m{c01, c02, c12, 0.0};
  return ConditionalLawEvaluator(m, x, grid, r).curves(gamma);
}

SensitivityReport identify_report(const ArmModel& m0, const ArmModel& m1,
                                  double rho,
                                  const std::vector<std::vector<double>>& rows,
                                  std::span<const double> grid, double r,
                                  int mc_draws, std::uint64_t seed) {
  check_grid(grid, r);
  if (rows.empty())
    throw std::invalid_argument("identify: need at least one covariate row");
  if (mc_draws < 1)
    throw std::invalid_argument("identify: mc_draws must be positive");
  if (!(rho >= 0.0) || rho > rho_max(m0.theta, m1.theta) + 1e-12)
    throw std::invalid_argument(
        "identify: correlation outside [0, " +
        std::to_string(rho_max(m0.theta, m1.theta)) + "] for frailty variances (" +
        std::to_string(m0.theta) + ", " + std::to_string(m1.theta) + ")");

  // Evaluate on the user grid extended with the horizon, so the horizon-time
  // summaries never depend on whether the grid includes r.
  std::vector<double> egrid(grid.begin(), grid.end());
  std::size_t r_idx;
  if (const auto it = std::find(egrid.begin(), egrid.end(), r);
      it != egrid.end()) {
    r_idx = static_cast<std::size_t>(it - egrid.begin());
  } else {
    egrid.push_back(r);
    r_idx = egrid.size() - 1;
  }
  const std::size_t ge = egrid.size();
  const std::size_t gu = grid.size();

  const StatLayout lay(ge);
  const std::size_t n_rows = rows.size();
  const std::size_t m = static_cast<std::size_t>(mc_draws);
  const std::size_t n_total = n_rows * m;
  const std::size_t n_batch = std::max<std::size_t>(1, std::min<std::size_t>(16, n_total));

  static const std::array<std::array<int, 4>, 4> kTypeOfCells = type_of_cells();

  const std::size_t chunk_rows = 8;
  const std::size_t n_chunks = num_chunks(n_rows, chunk_rows);
  std::vector<std::vector<double>> chunk_acc(
      n_chunks, std::vector<double>(n_batch * lay.total, 0.0));

  parallel_chunks(n_rows, chunk_rows, [&](std::size_t ci, std::size_t begin,
                                          std::size_t end) {
    auto& acc = chunk_acc[ci];
    std::vector<double> f0(ge), j0(ge), f1(ge), j1(ge);
    for (std::size_t row = begin; row < end; ++row) {
      const ConditionalLawEvaluator ev0(m0, rows[row], egrid, r);
      const ConditionalLawEvaluator ev1(m1, rows[row], egrid, r);
      Stream s(seed, row, rho_channel(rho));
      for (std::size_t d = 0; d < m; ++d) {
        const std::size_t k = row * m + d;
        double* b = acc.data() + (k * n_batch / n_total) * lay.total;

        const auto [g0, g1] = draw_bivariate_gamma(s, m0.theta, m1.theta, rho);
        const auto c0 = ev0.eval(g0, f0.data(), j0.data());
        const auto c1 = ev1.eval(g1, f1.data(), j1.data());
        const double prs0 = c0.c01 + c0.c11;
        const double prs1 = c1.c01 + c1.c11;

        for (std::size_t i = 0; i < ge; ++i) {
          b[lay.a1 + i] += f1[i] * c0.psi;
          b[lay.a0 + i] += f0[i] * c1.psi;
          b[lay.s1 + i] += j1[i] * prs0;
          b[lay.s0 + i] += j0[i] * prs1;
          b[lay.t1 + i] += f1[i];
          b[lay.t0 + i] += f0[i];
          b[lay.ai1 + i] += f1[i] * c0.f1_r;
          b[lay.ai0 + i] += f0[i] * c1.f1_r;
          b[lay.p89_1 + i] += c0.c01 * (f1[i] - j1[i]);
          b[lay.p89_0 + i] += (f0[i] - j0[i]) * c1.c01;
        }
        b[lay.pios] += c0.psi * c1.psi;
        b[lay.pas] += prs0 * prs1;
        b[lay.pai] += c0.f1_r * c1.f1_r;
        for (int a0 = 0; a0 < 4; ++a0)
          for (int a1 = 0; a1 < 4; ++a1)
            b[lay.pt + kTypeOfCells[a0][a1]] += c0.cell(a0 >> 1, a0 & 1) *
                                                c1.cell(a1 >> 1, a1 & 1);
      }
    }
  });

  // Reduce chunk accumulators in fixed order so results never depend on the
  // thread count.
  std::vector<double> batches(n_batch * lay.total, 0.0);
  for (const auto& acc : chunk_acc)
    for (std::size_t i = 0; i < batches.size(); ++i) batches[i] += acc[i];

  std::vector<double> grand(lay.total, 0.0);
  for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx)
    for (std::size_t i = 0; i < lay.total; ++i)
      grand[i] += batches[bIdx * lay.total + i];
  const double nd = static_cast<double>(n_total);

  // Draws per batch (the partition assigns draw k to batch k*B/N).
  std::vector<double> batch_n(n_batch, 0.0);
  for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx) {
    const auto up = ((bIdx + 1) * n_total + n_batch - 1) / n_batch;
    const auto lo = (bIdx * n_total + n_batch - 1) / n_batch;
    batch_n[bIdx] = static_cast<double>(up - lo);
  }

  auto at = [&](std::size_t bIdx, std::size_t s) {
    return batches[bIdx * lay.total + s];
  };

  SensitivityReport rep;
  rep.rho = rho;
  rep.grid.assign(grid.begin(), grid.end());
  rep.horizon = r;
  rep.mc_draws = mc_draws;
  rep.seed = seed;

  auto scalar_mean_se = [&](std::size_t s, double& mean, double& se) {
    mean = grand[s] / nd;
    std::vector<double> bm(n_batch);
    for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx)
      bm[bIdx] = at(bIdx, s) / batch_n[bIdx];
    se = batch_sd(bm);
  };
  scalar_mean_se(lay.pios, rep.pi_ios, rep.pi_ios_se);
  scalar_mean_se(lay.pas, rep.pi_as, rep.pi_as_se);
  scalar_mean_se(lay.pai, rep.pi_ai, rep.pi_ai_se);
  for (std::size_t i = 0; i < 16; ++i) rep.pt_probs[i] = grand[lay.pt + i] / nd;
  rep.pt89_mass = rep.pt_probs[7] + rep.pt_probs[8];

  // (num1 - num0) / pi, with batch-means standard errors of the same ratio.
  std::vector<double> se_r_diff;  // filled for the feasible-infection curve
  auto ratio_diff = [&](std::size_t num1, std::size_t num0, std::size_t den,
                        double pi, std::vector<double>* keep_se) {
    EstimandCurve ec;
    if (pi < kStratumEps) {
      ec.curve = Curve::undefined_curve(gu);
      ec.se.assign(gu, 0.0);
      if (keep_se) keep_se->assign(ge, 0.0);
      return ec;
    }
    ec.curve.value.resize(gu);
    ec.curve.ok.assign(gu, 1);
    ec.se.resize(gu);
    std::vector<double> bm(n_batch);
    for (std::size_t i = 0; i < ge; ++i) {
      const double v = (grand[num1 + i] - grand[num0 + i]) / grand[den];
      for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx)
        bm[bIdx] = (at(bIdx, num1 + i) - at(bIdx, num0 + i)) / at(bIdx, den);
      const double se = batch_sd(bm);
      if (i < gu) {
        ec.curve.value[i] = v;
        ec.se[i] = se;
      }
      if (keep_se) {
        if (keep_se->size() != ge) keep_se->resize(ge);
        (*keep_se)[i] = se;
      }
    }
    return ec;
  };
  // Population-average contrast: the denominator is the whole population.
  auto plain_diff = [&](std::size_t num1, std::size_t num0) {
    EstimandCurve ec;
    ec.curve.value.resize(gu);
    ec.curve.ok.assign(gu, 1);
    ec.se.resize(gu);
    std::vector<double> bm(n_batch);
    for (std::size_t i = 0; i < gu; ++i) {
      ec.curve.value[i] = (grand[num1 + i] - grand[num0 + i]) / nd;
      for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx)
        bm[bIdx] = (at(bIdx, num1 + i) - at(bIdx, num0 + i)) / batch_n[bIdx];
      ec.se[i] = batch_sd(bm);
    }
    return ec;
  };
  // num1 / num0 pointwise; undefined points where the denominator vanishes.
  auto ratio_rr = [&](std::size_t num1, std::size_t num0, double pi) {
    EstimandCurve ec;
    if (pi < kStratumEps) {
      ec.curve = Curve::undefined_curve(gu);
      ec.se.assign(gu, 0.0);
      return ec;
    }
    ec.curve.value.assign(gu, 0.0);
    ec.curve.ok.assign(gu, 0);
    ec.se.assign(gu, 0.0);
    std::vector<double> bm;
    for (std::size_t i = 0; i < gu; ++i) {
      if (!(grand[num0 + i] > 0.0)) continue;
      ec.curve.value[i] = grand[num1 + i] / grand[num0 + i];
      ec.curve.ok[i] = 1;
      bm.clear();
      for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx)
        if (at(bIdx, num0 + i) > 0.0)
          bm.push_back(at(bIdx, num1 + i) / at(bIdx, num0 + i));
      ec.se[i] = batch_sd(bm);
    }
    return ec;
  };

  rep.fice_diff = ratio_diff(lay.a1, lay.a0, lay.pios, rep.pi_ios, &se_r_diff);
  rep.fice_rr = ratio_rr(lay.a1, lay.a0, rep.pi_ios);
  rep.sace_diff = ratio_diff(lay.s1, lay.s0, lay.pas, rep.pi_as, nullptr);
  rep.sace_rr = ratio_rr(lay.s1, lay.s0, rep.pi_as);
  rep.aice_diff = ratio_diff(lay.ai1, lay.ai0, lay.pai, rep.pi_ai, nullptr);
  rep.aice_rr = ratio_rr(lay.ai1, lay.ai0, rep.pi_ai);
  rep.total_diff = plain_diff(lay.t1, lay.t0);
  {
    // The population-average ratio needs no stratum guard.
    rep.total_rr = ratio_rr(lay.t1, lay.t0, 1.0);
  }
  {
    EstimandCurve ec;
    if (rep.pt89_mass < kStratumEps) {
      ec.curve = Curve::undefined_curve(gu);
      ec.se.assign(gu, 0.0);
    } else {
      ec.curve.value.resize(gu);
      ec.curve.ok.assign(gu, 1);
      ec.se.resize(gu);
      std::vector<double> bm(n_batch);
      for (std::size_t i = 0; i < gu; ++i) {
        ec.curve.value[i] =
            (grand[lay.p89_1 + i] - grand[lay.p89_0 + i]) / nd / rep.pt89_mass;
        for (std::size_t bIdx = 0; bIdx < n_batch; ++bIdx) {
          const double bm_mass =
              (at(bIdx, lay.pt + 7) + at(bIdx, lay.pt + 8));
          bm[bIdx] = bm_mass > 0.0
                         ? (at(bIdx, lay.p89_1 + i) - at(bIdx, lay.p89_0 + i)) /
                               bm_mass
                         : 0.0;
        }
        ec.se[i] = batch_sd(bm);
      }
    }
    rep.pt89_diff = ec;
  }

  if (rep.pi_ios >= kStratumEps) {
    rep.fice_at_horizon =
        (grand[lay.a1 + r_idx] - grand[lay.a0 + r_idx]) / grand[lay.pios];
    rep.nnh = nnh(rep.fice_at_horizon);
    if (rep.nnh) {
      const double se_rd = se_r_diff.empty() ? 0.0 : se_r_diff[r_idx];
      rep.nnh_se = se_rd / (rep.fice_at_horizon * rep.fice_at_horizon);
    }
  }
  return rep;
}

FiceIdentification identify_fice(const ArmModel& m0, const ArmModel& m1,
                                 double rho,
                                 const std::vector<std::vector<double>>& rows,
                                 std::span<const double> grid, double r,
                                 int mc_draws, std::uint64_t seed) {
  const SensitivityReport rep =
      identify_report(m0, m1, rho, rows, grid, r, mc_draws, seed);
  return {rep.pi_ios, rep.pi_ios_se, rep.fice_diff, rep.fice_rr};
}

StrataIdentification identify_strata(const ArmModel& m0, const ArmModel& m1,
                                     double rho,
                                     const std::vector<std::vector<double>>& rows,
                                     double r, int mc_draws,
                                     std::uint64_t seed) {
  const std::array<double, 1> grid{r};
  const SensitivityReport rep =
      identify_report(m0, m1, rho, rows, grid, r, mc_draws, seed);
  return {rep.pt_probs, rep.pi_as, rep.pi_ai, rep.pi_ios};
}

std::optional<double> nnh(double risk_difference) {
  if (risk_difference == 0.0 || !std::isfinite(risk_difference))
    return std::nullopt;
  return 1.0 / std::fabs(risk_difference);
}

}  // namespace scr
