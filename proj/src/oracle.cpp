#include "scr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scr {

std::vector<double> default_grid(std::size_t count, double r) {
  if (count == 0 || !(r > 0.0))
    throw std::invalid_argument("default_grid: bad arguments");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = r * static_cast<double>(i + 1) / static_cast<double>(count);
  g.back() = r;  // pin the endpoint against rounding
  return g;
}

namespace {

void validate_grid(std::span<const double> grid, double r) {
  if (!(r > 0.0 && r <= 1.0))
    throw std::invalid_argument("horizon must lie in (0, 1]");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= r))
      throw std::invalid_argument("grid points must lie in (0, horizon]");
    if (i > 0 && grid[i] < grid[i - 1])
      throw std::invalid_argument("grid must be nondecreasing");
  }
}

// Weighted counts of {t1_a <= grid[i]} via suffix accumulation: each profile
// adds its weight at the first grid index reaching t1, then a prefix pass
// turns the bins into cumulative counts.
struct SuffixCounter {
  std::vector<double> bin;
  explicit SuffixCounter(std::size_t g) : bin(g + 1, 0.0) {}
  void add(std::span<const double> grid, double t1, double w) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), t1);
    bin[static_cast<std::size_t>(it - grid.begin())] += w;
  }
  std::vector<double> cumulative(std::size_t g) const {
    std::vector<double> out(g, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < g; ++i) out[i] = (acc += bin[i]);
    return out;
  }
};

Curve ratio_curve(const std::vector<double>& num, const std::vector<double>& den,
                  double wnum, double wden) {
  // Conditional risks num/wnum over den/wden; the stratum weights cancel when
  // equal but are kept for the general contrast.
  Curve c;
  const std::size_t g = num.size();
  c.value.assign(g, 0.0);
  c.ok.assign(g, 0);
  for (std::size_t i = 0; i < g; ++i) {
    const double d = den[i] / wden;
    if (d > 0.0) {
      c.value[i] = (num[i] / wnum) / d;
      c.ok[i] = 1;
    }
  }
  return c;
}

Curve diff_curve(const std::vector<double>& num1, const std::vector<double>& num0,
                 double w) {
  Curve c;
  const std::size_t g = num1.size();
  c.value.assign(g, 0.0);
  c.ok.assign(g, 1);
  for (std::size_t i = 0; i < g; ++i) c.value[i] = (num1[i] - num0[i]) / w;
  return c;
}

}  // namespace

std::vector<WeightedProfile> weight_all(
    std::span<const PotentialOutcomeProfile> profiles) {
  std::vector<WeightedProfile> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back({p, 1.0});
  return out;
}

OracleReport oracle_estimands(std::span<const WeightedProfile> profiles,
                              std::span<const double> grid, double r) {
  validate_grid(grid, r);
  if (profiles.empty()) throw std::invalid_argument("oracle: empty population");
  const std::size_t g = grid.size();

  enum Stratum { all = 0, ios, as, ai, pt89, n_strata };
  double w_str[n_strata] = {0, 0, 0, 0, 0};
  SuffixCounter cnt[n_strata][2] = {
      {SuffixCounter(g), SuffixCounter(g)}, {SuffixCounter(g), SuffixCounter(g)},
      {SuffixCounter(g), SuffixCounter(g)}, {SuffixCounter(g), SuffixCounter(g)},
      {SuffixCounter(g), SuffixCounter(g)}};
  std::array<double, 16> pt_w{};

  for (const auto& wp : profiles) {
    if (!(wp.weight > 0.0) || !std::isfinite(wp.weight))
      throw std::invalid_argument("oracle: weights must be positive and finite");
    const IndicatorQuadruple q = indicators_from_profile(wp.profile, r);
    const PatientType pt = classify_patient_type(q);
    const StratumFlags fl = stratum_flags(pt);
    pt_w[static_cast<std::size_t>(pt.value - 1)] += wp.weight;

    bool member[n_strata];
    member[all] = true;
    member[ios] = fl.infected_or_survivor;
    member[as] = fl.always_survivor;
    member[ai] = fl.always_infected;
    member[pt89] = pt.value == 8 || pt.value == 9;
    for (int s = 0; s < n_strata; ++s) {
      if (!member[s]) continue;
      w_str[s] += wp.weight;
      cnt[s][0].add(grid, wp.profile.t1_0, wp.weight);
      cnt[s][1].add(grid, wp.profile.t1_1, wp.weight);
    }
  }

  OracleReport rep;
  rep.grid.assign(grid.begin(), grid.end());
  rep.horizon = r;
  const double W = w_str[all];
  rep.pi_ios = w_str[ios] / W;
  rep.pi_as = w_str[as] / W;
  rep.pi_ai = w_str[ai] / W;
  rep.pt89_mass = w_str[pt89] / W;
  for (std::size_t i = 0; i < 16; ++i) rep.pt_probs[i] = pt_w[i] / W;

  auto make_pair = [&](Stratum s, Curve& diff, Curve* rr) {
    const std::vector<double> c0 = cnt[s][0].cumulative(g);
    const std::vector<double> c1 = cnt[s][1].cumulative(g);
    if (!(w_str[s] > 0.0)) {
      diff = Curve::undefined_curve(g);
      if (rr) *rr = Curve::undefined_curve(g);
      return;
    }
    diff = diff_curve(c1, c0, w_str[s]);
    if (rr) *rr = ratio_curve(c1, c0, w_str[s], w_str[s]);
  };
  make_pair(all, rep.total_diff, &rep.total_rr);
  make_pair(ios, rep.fice_diff, &rep.fice_rr);
  make_pair(as, rep.sace_diff, &rep.sace_rr);
  make_pair(ai, rep.aice_diff, &rep.aice_rr);
  make_pair(pt89, rep.pt89_diff, nullptr);
  return rep;
}

ObservedFunctionals oracle_observed_functionals(
    std::span<const WeightedProfile> profiles, double p,
    std::span<const double> grid, double r) {
  validate_grid(grid, r);
  if (profiles.empty()) throw std::invalid_argument("oracle: empty population");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("oracle: randomization probability outside (0,1)");
  const std::size_t g = grid.size();

  double W = 0.0, psi0 = 0.0, psi1 = 0.0, f1r0 = 0.0, f1r1 = 0.0, both0 = 0.0;
  SuffixCounter c0(g), c1(g);
  for (const auto& wp : profiles) {
    if (!(wp.weight > 0.0) || !std::isfinite(wp.weight))
      throw std::invalid_argument("oracle: weights must be positive and finite");
    validate_profile(wp.profile);
    const auto& pr = wp.profile;
    W += wp.weight;
    if (pr.t1_0 <= r || pr.t2_0 > r) psi0 += wp.weight;
    if (pr.t1_1 <= r || pr.t2_1 > r) psi1 += wp.weight;
    if (pr.t1_0 <= r) f1r0 += wp.weight;
    if (pr.t1_1 <= r) f1r1 += wp.weight;
    if (pr.t1_0 <= r && pr.t2_0 <= r) both0 += wp.weight;
    c0.add(grid, pr.t1_0, wp.weight);
    c1.add(grid, pr.t1_1, wp.weight);
  }

  ObservedFunctionals f;
  f.grid.assign(grid.begin(), grid.end());
  f.horizon = r;
  f.epsi = {psi0 / W, psi1 / W};
  f.ef1_r = {f1r0 / W, f1r1 / W};
  f.eboth0 = both0 / W;
  f.ef1[0] = c0.cumulative(g);
  f.ef1[1] = c1.cumulative(g);
  for (std::size_t i = 0; i < g; ++i) {
    f.ef1[0][i] /= W;
    f.ef1[1][i] /= W;
  }
  return f;
}

}  // namespace scr
