// Acceptance checks. Prints one "criterion N: PASS|FAIL ..." line per
// criterion, followed by indented detail lines. With an argument only that
// criterion runs; the exit code is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nls/config.hpp"
#include "nls/cumulants.hpp"
#include "nls/expression.hpp"
#include "nls/gaussian.hpp"
#include "nls/lab.hpp"
#include "nls/partition.hpp"

using namespace nls;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 42;

std::string preset(const std::string& name) { return std::string(NLS_CONFIG_DIR) + "/" + name; }

class Criterion {
 public:
  explicit Criterion(int id) : id_(id), start_(std::chrono::steady_clock::now()) {}

  // Records a check; failures are listed in the detail lines.
  bool check(bool ok, const std::string& what) {
    details_.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    pass_ = pass_ && ok;
    return ok;
  }
  void info(const std::string& what) { details_.push_back("info " + what); }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool finish(const std::string& summary) {
    std::printf("criterion %d: %s %s (%.1f s)\n", id_, pass_ ? "PASS" : "FAIL", summary.c_str(), seconds());
    for (const auto& d : details_) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    return pass_;
  }

 private:
  int id_;
  bool pass_ = true;
  std::vector<std::string> details_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool close(double got, double want, double tol = 1e-12) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

// 1. Exact analytic constants.
bool criterion1() {
  Criterion c(1);
  auto exact = [&](const std::string& name, double got, double want) {
    c.check(close(got, want), name + fmt(" = %.15g (closed form %.15g)", got, want));
  };

  const auto fig1 = load_config(preset("fig1.cfg"));
  exact("kappa_2 of A^2+A+BA+AB+B", analytic_free_cumulants(fig1.ensemble.members[0], 2)[2], 5.0);
  const auto p1 = predict(fig1);
  exact("relu theta_1", p1.params.theta[0], 0.5);
  exact("relu theta_2", p1.params.theta_noise, std::sqrt(5 * (1 - 2 / kPi)) / 2);

  const auto iid = GaussianLaw(Eigen::MatrixXd::Identity(2, 2));
  const auto mx = FunctionDescriptor::max2();
  exact("E[max(g1,g2)]", expect(mx, iid), 1 / std::sqrt(kPi));
  exact("c_2(max, max)", covariance_f(mx, mx, iid), 1 - 1 / kPi);
  const auto fig23 = load_config(preset("fig23.cfg"));
  const auto p23 = predict(fig23);
  exact("kappa_2^(1,2) of the max experiment", p23.covariance(0, 1), 0.0);
  exact("max theta_noise", p23.params.theta_noise, std::sqrt(0.5 - 1 / kPi));

  const auto fig4 = load_config(preset("fig4.cfg"));
  const auto p4 = predict(fig4);
  exact("kappa_2^(1,2) correlated", analytic_mixed_kappa2(fig4.ensemble)(0, 1), 0.5);
  exact("correlated theta_noise", p4.params.theta_noise, std::sqrt(0.25 - 1 / (2 * kPi)));
  c.check(c.seconds() < 5.0, "runtime under 5 s");
  return c.finish("analytic constants to 1e-12");
}

bool run_compare(Criterion& c, const std::string& file, double budget, bool uncentered) {
  auto cfg = load_config(preset(file));
  cfg.seed = kSeed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_gep_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(r.pass_ks, file + fmt(": KS(Y, Y_hat) = %.5f <= threshold %.5f (2 x baseline %.5f)", r.ks,
                                r.ks_threshold, r.ks_baseline));
  for (const auto& m : r.moment_checks)
    c.check(m.pass, file + ": moment " + std::to_string(m.order) +
                        fmt(" Y %.5g vs Y_hat %.5g, rel diff %.4f", m.y.value, m.yhat.value, m.relative_difference));
  if (uncentered) {
    c.check(r.min_dominance && *r.min_dominance > 5.0,
            file + fmt(": outlier dominance lambda_max / lambda_second = %.2f > 5", r.min_dominance.value_or(0.0)));
    c.check(r.prediction.auto_center == false && r.trim == "topK(1)", file + ": uncentered with topK(1) trimming");
  } else {
    c.check(r.prediction.auto_center, file + ": auto-centering on");
  }
  c.check(r.n == 2000, file + ": N = " + std::to_string(r.n) + ", R = " + std::to_string(r.realizations));
  c.check(secs <= budget, file + fmt(": runtime %.1f s <= %.0f s", secs, budget));
  return r.passed;
}

// 2. ReLU experiment at desk scale.
bool criterion2() {
  Criterion c(2);
  run_compare(c, "fig1.cfg", 120.0, false);
  return c.finish("ReLU experiment N=2000 R=5 matches its Gaussian equivalent");
}

// 3. Max experiments, centered and uncentered, and the correlated inputs.
bool criterion3() {
  Criterion c(3);
  run_compare(c, "fig23.cfg", 240.0, false);
  run_compare(c, "fig23_uncentered.cfg", 240.0, true);
  run_compare(c, "fig4.cfg", 240.0, false);
  return c.finish("max and correlated experiments match their Gaussian equivalents");
}

// Weighted least squares of value = a + b / N; returns (a, se(a)).
std::pair<double, double> fit_inverse_n(const std::vector<int>& n, const std::vector<Estimate>& e) {
  double s00 = 0, s01 = 0, s11 = 0, t0 = 0, t1 = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double w = 1 / (e[i].se * e[i].se), x = 1.0 / n[i];
    s00 += w;
    s01 += w * x;
    s11 += w * x * x;
    t0 += w * e[i].value;
    t1 += w * x * e[i].value;
  }
  const double det = s00 * s11 - s01 * s01;
  return {(s11 * t0 - s01 * t1) / det, std::sqrt(s11 / det)};
}

// 4. Predicted free cumulants of Y for f(x) = x^3 on A^2.
bool criterion4() {
  Criterion c(4);
  auto cfg = load_config(preset("cubic_wishart.cfg"));
  cfg.seed = kSeed;
  const std::vector<int> orders = {2, 3};
  const auto main = verify_cumulant_prediction(cfg, orders);
  const double expected[] = {15.0, 27.0};
  for (std::size_t i = 0; i < main.rows.size(); ++i) {
    const auto& row = main.rows[i];
    const std::string k = "kappa_" + std::to_string(row.order);
    c.check(close(row.predicted, expected[i]), k + fmt(" predicted %.12g (closed form %.0f)", row.predicted,
                                                       expected[i]));
    c.check(row.within_3se, k + fmt(" empirical %.4f +- %.4f within 3 SE of prediction", row.empirical.value,
                                    row.empirical.se) +
                                fmt(" (z = %.2f)", row.z));
    c.info(k + fmt(" relative error %.4f", row.relative_error) +
           (row.relative_error < 0.15 ? ", under 0.15" : ", not under 0.15"));
  }
  c.check(c.seconds() < 600.0, "runtime under 10 min");

  // The finite-N bias is O(1/N) while the SE at fixed R also shrinks like
  // 1/N; extrapolate in 1/N over a grid with matched precision.
  std::vector<int> ns;
  std::vector<std::vector<Estimate>> per_order(orders.size());
  for (const auto& [n, r] : std::vector<std::pair<int, int>>{{500, 80}, {1000, 40}}) {
    auto small = cfg;
    small.n = n;
    small.realizations = r;
    const auto t = verify_cumulant_prediction(small, orders);
    ns.push_back(n);
    for (std::size_t i = 0; i < orders.size(); ++i) per_order[i].push_back(t.rows[i].empirical);
  }
  ns.push_back(cfg.n);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    per_order[i].push_back(main.rows[i].empirical);
    std::string pts;
    for (std::size_t j = 0; j < ns.size(); ++j)
      pts += " N=" + std::to_string(ns[j]) + fmt(": %.4f +- %.4f", per_order[i][j].value, per_order[i][j].se);
    const auto [a, se] = fit_inverse_n(ns, per_order[i]);
    const double z = (a - expected[i]) / se;
    c.info("kappa_" + std::to_string(orders[i]) + " by N:" + pts);
    c.info("kappa_" + std::to_string(orders[i]) + fmt(" extrapolated to 1/N -> 0: %.4f +- %.4f (z = %.2f)", a, se, z) +
           (std::abs(z) <= 3 ? ", within 3 SE" : ", outside 3 SE"));
  }
  return c.finish("cubic f on A^2, N=2000, R=20: kappa_2 = 15, kappa_3 = 27 within 3 SE");
}

// 5. Scaling of entry cumulants with N.
bool criterion5() {
  Criterion c(5);
  auto cfg = load_config(preset("scaling.cfg"));
  cfg.seed = kSeed;
  c.check(cfg.verify.samples >= 100000 && cfg.verify.n_grid == std::vector<int>{40, 80, 160},
          "M = " + std::to_string(cfg.verify.samples) + " at N in {40, 80, 160}");
  const auto r = run_verify(cfg);
  for (const auto& s : r.scaling)
    c.check(s.pass && s.slope && std::abs(*s.slope - s.expected_slope) <= 0.4,
            s.name + " (" + s.pattern + ", " + s.ensemble + ", " + s.function + ")" +
                fmt(": slope %.3f +- %.3f, expected %.0f", s.slope.value_or(NAN), s.slope_se.value_or(NAN),
                    s.expected_slope));
  // Local slopes between neighbouring grid sizes expose finite-N drift.
  for (const auto& s : r.scaling) {
    std::string line = s.name + ": local slopes";
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      const auto& a = s.points[i - 1].cumulant;
      const auto& b = s.points[i].cumulant;
      const double dx = std::log(static_cast<double>(s.points[i].n) / s.points[i - 1].n);
      const double se = std::hypot(a.se / a.value, b.se / b.value) / dx;
      line += " " + std::to_string(s.points[i - 1].n) + "->" + std::to_string(s.points[i].n) +
              fmt(": %.2f +- %.2f", std::log(std::abs(b.value / a.value)) / dx, se);
    }
    c.info(line);
  }
  for (const auto& l : r.limits)
    c.info(l.name + fmt(": N^(n-1) c_n at largest N %.4f, expected %.4f", l.points.back().cumulant.value,
                        l.expected) +
           (l.extrapolated ? fmt(", extrapolated %.4f +- %.4f", l.extrapolated->value, l.extrapolated->se) : "") +
           (l.pass ? " (ok)" : " (off)"));

  // The same subcycle pattern on the free Poisson ensemble converges more
  // slowly; reported for reference only.
  ScalingTaskSpec sub;
  sub.name = "cube-subcycle-c4 on A^2";
  sub.pairs = {{1, 2}, {2, 1}, {1, 2}, {2, 1}};
  sub.ensemble = MatrixExpression({{"A^2", 1}});
  sub.function = FunctionDescriptor(Polynomial::monomial({3}));
  sub.auto_center = true;
  sub.expected_slope = -2;
  const auto s = verify_entry_scaling(sub, cfg.ensemble.members[0], cfg.verify, kSeed, cfg.jobs);
  c.info(sub.name + fmt(": slope %.3f +- %.3f", s.slope.value_or(NAN), s.slope_se.value_or(NAN)));
  c.check(c.seconds() < 600.0, "runtime under 10 min");
  return c.finish("entry cumulant slopes within 0.4 of -1, -3, -2, -3");
}

// 6. Exact combinatorics.
bool criterion6() {
  Criterion c(6);
  // Counts against independent formulas: Stirling recursion, Catalan
  // product, odd double factorial.
  bool counts = true;
  std::vector<std::vector<unsigned long long>> st(kMaxPartitionSize + 1,
                                                  std::vector<unsigned long long>(kMaxPartitionSize + 1, 0));
  st[0][0] = 1;
  for (int i = 1; i <= kMaxPartitionSize; ++i)
    for (int k = 1; k <= i; ++k) st[i][k] = k * st[i - 1][k] + st[i - 1][k - 1];
  for (int n = 1; n <= kMaxPartitionSize; ++n) {
    unsigned long long bell = 0;
    for (auto v : st[n]) bell += v;
    if (n <= 10) counts = counts && enumerate_partitions(n).size() == bell;
    counts = counts && bell_number(n) == bell;
  }
  unsigned long long cat = 1;
  for (int n = 1; n <= kMaxNoncrossingSize; ++n) {
    cat = cat * 2 * (2 * n - 1) / (n + 1);
    counts = counts && enumerate_noncrossing(n).size() == cat && catalan_number(n) == cat;
  }
  unsigned long long df = 1;
  for (int n = 2; n <= kMaxPairingSize; n += 2) {
    df *= (n - 1);
    counts = counts && enumerate_pairings(n).size() == df && double_factorial(n - 1) == df;
  }
  c.check(counts, "Bell, Catalan and pairing counts up to the caps (" + std::to_string(kMaxPartitionSize) + ", " +
                      std::to_string(kMaxNoncrossingSize) + ", " + std::to_string(kMaxPairingSize) + ")");

  // Moebius inversion: sum over s <= t <= p of mu(s, t) = delta(s, p).
  bool inversion = true;
  long long intervals = 0;
  for (int n = 1; n <= 6; ++n) {
    const auto parts = enumerate_partitions(n);
    for (const auto& s : parts)
      for (const auto& p : parts) {
        if (!s.refines(p)) continue;
        long long sum = 0;
        for (const auto& t : parts)
          if (s.refines(t) && t.refines(p)) sum += mobius(s, t);
        inversion = inversion && sum == (s == p ? 1 : 0);
        ++intervals;
      }
  }
  c.check(inversion, "Moebius inversion on every interval for n <= 6 (" + std::to_string(intervals) + " intervals)");

  // Worked example: c_2(a1 a2, a3 a4) for centered arguments.
  const auto tau = SetPartition::parse("{1,2}{3,4}");
  std::vector<std::string> ls;
  for (const auto& p : leonov_shiryaev_partitions(tau, true)) ls.push_back(p.to_string());
  std::sort(ls.begin(), ls.end());
  c.check(ls == std::vector<std::string>{"{1,2,3,4}", "{1,3}{2,4}", "{1,4}{2,3}"},
          "c_2(a1 a2, a3 a4) = c_4 + c_13 c_24 + c_14 c_23");
  JointCumulantTable t(4);
  const double c13 = 0.7, c24 = -1.3, c14 = 0.4, c23 = 2.1, c4 = 0.9;
  t.set({1, 3}, c13);
  t.set({2, 4}, c24);
  t.set({1, 4}, c14);
  t.set({2, 3}, c23);
  t.set({1, 2, 3, 4}, c4);
  const int groups[] = {2, 2};
  c.check(close(leonov_shiryaev_expand(groups, t, true), c4 + c13 * c24 + c14 * c23), "expansion evaluates it");

  // Round trips, error measured against the size of the moment of that
  // order (double precision cannot do better than eps * |m_j|).
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0, worst_abs = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> k(8);
    for (auto& x : k) x = u(rng);
    const auto m1 = moments_from_classical_cumulants(make_cumulants(CumulantKind::Classical, k));
    const auto k1 = classical_cumulants_from_moments(m1);
    const auto m2 = moments_from_free_cumulants(make_cumulants(CumulantKind::Free, k));
    const auto k2 = free_cumulants_from_moments(m2);
    for (int j = 1; j <= 8; ++j) {
      const double e1 = std::abs(k1[j] - k[j - 1]), e2 = std::abs(k2[j] - k[j - 1]);
      worst_abs = std::max({worst_abs, e1, e2});
      worst = std::max({worst, e1 / std::max(1.0, std::abs(m1[j])), e2 / std::max(1.0, std::abs(m2[j]))});
    }
  }
  c.check(worst <= 1e-12, fmt("moment <-> cumulant round trips to order 8: worst error %.2e relative to max(1, |m_j|)"
                              " (absolute %.2e)", worst, worst_abs));
  const auto fp = free_cumulants_from_moments(make_moments({1, 2, 5, 14}));
  c.check(close(fp[1], 1) && close(fp[2], 1) && close(fp[3], 1) && close(fp[4], 1),
          fmt("free cumulants of moments (1, 2, 5, 14) = (%.3g, %.3g, %.3g, ...)", fp[1], fp[2], fp[3]));
  return c.finish("partition counts, Moebius, Leonov-Shiryaev and round trips exact");
}

// 7. Gaussian calculus.
bool criterion7() {
  Criterion c(7);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  auto random_poly = [&](int arity, int degree) {
    Polynomial p;
    p.arity = arity;
    for (int t = 0; t < 4; ++t) {
      std::vector<int> e(arity, 0);
      int left = 1 + static_cast<int>(rng() % degree);
      for (int r = 0; r < arity && left > 0; ++r) {
        const int take = r + 1 == arity ? left : static_cast<int>(rng() % (left + 1));
        e[r] = take;
        left -= take;
      }
      p.terms[e] += u(rng);
    }
    return p;
  };

  double stein = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double v = 0.2 + 3 * (u(rng) + 1);
    const auto law = GaussianLaw::univariate(v);
    const FunctionDescriptor f(random_poly(1, 7));
    const double lhs = expect_times_coordinate(f, 0, law), rhs = v * expect_partial(f, 0, law);
    stein = std::max(stein, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  c.check(stein <= 1e-12, fmt("Stein identity on random polynomials, worst relative error %.2e", stein));

  double relu_err = 0.0, max_err = 0.0;
  for (double v : {0.25, 1.0, 4.0}) {
    const auto law = GaussianLaw::univariate(v);
    const auto relu = FunctionDescriptor::relu();
    relu_err = std::max({relu_err, std::abs(expect(relu, law) - std::sqrt(v / (2 * kPi))),
                         std::abs(expect_product(relu, relu, law) - v / 2),
                         std::abs(expect_partial(relu, 0, law) - 0.5)});
    for (double rho : {0.0, 0.5, -0.3}) {
      Eigen::MatrixXd cov(2, 2);
      cov << v, rho * v, rho * v, v;
      const GaussianLaw l2(cov);
      const auto mx = FunctionDescriptor::max2();
      max_err = std::max({max_err, std::abs(expect(mx, l2) - std::sqrt(v * (1 - rho) / kPi)),
                          std::abs(expect_product(mx, mx, l2) - v), std::abs(expect_partial(mx, 0, l2) - 0.5)});
    }
  }
  c.check(relu_err <= 1e-8, fmt("ReLU closed forms vs quadrature at variances 0.25, 1, 4: worst %.2e", relu_err));
  c.check(max_err <= 1e-8, fmt("max closed forms vs quadrature at variances 0.25, 1, 4: worst %.2e", max_err));

  double worst_disc = 0.0;
  int cases = 0;
  for (int t = 0; t < 100; ++t) {
    const int arity = 1 + t % 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(arity, arity, [&]() { return u(rng); });
    const Eigen::MatrixXd cov = a * a.transpose() + 0.01 * Eigen::MatrixXd::Identity(arity, arity);
    const auto p = theta_params(FunctionDescriptor(random_poly(arity, 5)), GaussianLaw(cov), t % 3 == 0);
    worst_disc = std::min(worst_disc, p.discriminant / std::max(1.0, p.kappa2f));
    ++cases;
  }
  c.check(worst_disc >= -1e-12,
          fmt("noise discriminant >= 0 on %.0f random polynomials (min relative %.2e)", cases, worst_disc));
  return c.finish("Stein identity, closed forms and discriminant");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<bool()>> all = {criterion1, criterion2, criterion3, criterion4,
                                                  criterion5, criterion6, criterion7};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= 7; ++i) selected.push_back(i);
  bool ok = true;
  for (int id : selected) {
    if (id < 1 || id > 7) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    try {
      ok = all[id - 1]() && ok;
    } catch (const std::exception& e) {
      std::printf("criterion %d: FAIL error: %s\n", id, e.what());
      ok = false;
    }
  }
  return ok ? 0 : 1;
}
