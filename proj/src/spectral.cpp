#include "nls/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nls/error.hpp"

namespace nls {

SpectralSample eigenvalues(const Eigen::MatrixXd& m, std::string ensemble_id, std::uint64_t seed,
                           std::uint64_t index, int residual_check_max_n) {
  require(m.rows() == m.cols() && m.rows() >= 1, "eigenvalues: matrix must be square and nonempty");
  if (!m.allFinite()) fail(ErrorKind::Numeric, "eigenvalues: matrix " + ensemble_id + " has non-finite entries");
  const int n = static_cast<int>(m.rows());
  const bool vectors = n <= residual_check_max_n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, vectors ? Eigen::ComputeEigenvectors
                                                                   : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::Numeric, "eigenvalues: QR iteration did not converge for " + ensemble_id + " (N=" +
                                 std::to_string(n) + ", index " + std::to_string(index) + ")");
  SpectralSample s;
  s.n = n;
  s.ensemble_id = std::move(ensemble_id);
  s.seed = seed;
  s.index = index;
  s.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());

  const double norm = std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  double sum = 0.0;
  for (double x : s.eigenvalues) sum += x;
  const double trace = m.trace();
  if (std::abs(sum - trace) > 1e-6 * std::max({1.0, std::abs(trace), norm}))
    fail(ErrorKind::Numeric, "eigenvalues: trace check failed for " + s.ensemble_id);

  if (vectors) {
    std::mt19937_64 rng(0x5eed ^ static_cast<std::uint64_t>(n));
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < std::min(n, 8); ++t) {
      const int i = pick(rng);
      const Eigen::VectorXd v = solver.eigenvectors().col(i);
      const double r = (m * v - solver.eigenvalues()(i) * v).norm();
      if (r > 1e-8 * std::max(norm, 1e-300))
        fail(ErrorKind::Numeric, "eigenvalues: residual " + std::to_string(r) + " too large for " + s.ensemble_id);
    }
  }
  return s;
}

double Histogram::density(int b) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts[b]) / (static_cast<double>(total) * width(b));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile of empty data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int freedman_diaconis_bins(std::span<const double> values) {
  require(!values.empty(), "histogram of empty data");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  const double span = v.back() - v.front();
  if (iqr <= 0.0 || span <= 0.0) return 1;
  const double h = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
  return std::clamp(static_cast<int>(std::ceil(span / h)), 1, 10000);
}

Histogram histogram(std::span<const double> values, int bins, std::optional<std::pair<double, double>> range) {
  require(!values.empty(), "histogram of empty data");
  for (double x : values)
    if (!std::isfinite(x)) fail(ErrorKind::Numeric, "histogram: non-finite value");
  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
    require(lo < hi, "histogram: range must satisfy lo < hi");
  } else {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  if (bins <= 0) bins = freedman_diaconis_bins(values);
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * b / bins;
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (double x : values) {
    if (x < lo || x > hi) {
      ++h.outside;
      continue;
    }
    int b = static_cast<int>((x - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
    ++h.total;
  }
  return h;
}

namespace {

std::vector<double> sorted_copy(std::span<const double> x) {
  require(!x.empty(), "spectral distance of empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double ks_distance(std::span<const double> a, std::span<const double> b) {
  const auto x = sorted_copy(a), y = sorted_copy(b);
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double t;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) t = x[i];
    else t = y[j];
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  const auto x = sorted_copy(a), y = sorted_copy(b);
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(x.front(), y.front());
  double area = 0.0;
  while (i < x.size() || j < y.size()) {
    double t;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) t = x[i];
    else t = y[j];
    area += std::abs(i / na - j / nb) * (t - prev);
    prev = t;
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
  }
  return area;
}

std::string TrimRule::to_string() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::TopK: return "topK(" + std::to_string(k) + ")";
    case Kind::Iqr: {
      std::string c_str = std::to_string(c);
      c_str.erase(c_str.find_last_not_of('0') + 1);
      if (!c_str.empty() && c_str.back() == '.') c_str.pop_back();
      return "iqr(" + c_str + ")";
    }
  }
  return "none";
}

SpectralSample trim_outliers(const SpectralSample& s, const TrimRule& rule) {
  SpectralSample out = s;
  auto& ev = out.eigenvalues;
  switch (rule.kind) {
    case TrimRule::Kind::None:
      break;
    case TrimRule::Kind::TopK: {
      require(rule.k >= 0, "trim_outliers: k must be nonnegative");
      if (rule.k >= static_cast<int>(ev.size()))
        fail(ErrorKind::InvalidArgument, "trim_outliers: k = " + std::to_string(rule.k) + " must be below N = " +
                                             std::to_string(ev.size()));
      out.removed.insert(out.removed.end(), ev.end() - rule.k, ev.end());
      ev.resize(ev.size() - rule.k);
      break;
    }
    case TrimRule::Kind::Iqr: {
      require(rule.c > 0.0, "trim_outliers: iqr factor must be positive");
      const double q1 = quantile_sorted(ev, 0.25), q3 = quantile_sorted(ev, 0.75);
      const double lo = q1 - rule.c * (q3 - q1), hi = q3 + rule.c * (q3 - q1);
      std::vector<double> kept;
      for (double x : ev) (x < lo || x > hi ? out.removed : kept).push_back(x);
      if (kept.empty()) fail(ErrorKind::Numeric, "trim_outliers: iqr rule removed every eigenvalue");
      ev = std::move(kept);
      break;
    }
  }
  out.n = static_cast<int>(ev.size());
  std::string note = rule.to_string() + " removed " + std::to_string(out.removed.size() - s.removed.size());
  out.trim_note = s.trim_note.empty() ? note : s.trim_note + "; " + note;
  return out;
}

double outlier_dominance(const SpectralSample& s) {
  require(s.eigenvalues.size() >= 2, "outlier_dominance: need two eigenvalues");
  const double top = s.eigenvalues[s.eigenvalues.size() - 1];
  const double second = s.eigenvalues[s.eigenvalues.size() - 2];
  if (second <= 0.0) return std::numeric_limits<double>::infinity();
  return top / second;
}

}  // namespace nls
