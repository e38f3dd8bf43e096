#include "nls/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "nls/error.hpp"

namespace nls {

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  const int workers = std::min(resolve_jobs(jobs), std::max(count, 1));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        {
          std::lock_guard lock(error_mutex);
          if (error) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void ExperimentConfig::validate() const {
  if (ensemble.size() < 1) fail(ErrorKind::Config, "ensemble: at least one matrix is required");
  if (function.arity() != ensemble.size())
    fail(ErrorKind::Config, "function " + function.name() + " takes " + std::to_string(function.arity()) +
                                " arguments but the ensemble has " + std::to_string(ensemble.size()) + " matrices");
  if (n < 16) fail(ErrorKind::Config, "run.n must be at least 16");
  if (realizations < 1) fail(ErrorKind::Config, "run.realizations must be at least 1");
  if (order < 1 || order > kMaxCompareOrder)
    fail(ErrorKind::Config, "run.order must be in [1, " + std::to_string(kMaxCompareOrder) + "]");
  if (compare.moments < 1 || compare.moments > kMaxCompareOrder)
    fail(ErrorKind::Config, "compare.moments must be in [1, " + std::to_string(kMaxCompareOrder) + "]");
  for (int k : compare.cumulant_orders)
    if (k < 1 || k > kMaxCompareOrder) fail(ErrorKind::Config, "compare.cumulant_orders entries must be in [1, 8]");
  if (compare.ks_factor <= 0.0) fail(ErrorKind::Config, "compare.ks_factor must be positive");
  if (theta_override && static_cast<int>(theta_override->size()) != ensemble.size())
    fail(ErrorKind::Config, "compare.theta_override needs one value per ensemble matrix");
  if (covariance && (covariance->rows() != ensemble.size() || covariance->cols() != ensemble.size()))
    fail(ErrorKind::Config, "ensemble.covariance must be l x l");
  if (trim.kind == TrimRule::Kind::TopK && (trim.k < 0 || trim.k >= n))
    fail(ErrorKind::Config, "run.trim topK must satisfy 0 <= k < N");
}

// ---------------------------------------------------------------------------

Prediction predict(const ExperimentConfig& cfg) {
  cfg.validate();
  Prediction p;
  const int l = cfg.ensemble.size();
  p.auto_center = cfg.effective_auto_center();
  p.covariance = cfg.covariance ? *cfg.covariance : analytic_mixed_kappa2(cfg.ensemble);
  for (int r = 0; r < l; ++r) {
    const int label[1] = {r};
    p.input_means.push_back(analytic_mixed_moment(cfg.ensemble, label));
  }
  const GaussianLaw law(p.covariance);
  p.params = theta_params(cfg.function, law, p.auto_center);
  if (!p.auto_center) p.uncentered_mean = expect(cfg.function, law);
  if (cfg.theta_override) {
    p.params.theta = *cfg.theta_override;
    double explained = 0.0;
    for (int r = 0; r < l; ++r)
      for (int s = 0; s < l; ++s) explained += law.covariance(r, s) * p.params.theta[r] * p.params.theta[s];
    p.params.discriminant = p.params.kappa2f - explained;
    p.params.theta_noise = std::sqrt(std::max(0.0, p.params.discriminant));
    p.params.stein_theta_noise.reset();
    p.notes.push_back("theta overridden by configuration; theta_noise recomputed from it");
  }

  const int order = cfg.order;
  try {
    for (const auto& m : cfg.ensemble.members) p.input_cumulants.push_back(analytic_free_cumulants(m, order));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SizeLimit) throw;
    p.input_cumulants.clear();
    p.notes.push_back(std::string("input free cumulants unavailable: ") + e.what());
  }
  if (cfg.mixed) {
    p.mixed = cfg.mixed;
  } else if (!law.is_diagonal() && order >= 3) {
    try {
      p.mixed = analytic_mixed_free_cumulants(cfg.ensemble, std::min(order, kFreeMobiusSumOrder));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SizeLimit) throw;
      p.notes.push_back(std::string("mixed free cumulants unavailable: ") + e.what());
    }
  }
  try {
    if (law.is_diagonal() && !p.input_cumulants.empty())
      p.kappa_f = predict_free_cumulants(cfg.function, law, p.input_cumulants, nullptr, order);
    else if (p.mixed)
      p.kappa_f = predict_free_cumulants(cfg.function, law, {}, &*p.mixed, order);
    else
      p.kappa_f = predict_free_cumulants(cfg.function, law, {}, nullptr, std::min(order, 2));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Numeric || e.kind() == ErrorKind::Internal) throw;
    p.notes.push_back(std::string("free cumulant prediction limited: ") + e.what());
    p.kappa_f = predict_free_cumulants(cfg.function, law, {}, nullptr, std::min(order, 2));
  }
  if (p.kappa_f && p.kappa_f->order() < order)
    p.notes.push_back("predicted free cumulants only through order " + std::to_string(p.kappa_f->order()));
  if (cfg.theta_override && p.kappa_f) {
    // Keep kappa_2 = c_2(f, f); higher orders follow the overridden theta.
    std::vector<double> k = p.kappa_f->values;
    for (int n = 3; n <= static_cast<int>(k.size()); ++n) {
      double sum = 0.0;
      if (law.is_diagonal() && !p.input_cumulants.empty())
        for (int r = 0; r < l; ++r) sum += p.input_cumulants[r][n] * std::pow(p.params.theta[r], n);
      k[n - 1] = sum;
    }
    p.kappa_f = make_cumulants(CumulantKind::Free, k);
  }
  return p;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> spectrum_moments(const std::vector<double>& ev, int order) {
  std::vector<double> m(order, 0.0);
  for (double x : ev) {
    double p = 1.0;
    for (int k = 0; k < order; ++k) {
      p *= x;
      m[k] += p;
    }
  }
  for (auto& v : m) v /= static_cast<double>(ev.size());
  return m;
}

// Mean over realizations with the standard error of the mean.
std::vector<Estimate> mean_with_se(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size(), k = rows.front().size();
  std::vector<Estimate> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0;
    for (const auto& row : rows) mean += row[j];
    mean /= static_cast<double>(r);
    double ss = 0.0;
    for (const auto& row : rows) ss += (row[j] - mean) * (row[j] - mean);
    out[j].value = mean;
    out[j].se = r > 1 ? std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r)) : 0.0;
  }
  return out;
}

// g evaluated at the pooled moments; SE by delete-one jackknife.
std::vector<Estimate> jackknife(const std::vector<std::vector<double>>& rows,
                                const std::function<std::vector<double>(const std::vector<double>&)>& g) {
  const std::size_t r = rows.size(), k = rows.front().size();
  std::vector<double> total(k, 0.0);
  for (const auto& row : rows)
    for (std::size_t j = 0; j < k; ++j) total[j] += row[j];
  std::vector<double> pooled(k);
  for (std::size_t j = 0; j < k; ++j) pooled[j] = total[j] / static_cast<double>(r);
  const auto full = g(pooled);
  std::vector<Estimate> out(full.size());
  for (std::size_t j = 0; j < full.size(); ++j) out[j].value = full[j];
  if (r < 2) return out;
  std::vector<std::vector<double>> leave(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::vector<double> m(k);
    for (std::size_t j = 0; j < k; ++j) m[j] = (total[j] - rows[i][j]) / static_cast<double>(r - 1);
    leave[i] = g(m);
  }
  for (std::size_t j = 0; j < full.size(); ++j) {
    double mean = 0.0;
    for (const auto& v : leave) mean += v[j];
    mean /= static_cast<double>(r);
    double ss = 0.0;
    for (const auto& v : leave) ss += (v[j] - mean) * (v[j] - mean);
    out[j].se = std::sqrt(ss * static_cast<double>(r - 1) / static_cast<double>(r));
  }
  return out;
}

std::vector<double> free_of(const std::vector<double>& m) {
  return free_cumulants_from_moments(make_moments(m)).values;
}
std::vector<double> classical_of(const std::vector<double>& m) {
  return classical_cumulants_from_moments(make_moments(m)).values;
}

CumulantCheck check_cumulant(int order, double predicted, const Estimate& e, double tol) {
  CumulantCheck c;
  c.order = order;
  c.predicted = predicted;
  c.empirical = e;
  const double err = e.value - predicted;
  c.z = e.se > 0.0 ? err / e.se : (err == 0.0 ? 0.0 : std::copysign(INFINITY, err));
  c.relative_error = predicted != 0.0 ? std::abs(err) / std::abs(predicted) : std::abs(err);
  c.within_3se = std::abs(err) <= 3.0 * e.se;
  c.pass = std::abs(err) <= std::max(3.0 * e.se, tol * std::abs(predicted));
  return c;
}

std::vector<const Eigen::MatrixXd*> pointers(const std::vector<Eigen::MatrixXd>& v) {
  std::vector<const Eigen::MatrixXd*> p;
  for (const auto& m : v) p.push_back(&m);
  return p;
}

struct RealizationSpectra {
  std::vector<SpectralSample> inputs;
  SpectralSample y, yhat, baseline;
  bool has_baseline = false;
};

}  // namespace

EquivalenceReport run_gep_experiment(const ExperimentConfig& cfg, SpectraSet* keep) {
  const auto start = std::chrono::steady_clock::now();
  EquivalenceReport rep;
  rep.name = cfg.name;
  rep.n = cfg.n;
  rep.realizations = cfg.realizations;
  rep.seed = cfg.seed;
  rep.prediction = predict(cfg);
  rep.trim = cfg.trim.to_string();
  rep.conjectural = cfg.function.conjectural();
  const auto& params = rep.prediction.params;
  const int R = cfg.realizations, N = cfg.n;
  const std::string letters = cfg.ensemble.letters();

  const double bulk_shift = rep.prediction.uncentered_mean / std::sqrt(static_cast<double>(N));
  auto surrogate = [&](std::span<const Eigen::MatrixXd* const> in, const Eigen::MatrixXd& z) {
    Eigen::MatrixXd m = build_gaussian_equivalent(in, params, z, rep.prediction.input_means);
    if (bulk_shift != 0.0) m.diagonal().array() -= bulk_shift;
    return m;
  };

  std::vector<RealizationSpectra> spectra(R);
  parallel_for(R, cfg.jobs, [&](int r) {
    auto& out = spectra[r];
    const auto index = static_cast<std::uint64_t>(r);
    {
      auto x = evaluate_tuple(cfg.ensemble, sample_letters(letters, N, cfg.seed, index, SeedStream::Letter));
      const auto in = pointers(x);
      if (keep)
        for (std::size_t m = 0; m < x.size(); ++m)
          out.inputs.push_back(eigenvalues(x[m], cfg.ensemble.members[m].id(), cfg.seed, index));
      const Eigen::MatrixXd y = apply_nonlinearity(in, cfg.function, params.center_shift);
      out.y = eigenvalues(y, "Y", cfg.seed, index);
      const Eigen::MatrixXd z = sample_goe(N, derive_seed(cfg.seed, SeedStream::Noise, 0, index));
      out.yhat = eigenvalues(surrogate(in, z), "Yhat", cfg.seed, index);
    }
    if (cfg.compare.baseline) {
      auto x = evaluate_tuple(cfg.ensemble, sample_letters(letters, N, cfg.seed, index, SeedStream::BaselineLetter));
      const Eigen::MatrixXd z = sample_goe(N, derive_seed(cfg.seed, SeedStream::BaselineNoise, 0, index));
      out.baseline = eigenvalues(surrogate(pointers(x), z), "Yhat_baseline", cfg.seed, index);
      out.has_baseline = true;
    }
  });

  // Trimming acts on Y only; the surrogate has no mean-induced outlier.
  std::vector<double> pooled_y, pooled_yhat, pooled_base;
  std::vector<std::vector<double>> rows_y, rows_yhat;
  const int K = std::max({cfg.compare.moments, cfg.order, 1});
  for (int r = 0; r < R; ++r) {
    auto& s = spectra[r];
    if (cfg.trim.kind == TrimRule::Kind::TopK && cfg.trim.k >= 1) {
      const double d = outlier_dominance(s.y);
      rep.min_dominance = rep.min_dominance ? std::min(*rep.min_dominance, d) : d;
    }
    s.y = trim_outliers(s.y, cfg.trim);
    rep.removed.insert(rep.removed.end(), s.y.removed.begin(), s.y.removed.end());
    for (double v : s.y.eigenvalues)
      if (!std::isfinite(v)) fail(ErrorKind::Numeric, "non-finite eigenvalue in Y, realization " + std::to_string(r));
    pooled_y.insert(pooled_y.end(), s.y.eigenvalues.begin(), s.y.eigenvalues.end());
    pooled_yhat.insert(pooled_yhat.end(), s.yhat.eigenvalues.begin(), s.yhat.eigenvalues.end());
    if (s.has_baseline) pooled_base.insert(pooled_base.end(), s.baseline.eigenvalues.begin(), s.baseline.eigenvalues.end());
    rows_y.push_back(spectrum_moments(s.y.eigenvalues, K));
    rows_yhat.push_back(spectrum_moments(s.yhat.eigenvalues, K));
  }
  if (rep.min_dominance) rep.pass_dominance = *rep.min_dominance > cfg.dominance;

  rep.moments_y = mean_with_se(rows_y);
  rep.moments_yhat = mean_with_se(rows_yhat);
  const int order = cfg.order;
  auto truncate = [order](const std::vector<double>& m) {
    return std::vector<double>(m.begin(), m.begin() + order);
  };
  rep.free_cumulants_y = jackknife(rows_y, [&](const std::vector<double>& m) { return free_of(truncate(m)); });
  rep.free_cumulants_yhat = jackknife(rows_yhat, [&](const std::vector<double>& m) { return free_of(truncate(m)); });
  rep.classical_cumulants_y =
      jackknife(rows_y, [&](const std::vector<double>& m) { return classical_of(truncate(m)); });
  rep.moments_y.resize(cfg.compare.moments);
  rep.moments_yhat.resize(cfg.compare.moments);

  rep.ks = ks_distance(pooled_y, pooled_yhat);
  rep.w1 = wasserstein1(pooled_y, pooled_yhat);
  if (!pooled_base.empty()) {
    rep.ks_baseline = ks_distance(pooled_yhat, pooled_base);
    rep.w1_baseline = wasserstein1(pooled_yhat, pooled_base);
    rep.ks_threshold = cfg.compare.ks_factor * rep.ks_baseline;
    rep.pass_ks = rep.ks <= rep.ks_threshold;
  }

  // Relative moment error, scaled by the natural size of m_k so that moments
  // which vanish in the limit are not judged against zero.
  const double m2 = rep.moments_yhat.size() >= 2 ? std::abs(rep.moments_yhat[1].value) : 1.0;
  rep.pass_moments = true;
  for (int k = 1; k <= cfg.compare.moments; ++k) {
    MomentCheck c;
    c.order = k;
    c.y = rep.moments_y[k - 1];
    c.yhat = rep.moments_yhat[k - 1];
    const double scale = std::max(std::abs(c.yhat.value), std::pow(m2, 0.5 * k));
    c.relative_difference = scale > 0.0 ? std::abs(c.y.value - c.yhat.value) / scale : 0.0;
    c.pass = c.relative_difference <= cfg.compare.moment_tolerance;
    rep.pass_moments = rep.pass_moments && c.pass;
    rep.moment_checks.push_back(c);
  }

  if (rep.prediction.kappa_f)
    for (int k : cfg.compare.cumulant_orders)
      if (k <= rep.prediction.kappa_f->order() && k <= order)
        rep.cumulant_checks.push_back(check_cumulant(k, (*rep.prediction.kappa_f)[k], rep.free_cumulants_y[k - 1],
                                                     cfg.compare.cumulant_tolerance));

  rep.passed = rep.pass_ks && rep.pass_moments && rep.pass_dominance;

  if (keep) {
    keep->inputs.assign(cfg.ensemble.size(), {});
    for (auto& s : spectra) {
      for (std::size_t m = 0; m < s.inputs.size(); ++m) keep->inputs[m].push_back(std::move(s.inputs[m]));
      keep->y.push_back(std::move(s.y));
      keep->yhat.push_back(std::move(s.yhat));
      if (s.has_baseline) keep->baseline.push_back(std::move(s.baseline));
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

CumulantPredictionTable verify_cumulant_prediction(const ExperimentConfig& cfg, const std::vector<int>& orders) {
  CumulantPredictionTable table;
  table.name = cfg.name;
  table.n = cfg.n;
  table.realizations = cfg.realizations;
  table.conjectural = cfg.function.conjectural();
  const Prediction pred = predict(cfg);
  int K = 1;
  for (int k : orders) {
    require(k >= 1 && k <= kMaxCompareOrder, "verify_cumulant_prediction: order out of range");
    K = std::max(K, k);
  }
  if (!pred.kappa_f || pred.kappa_f->order() < K)
    fail(ErrorKind::InvalidArgument, "verify_cumulant_prediction: prediction not available through order " +
                                         std::to_string(K));
  const int R = cfg.realizations;
  const std::string letters = cfg.ensemble.letters();
  std::vector<std::vector<double>> rows(R);
  parallel_for(R, cfg.jobs, [&](int r) {
    const auto index = static_cast<std::uint64_t>(r);
    auto x = evaluate_tuple(cfg.ensemble, sample_letters(letters, cfg.n, cfg.seed, index));
    const auto y = apply_nonlinearity(pointers(x), cfg.function, pred.params.center_shift);
    rows[r] = spectrum_moments(trim_outliers(eigenvalues(y, "Y", cfg.seed, index), cfg.trim).eigenvalues, K);
  });
  const auto kappa = jackknife(rows, free_of);
  table.passed = true;
  for (int k : orders) {
    table.rows.push_back(check_cumulant(k, (*pred.kappa_f)[k], kappa[k - 1], cfg.compare.cumulant_tolerance));
    table.passed = table.passed && table.rows.back().pass;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Entry-cumulant Monte Carlo.
//
// Every realization yields the full matrix, so instead of one tuple per
// realization the designated entries are read off at T random injective
// relabelings of the abstract indices. Exchangeability of the entries makes
// every relabeling an unbiased draw; tuples from one realization are
// correlated, so standard errors come from batch means over realizations.

namespace {

constexpr int kMaxPatternLabels = 8;

struct EntrySource {
  MatrixExpression expr;
  std::optional<FunctionDescriptor> f;
  double center = 0.0;
  std::string key;
};

struct PatternJob {
  int source = 0;
  std::vector<std::pair<int, int>> pairs;
};

std::string describe_function(const std::optional<FunctionDescriptor>& f) {
  if (!f) return "none";
  if (const auto* p = std::get_if<Polynomial>(&f->variant())) {
    std::ostringstream os;
    os.precision(17);
    os << "poly";
    for (const auto& [e, c] : p->terms) {
      os << "[";
      for (int x : e) os << x << ",";
      os << c << "]";
    }
    return os.str();
  }
  return f->name();
}

int label_count(const std::vector<std::pair<int, int>>& pairs) {
  int m = 0;
  for (auto [a, b] : pairs) m = std::max({m, a, b});
  return m;
}

std::string pattern_string(const std::vector<std::pair<int, int>>& pairs) {
  std::string s;
  for (auto [a, b] : pairs) s += "(" + std::to_string(a) + "," + std::to_string(b) + ")";
  return s;
}

// Cumulant estimates at one N for every job, sharing realizations.
std::vector<ScalingPoint> estimate_entry_cumulants(const std::vector<EntrySource>& sources,
                                                   const std::vector<PatternJob>& jobs, int n,
                                                   const VerifySettings& settings, std::uint64_t seed,
                                                   int threads) {
  const long long M = settings.samples;
  const int B = static_cast<int>(std::min<long long>(settings.batches, M));
  const int T = settings.relabelings;
  require(M >= 2 && B >= 2, "entry scaling needs at least two realizations and two batches");
  require(T >= 1, "entry scaling needs at least one relabeling per realization");
  int labels = 0;
  for (const auto& j : jobs) labels = std::max(labels, label_count(j.pairs));
  require(labels <= kMaxPatternLabels && labels <= n, "entry pattern uses too many distinct indices");

  std::string letters;
  {
    EnsembleTuple all;
    for (const auto& s : sources) all.members.push_back(s.expr);
    letters = all.letters();
  }
  const std::uint64_t master = splitmix64(seed ^ (0x5ca1e5ca1eULL + static_cast<std::uint64_t>(n)));

  std::vector<std::vector<ProductMomentAccumulator>> acc(B);
  parallel_for(B, threads, [&](int b) {
    std::vector<ProductMomentAccumulator> local;
    for (const auto& j : jobs) local.emplace_back(static_cast<int>(j.pairs.size()));
    const long long lo = M * b / B, hi = M * (b + 1) / B;
    std::vector<Eigen::MatrixXd> mats(sources.size());
    std::vector<double> tuple(6);
    int idx[kMaxPatternLabels];
    for (long long r = lo; r < hi; ++r) {
      const auto index = static_cast<std::uint64_t>(r);
      const auto letter_mats = sample_letters(letters, n, master, index);
      std::map<std::string, Eigen::MatrixXd> by_expr;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        const std::string ek = sources[s].expr.to_string();
        auto it = by_expr.find(ek);
        if (it == by_expr.end()) it = by_expr.emplace(ek, evaluate_expression(sources[s].expr, letter_mats)).first;
        if (sources[s].f) {
          const Eigen::MatrixXd* in[1] = {&it->second};
          mats[s] = apply_nonlinearity(in, *sources[s].f, sources[s].center);
        } else {
          mats[s] = it->second;
        }
      }
      std::mt19937_64 rng(derive_seed(master, SeedStream::Relabel, 0, index));
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int t = 0; t < T; ++t) {
        for (int a = 0; a < labels; ++a) {
          bool fresh;
          do {
            idx[a] = pick(rng);
            fresh = true;
            for (int c = 0; c < a; ++c) fresh = fresh && idx[c] != idx[a];
          } while (!fresh);
        }
        for (std::size_t j = 0; j < jobs.size(); ++j) {
          const auto& m = mats[jobs[j].source];
          const auto& pairs = jobs[j].pairs;
          for (std::size_t a = 0; a < pairs.size(); ++a)
            tuple[a] = m(idx[pairs[a].first - 1], idx[pairs[a].second - 1]);
          local[j].add(std::span<const double>(tuple.data(), pairs.size()));
        }
      }
    }
    acc[b] = std::move(local);
  });

  std::vector<ScalingPoint> points;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    ProductMomentAccumulator total(static_cast<int>(jobs[j].pairs.size()));
    std::vector<double> per_batch;
    for (int b = 0; b < B; ++b) {
      total.merge(acc[b][j]);
      per_batch.push_back(acc[b][j].cumulant());
    }
    double mean = 0.0;
    for (double v : per_batch) mean += v;
    mean /= B;
    double ss = 0.0;
    for (double v : per_batch) ss += (v - mean) * (v - mean);
    ScalingPoint p;
    p.n = n;
    p.cumulant.value = total.cumulant();
    p.cumulant.se = std::sqrt(ss / (B - 1) / B);
    p.realizations = M;
    p.observations = total.count();
    points.push_back(p);
  }
  return points;
}

void fit_slope(ScalingResult& res, double tolerance) {
  const auto& pts = res.points;
  res.vanishing = std::all_of(pts.begin(), pts.end(), [](const ScalingPoint& p) {
    return std::abs(p.cumulant.value) < 3.0 * p.cumulant.se;
  });
  const bool positive = std::all_of(pts.begin(), pts.end(), [](const ScalingPoint& p) { return p.cumulant.value > 0; });
  const bool negative = std::all_of(pts.begin(), pts.end(), [](const ScalingPoint& p) { return p.cumulant.value < 0; });
  res.sign_constant = positive || negative;
  if (res.vanishing) {
    res.status = "consistent with vanishing";
    res.pass = false;
    return;
  }
  if (!res.sign_constant) {
    res.status = "sign changes across N";
    res.pass = false;
    return;
  }
  const std::size_t k = pts.size();
  double xbar = 0.0, ybar = 0.0;
  std::vector<double> x(k), y(k), sy(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = std::log(static_cast<double>(pts[i].n));
    y[i] = std::log(std::abs(pts[i].cumulant.value));
    sy[i] = pts[i].cumulant.se / std::abs(pts[i].cumulant.value);
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= k;
  ybar /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  const double slope = sxy / sxx;
  double var = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = (x[i] - xbar) / sxx;
    var += w * w * sy[i] * sy[i];
    const double fit = ybar + slope * (x[i] - xbar);
    rss += (y[i] - fit) * (y[i] - fit);
  }
  res.slope = slope;
  res.slope_se = std::sqrt(var);
  if (k > 2) res.slope_residual_se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  res.status = "slope";
  res.pass = std::abs(slope - res.expected_slope) <= tolerance;
}

std::vector<IndexPair> to_index_pairs(const std::vector<std::pair<int, int>>& pairs) {
  std::vector<IndexPair> out;
  for (auto [a, b] : pairs) out.push_back({a, b});
  return out;
}

void check_grid(const VerifySettings& s) {
  if (s.n_grid.size() < 3) fail(ErrorKind::Config, "verify.n_grid needs at least three sizes");
  for (int n : s.n_grid)
    if (n < 8) fail(ErrorKind::Config, "verify.n_grid sizes must be at least 8");
  if (s.samples < 2) fail(ErrorKind::Config, "verify.samples must be at least 2");
}

EntrySource make_source(const MatrixExpression& expr, const std::optional<FunctionDescriptor>& f,
                        std::optional<bool> auto_center) {
  EntrySource s{expr, f, 0.0, ""};
  if (f) {
    if (f->arity() != 1) fail(ErrorKind::Config, "entry scaling supports single-input functions only");
    EnsembleTuple t{{expr}};
    const GaussianLaw law(analytic_mixed_kappa2(t));
    if (auto_center.value_or(f->conjectural())) s.center = expect(*f, law);
  }
  s.key = expr.to_string() + "|" + describe_function(f) + "|" + std::to_string(s.center);
  return s;
}

int add_source(std::vector<EntrySource>& sources, EntrySource s) {
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i].key == s.key) return static_cast<int>(i);
  sources.push_back(std::move(s));
  return static_cast<int>(sources.size()) - 1;
}

std::vector<std::pair<int, int>> cycle_pattern(int order) {
  std::vector<std::pair<int, int>> p;
  for (int i = 1; i <= order; ++i) p.emplace_back(i, i % order + 1);
  return p;
}

struct VerifyPlan {
  std::vector<EntrySource> sources;
  std::vector<PatternJob> jobs;
};

}  // namespace

namespace {

// Weighted least squares of c(N) = a + b/N; the finite-N bias of the
// rescaled cumulants is O(1/N).
std::optional<Estimate> extrapolate_inverse_n(const std::vector<ScalingPoint>& pts) {
  if (pts.size() < 3) return std::nullopt;
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  for (const auto& p : pts) {
    if (!(p.cumulant.se > 0.0)) return std::nullopt;
    const double w = 1.0 / (p.cumulant.se * p.cumulant.se);
    const Eigen::Vector2d x(1.0, 1.0 / p.n);
    m += w * x * x.transpose();
    r += w * x * p.cumulant.value;
  }
  const Eigen::Matrix2d cov = m.inverse();
  const Eigen::Vector2d beta = cov * r;
  return Estimate{beta(0), std::sqrt(cov(0, 0))};
}

VerifyReport run_plan(const std::vector<ScalingTaskSpec>& scaling, const std::vector<LimitSpec>& limits,
                      const MatrixExpression& default_ensemble, const VerifySettings& settings, std::uint64_t seed,
                      int threads) {
  check_grid(settings);
  VerifyPlan plan;
  VerifyReport rep;
  for (const auto& t : scaling) {
    if (t.pairs.empty() || t.pairs.size() > 4) fail(ErrorKind::Config, "scaling pattern must have 1 to 4 entries");
    for (auto [a, b] : t.pairs)
      if (a < 1 || b < 1) fail(ErrorKind::Config, "scaling pattern indices are 1-based");
    const auto& expr = t.ensemble ? *t.ensemble : default_ensemble;
    const int s = add_source(plan.sources, make_source(expr, t.function, t.auto_center));
    plan.jobs.push_back({s, t.pairs});
    ScalingResult r;
    r.name = t.name;
    r.pattern = pattern_string(t.pairs);
    r.ensemble = expr.to_string();
    r.function = describe_function(t.function);
    r.expected_slope = t.expected_slope;
    const auto ip = to_index_pairs(t.pairs);
    r.cycles = cycle_structure(ip);
    rep.scaling.push_back(std::move(r));
  }
  for (const auto& l : limits) {
    if (l.order < 2 || l.order > 4) fail(ErrorKind::Config, "limit check order must be in [2, 4]");
    const auto& expr = l.ensemble ? *l.ensemble : default_ensemble;
    const int s = add_source(plan.sources, make_source(expr, std::nullopt, std::nullopt));
    plan.jobs.push_back({s, cycle_pattern(l.order)});
    LimitResult r;
    r.name = l.name;
    r.ensemble = expr.to_string();
    r.order = l.order;
    r.expected = analytic_free_cumulants(expr, l.order)[l.order];
    rep.limits.push_back(std::move(r));
  }
  if (plan.jobs.empty()) return rep;

  for (int n : settings.n_grid) {
    const auto points = estimate_entry_cumulants(plan.sources, plan.jobs, n, settings, seed, threads);
    for (std::size_t i = 0; i < rep.scaling.size(); ++i) rep.scaling[i].points.push_back(points[i]);
    for (std::size_t i = 0; i < rep.limits.size(); ++i) {
      auto p = points[rep.scaling.size() + i];
      const double scale = std::pow(static_cast<double>(n), rep.limits[i].order - 1);
      p.cumulant.value *= scale;
      p.cumulant.se *= scale;
      rep.limits[i].points.push_back(p);
    }
  }
  rep.passed = true;
  for (auto& r : rep.scaling) {
    fit_slope(r, settings.slope_tolerance);
    rep.passed = rep.passed && r.pass;
  }
  for (auto& l : rep.limits) {
    const auto& last = l.points.back();
    l.pass_largest = std::abs(last.cumulant.value - l.expected) <= std::max(3.0 * last.cumulant.se, 1e-12);
    l.extrapolated = extrapolate_inverse_n(l.points);
    l.pass = l.pass_largest ||
             (l.extrapolated && std::abs(l.extrapolated->value - l.expected) <= 3.0 * l.extrapolated->se);
    rep.passed = rep.passed && l.pass;
  }
  return rep;
}

}  // namespace

ScalingResult verify_entry_scaling(const ScalingTaskSpec& task, const MatrixExpression& default_ensemble,
                                   const VerifySettings& settings, std::uint64_t seed, int jobs) {
  return run_plan({task}, {}, default_ensemble, settings, seed, jobs).scaling.front();
}

LimitResult free_cumulant_limit_check(const LimitSpec& spec, const MatrixExpression& default_ensemble,
                                      const VerifySettings& settings, std::uint64_t seed, int jobs) {
  return run_plan({}, {spec}, default_ensemble, settings, seed, jobs).limits.front();
}

VerifyReport run_verify(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.ensemble.size() < 1) fail(ErrorKind::Config, "ensemble: at least one matrix is required");
  const auto& s = cfg.verify;
  VerifyReport rep;
  if (!s.scaling.empty() || !s.limits.empty())
    rep = run_plan(s.scaling, s.limits, cfg.ensemble.members.front(), s, cfg.seed, cfg.jobs);
  else
    rep.passed = true;
  if (s.cumulants) {
    rep.cumulants = verify_cumulant_prediction(cfg, cfg.compare.cumulant_orders);
    rep.passed = rep.passed && rep.cumulants->passed;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace nls
