#pragma once

// End-to-end experiments: Y versus its Gaussian equivalent, cumulant
// predictions against simulation, and Monte Carlo scaling of entry
// cumulants.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nls/cumulants.hpp"
#include "nls/ensemble.hpp"
#include "nls/expression.hpp"
#include "nls/gaussian.hpp"
#include "nls/spectral.hpp"

namespace nls {

inline constexpr int kMaxCompareOrder = 8;

struct CompareSettings {
  double ks_factor = 2.0;
  double moment_tolerance = 0.05;
  int moments = 4;
  std::vector<int> cumulant_orders{2, 3, 4};
  double cumulant_tolerance = 0.15;
  bool baseline = true;
};

struct ScalingTaskSpec {
  std::string name;
  std::vector<std::pair<int, int>> pairs;  // abstract 1-based index labels
  std::optional<MatrixExpression> ensemble;  // default: first ensemble member
  std::optional<FunctionDescriptor> function;  // none: raw entries
  std::optional<bool> auto_center;
  double expected_slope = 0.0;
};

struct LimitSpec {
  std::string name;
  int order = 2;
  std::optional<MatrixExpression> ensemble;
};

struct VerifySettings {
  std::vector<int> n_grid{40, 80, 160};
  long long samples = 100000;  // realizations per N
  int relabelings = 64;        // random index relabelings per realization
  int batches = 20;            // batch means for standard errors
  double slope_tolerance = 0.4;
  std::vector<ScalingTaskSpec> scaling;
  std::vector<LimitSpec> limits;
  bool cumulants = false;  // also run verify_cumulant_prediction on the main experiment
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnsembleTuple ensemble;
  FunctionDescriptor function = FunctionDescriptor::identity();
  int n = 2000;
  int realizations = 5;
  std::uint64_t seed = 0;
  std::optional<bool> auto_center;  // default: on for non-polynomial f
  TrimRule trim;
  double dominance = 5.0;  // required lambda_max / lambda_second when trimming topK
  int order = 4;           // predicted / empirical cumulant order
  int bins = 0;            // histogram bins, 0 = Freedman-Diaconis
  int jobs = 0;            // 0 = hardware concurrency
  std::optional<Eigen::MatrixXd> covariance;        // overrides the analytic kappa_2^{(r,s)}
  std::optional<MixedFreeCumulants> mixed;          // user-supplied joint free cumulants
  std::optional<std::vector<double>> theta_override;  // control runs with a wrong surrogate
  CompareSettings compare;
  VerifySettings verify;

  bool effective_auto_center() const { return auto_center.value_or(function.conjectural()); }
  void validate() const;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct Prediction {
  Eigen::MatrixXd covariance;       // kappa_2^{(r,s)} of the inputs
  std::vector<double> input_means;  // kappa_1 of each input
  std::vector<CumulantVector> input_cumulants;  // may be empty when not computable
  std::optional<MixedFreeCumulants> mixed;
  EquivalenceParams params;
  std::optional<CumulantVector> kappa_f;
  std::vector<std::string> notes;
  bool auto_center = false;
  // E[f(g)] when f is left uncentered. Y then has off-diagonal mean
  // E[f]/sqrt(N) and zero diagonal, i.e. a rank-one part plus the bulk
  // shift -E[f]/sqrt(N); the surrogate carries the same shift.
  double uncentered_mean = 0.0;
};

Prediction predict(const ExperimentConfig& cfg);

struct MomentCheck {
  int order = 0;
  Estimate y, yhat;
  double relative_difference = 0.0;
  bool pass = false;
};

struct CumulantCheck {
  int order = 0;
  double predicted = 0.0;
  Estimate empirical;
  double z = 0.0;
  double relative_error = 0.0;
  bool within_3se = false;
  bool pass = false;  // |err| <= max(3 SE, tol |predicted|)
};

struct EquivalenceReport {
  std::string name;
  int n = 0;
  int realizations = 0;
  std::uint64_t seed = 0;
  Prediction prediction;
  std::string trim;
  std::vector<Estimate> moments_y, moments_yhat;
  std::vector<Estimate> free_cumulants_y, free_cumulants_yhat;
  std::vector<Estimate> classical_cumulants_y;
  double ks = 0.0, w1 = 0.0;
  double ks_baseline = 0.0, w1_baseline = 0.0;
  double ks_threshold = 0.0;
  std::vector<MomentCheck> moment_checks;
  std::vector<CumulantCheck> cumulant_checks;
  std::optional<double> min_dominance;
  std::vector<double> removed;
  bool pass_ks = false, pass_moments = false, pass_dominance = true;
  bool conjectural = false;
  bool passed = false;
  double seconds = 0.0;
};

// Per-realization spectra kept for artifact output.
struct SpectraSet {
  std::vector<std::vector<SpectralSample>> inputs;  // [member][realization]
  std::vector<SpectralSample> y, yhat, baseline;
};

EquivalenceReport run_gep_experiment(const ExperimentConfig& cfg, SpectraSet* keep = nullptr);

struct CumulantPredictionTable {
  std::string name;
  int n = 0;
  int realizations = 0;
  std::vector<CumulantCheck> rows;
  bool passed = false;
  bool conjectural = false;
};

// Simulates Y only and compares its empirical free cumulants with the
// prediction, SE by jackknife over realizations.
CumulantPredictionTable verify_cumulant_prediction(const ExperimentConfig& cfg, const std::vector<int>& orders);

struct ScalingPoint {
  int n = 0;
  Estimate cumulant;
  long long realizations = 0;
  long long observations = 0;
};

struct ScalingResult {
  std::string name;
  std::string pattern;
  std::string ensemble;
  std::string function;
  CycleStructure cycles;
  std::vector<ScalingPoint> points;
  std::optional<double> slope, slope_se, slope_residual_se;
  double expected_slope = 0.0;
  bool vanishing = false;  // |c| < 3 SE at every N
  bool sign_constant = false;
  std::string status;
  bool pass = false;
};

struct LimitResult {
  std::string name;
  std::string ensemble;
  int order = 0;
  double expected = 0.0;
  std::vector<ScalingPoint> points;  // cumulant scaled by N^{n-1}
  std::optional<Estimate> extrapolated;  // weighted fit a + b/N, value = a
  bool pass_largest = false;             // within 3 SE at the largest N
  bool pass = false;                     // pass_largest or extrapolation within 3 SE
};

struct VerifyReport {
  std::vector<ScalingResult> scaling;
  std::vector<LimitResult> limits;
  std::optional<CumulantPredictionTable> cumulants;
  bool passed = false;
  double seconds = 0.0;
};

VerifyReport run_verify(const ExperimentConfig& cfg);

// Single-pattern entry points over a shared engine.
ScalingResult verify_entry_scaling(const ScalingTaskSpec& task, const MatrixExpression& default_ensemble,
                                   const VerifySettings& settings, std::uint64_t seed, int jobs = 0);
LimitResult free_cumulant_limit_check(const LimitSpec& spec, const MatrixExpression& default_ensemble,
                                      const VerifySettings& settings, std::uint64_t seed, int jobs = 0);

// Runs fn(i) for i in [0, count) on `jobs` threads (0 = hardware
// concurrency); rethrows the first exception.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);
int resolve_jobs(int jobs);

}  // namespace nls
