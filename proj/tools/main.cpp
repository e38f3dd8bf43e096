// nonlin-spectra: command-line front end over the C API.
//
// Exit codes: 0 success or pass, 1 comparison failed, 2 configuration or
// usage error, 3 numeric failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "nls/c_api.h"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
  std::optional<int> realizations;
  std::optional<int> jobs;
  std::optional<long long> samples;
  std::string out;
};

int report_error(nls_status s) {
  std::cerr << "error: " << nls_last_error() << "\n";
  return nls_exit_code(s);
}

// Prints and releases a report string.
void emit(nls_string* s) {
  std::fwrite(nls_string_data(s), 1, nls_string_size(s), stdout);
  nls_string_destroy(s);
}

class Experiment {
 public:
  ~Experiment() { nls_experiment_destroy(e_); }
  nls_status load(const Common& c) {
    nls_status s = nls_experiment_from_file(c.config.c_str(), &e_);
    if (s == NLS_OK && c.seed) s = nls_experiment_set_seed(e_, *c.seed);
    if (s == NLS_OK && c.n) s = nls_experiment_set_n(e_, *c.n);
    if (s == NLS_OK && c.realizations) s = nls_experiment_set_realizations(e_, *c.realizations);
    if (s == NLS_OK && c.jobs) s = nls_experiment_set_jobs(e_, *c.jobs);
    if (s == NLS_OK && c.samples) s = nls_experiment_set_samples(e_, *c.samples);
    if (s == NLS_OK && !c.out.empty()) s = nls_experiment_set_output_dir(e_, c.out.c_str());
    return s;
  }
  nls_experiment* get() { return e_; }

 private:
  nls_experiment* e_ = nullptr;
};

void add_common(CLI::App* app, Common& c, bool seed_required, bool with_out) {
  app->add_option("--config,-c", c.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  auto* seed = app->add_option("--seed", c.seed, "Master seed (u64)");
  if (seed_required) seed->required();
  app->add_option("--n", c.n, "Matrix size override");
  app->add_option("--realizations,-R", c.realizations, "Realizations override");
  app->add_option("--jobs,-j", c.jobs, "Worker threads (0 = all cores)");
  if (with_out) app->add_option("--out,-o", c.out, "Output directory for artifacts");
}

int run_predict(const Common& c) {
  Experiment e;
  if (auto s = e.load(c); s != NLS_OK) return report_error(s);
  nls_string* out = nullptr;
  if (auto s = nls_predict(e.get(), &out); s != NLS_OK) return report_error(s);
  emit(out);
  return 0;
}

int run_simulate(Common c) {
  if (!c.seed) {
    std::random_device rd;
    c.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "seed: " << *c.seed << " (generated)\n";
  }
  if (c.out.empty()) c.out = "out";
  Experiment e;
  if (auto s = e.load(c); s != NLS_OK) return report_error(s);
  nls_string* out = nullptr;
  if (auto s = nls_simulate(e.get(), &out); s != NLS_OK) return report_error(s);
  emit(out);
  std::cerr << "artifacts written to " << c.out << "\n";
  return 0;
}

int run_compare(const Common& c) {
  Experiment e;
  if (auto s = e.load(c); s != NLS_OK) return report_error(s);
  nls_string* out = nullptr;
  int passed = 0;
  if (auto s = nls_compare(e.get(), &out, &passed); s != NLS_OK) return report_error(s);
  emit(out);
  std::cerr << (passed ? "PASS" : "FAIL") << "\n";
  return passed ? 0 : 1;
}

int run_verify(const Common& c) {
  Experiment e;
  if (auto s = e.load(c); s != NLS_OK) return report_error(s);
  nls_string* out = nullptr;
  int passed = 0;
  if (auto s = nls_verify(e.get(), &out, &passed); s != NLS_OK) return report_error(s);
  emit(out);
  std::cerr << (passed ? "PASS" : "FAIL") << "\n";
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra of entrywise nonlinear random matrices and their Gaussian equivalents"};
  app.set_version_flag("--version", std::string(nls_version()));
  app.require_subcommand(1);

  Common predict_opts, simulate_opts, compare_opts, verify_opts;
  auto* predict = app.add_subcommand("predict", "Analytic surrogate parameters and free cumulants");
  add_common(predict, predict_opts, false, true);
  auto* simulate = app.add_subcommand("simulate", "Sample spectra of X, Y and Y_hat; write histograms");
  add_common(simulate, simulate_opts, false, true);
  auto* compare = app.add_subcommand("compare", "Compare Y with its Gaussian equivalent");
  add_common(compare, compare_opts, true, true);
  auto* verify = app.add_subcommand("verify", "Monte Carlo scaling of entry cumulants");
  add_common(verify, verify_opts, true, true);
  verify->add_option("--samples", verify_opts.samples, "Realizations per N");

  auto* parts = app.add_subcommand("partitions", "Set partition utilities");
  parts->require_subcommand(1);
  std::string type = "all";
  int count_n = 0;
  auto* count = parts->add_subcommand("count", "Number of partitions of [n]");
  count->add_option("--type", type, "all, pairings or nc")->check(CLI::IsMember({"all", "pairings", "nc"}));
  count->add_option("n", count_n)->required();
  std::string list_type = "all";
  int list_n = 0;
  auto* list = parts->add_subcommand("list", "List partitions of [n]");
  list->add_option("--type", list_type, "all, pairings or nc")->check(CLI::IsMember({"all", "pairings", "nc"}));
  list->add_option("n", list_n)->required();
  std::string lower, upper;
  int mobius_n = 0;
  auto* mobius = parts->add_subcommand("mobius", "Moebius function mu(lower, upper)");
  mobius->add_option("lower", lower, "Partition like {1,2}{3}, or 0 for the bottom")->required();
  mobius->add_option("upper", upper, "Partition, or 1 for the top")->required();
  mobius->add_option("--n", mobius_n, "Size of the ground set (needed for 0 and 1)");
  std::string entries;
  auto* check = parts->add_subcommand("check", "Cycle structure of matrix entries, e.g. 12,23,31");
  check->add_option("entries", entries)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*predict) return run_predict(predict_opts);
  if (*simulate) return run_simulate(simulate_opts);
  if (*compare) return run_compare(compare_opts);
  if (*verify) return run_verify(verify_opts);

  nls_status s = NLS_OK;
  if (*count) {
    unsigned long long v = 0;
    s = nls_partitions_count(type.c_str(), count_n, &v);
    if (s == NLS_OK) std::cout << v << "\n";
  } else if (*list) {
    nls_string* out = nullptr;
    s = nls_partitions_list(list_type.c_str(), list_n, &out);
    if (s == NLS_OK) emit(out);
  } else if (*mobius) {
    long long v = 0;
    s = nls_partitions_mobius(lower.c_str(), upper.c_str(), mobius_n, &v);
    if (s == NLS_OK) std::cout << v << "\n";
  } else if (*check) {
    nls_string* out = nullptr;
    s = nls_cycle_structure(entries.c_str(), &out);
    if (s == NLS_OK) emit(out);
  }
  return s == NLS_OK ? 0 : report_error(s);
}
