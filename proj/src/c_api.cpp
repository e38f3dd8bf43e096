#include "nls/c_api.h"

#include <cctype>
#include <chrono>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nls/config.hpp"
#include "nls/error.hpp"
#include "nls/lab.hpp"
#include "nls/partition.hpp"
#include "nls/report.hpp"

struct nls_experiment {
  std::string text;
  std::string origin;
  nls::ExperimentConfig cfg;
  bool seed_set = false;
  std::string out_dir;
};

struct nls_string {
  std::string value;
};

namespace {

thread_local std::string last_error;

nls_status status_of(nls::ErrorKind k) {
  switch (k) {
    case nls::ErrorKind::InvalidArgument: return NLS_ERR_INVALID_ARGUMENT;
    case nls::ErrorKind::SizeLimit: return NLS_ERR_SIZE_LIMIT;
    case nls::ErrorKind::Config: return NLS_ERR_CONFIG;
    case nls::ErrorKind::Numeric: return NLS_ERR_NUMERIC;
    case nls::ErrorKind::Io: return NLS_ERR_IO;
    case nls::ErrorKind::Internal: return NLS_ERR_INTERNAL;
  }
  return NLS_ERR_INTERNAL;
}

template <class F>
nls_status guarded(F&& fn) {
  try {
    fn();
    last_error.clear();
    return NLS_OK;
  } catch (const nls::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NLS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NLS_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return NLS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) nls::fail(nls::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

void need_seed(const nls_experiment* e) {
  if (!e->seed_set) nls::fail(nls::ErrorKind::InvalidArgument, "a seed is required; set it explicitly");
}

nls_string* make_string(std::string s) { return new nls_string{std::move(s)}; }

nls::SetPartition partition_arg(const std::string& s, int n) {
  if (s == "0" || s == "1") {
    if (n < 1 || n > nls::kMaxPartitionSize)
      nls::fail(nls::ErrorKind::SizeLimit, "n must be in [1, " + std::to_string(nls::kMaxPartitionSize) + "]");
    return s == "0" ? nls::SetPartition::bottom(n) : nls::SetPartition::top(n);
  }
  auto p = nls::SetPartition::parse(s);
  if (n > 0 && p.size() != n)
    nls::fail(nls::ErrorKind::InvalidArgument, "partition " + s + " is not a partition of [" + std::to_string(n) + "]");
  return p;
}

std::vector<nls::IndexPair> entries_arg(const std::string& text) {
  std::vector<nls::IndexPair> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    int a = 0, b = 0;
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos) {
        a = std::stoi(item.substr(0, dash));
        b = std::stoi(item.substr(dash + 1));
      } else if (item.size() == 2 && std::isdigit(static_cast<unsigned char>(item[0])) &&
                 std::isdigit(static_cast<unsigned char>(item[1]))) {
        a = item[0] - '0';
        b = item[1] - '0';
      } else {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      nls::fail(nls::ErrorKind::InvalidArgument, "cannot parse entry '" + item + "'; use 12 or 1-2");
    }
    if (a < 1 || b < 1) nls::fail(nls::ErrorKind::InvalidArgument, "entry indices are 1-based");
    out.push_back({a, b});
  }
  if (out.empty()) nls::fail(nls::ErrorKind::InvalidArgument, "no entries given");
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

extern "C" {

const char* nls_version(void) { return nls::kVersion; }

const char* nls_last_error(void) { return last_error.c_str(); }

int nls_exit_code(nls_status status) {
  switch (status) {
    case NLS_OK: return 0;
    case NLS_ERR_NUMERIC:
    case NLS_ERR_INTERNAL: return 3;
    default: return 2;
  }
}

nls_status nls_experiment_from_file(const char* path, nls_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto e = std::make_unique<nls_experiment>();
    e->text = nls::read_text_file(path);
    e->origin = path;
    e->cfg = nls::parse_config(e->text, path);
    *out = e.release();
  });
}

nls_status nls_experiment_from_json(const char* text, nls_experiment** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    auto e = std::make_unique<nls_experiment>();
    e->text = text;
    e->origin = "<json>";
    e->cfg = nls::parse_config(e->text, e->origin);
    *out = e.release();
  });
}

void nls_experiment_destroy(nls_experiment* e) { delete e; }

nls_status nls_experiment_set_seed(nls_experiment* e, uint64_t seed) {
  return guarded([&] {
    need(e, "experiment");
    e->cfg.seed = seed;
    e->seed_set = true;
  });
}

nls_status nls_experiment_set_n(nls_experiment* e, int n) {
  return guarded([&] {
    need(e, "experiment");
    auto cfg = e->cfg;
    cfg.n = n;
    cfg.validate();
    e->cfg = std::move(cfg);
  });
}

nls_status nls_experiment_set_realizations(nls_experiment* e, int realizations) {
  return guarded([&] {
    need(e, "experiment");
    auto cfg = e->cfg;
    cfg.realizations = realizations;
    cfg.validate();
    e->cfg = std::move(cfg);
  });
}

nls_status nls_experiment_set_jobs(nls_experiment* e, int jobs) {
  return guarded([&] {
    need(e, "experiment");
    if (jobs < 0) nls::fail(nls::ErrorKind::InvalidArgument, "jobs must be nonnegative");
    e->cfg.jobs = jobs;
  });
}

nls_status nls_experiment_set_samples(nls_experiment* e, long long samples) {
  return guarded([&] {
    need(e, "experiment");
    if (samples < 2) nls::fail(nls::ErrorKind::InvalidArgument, "samples must be at least 2");
    e->cfg.verify.samples = samples;
  });
}

nls_status nls_experiment_set_output_dir(nls_experiment* e, const char* dir) {
  return guarded([&] {
    need(e, "experiment");
    e->out_dir = dir ? dir : "";
  });
}

nls_status nls_predict(nls_experiment* e, nls_string** report) {
  return guarded([&] {
    need(e, "experiment");
    need(report, "report");
    const auto start = std::chrono::steady_clock::now();
    const auto json = nls::prediction_json(e->cfg, nls::predict(e->cfg));
    if (!e->out_dir.empty()) {
      nls::ArtifactWriter w(e->out_dir);
      w.write("prediction.json", json);
      w.write_manifest("predict", e->text, e->cfg.seed, seconds_since(start));
    }
    *report = make_string(json);
  });
}

nls_status nls_simulate(nls_experiment* e, nls_string** report) {
  return guarded([&] {
    need(e, "experiment");
    need(report, "report");
    need_seed(e);
    const auto start = std::chrono::steady_clock::now();
    nls::SpectraSet spectra;
    const auto rep = nls::run_gep_experiment(e->cfg, &spectra);
    const auto json = nls::equivalence_report_json(rep);
    if (!e->out_dir.empty()) {
      nls::ArtifactWriter w(e->out_dir);
      nls::write_spectra(w, spectra, e->cfg.bins);
      w.write("report.json", json);
      w.write_manifest("simulate", e->text, e->cfg.seed, seconds_since(start));
    }
    *report = make_string(json);
  });
}

nls_status nls_compare(nls_experiment* e, nls_string** report, int* passed) {
  return guarded([&] {
    need(e, "experiment");
    need(report, "report");
    need(passed, "passed");
    need_seed(e);
    const auto start = std::chrono::steady_clock::now();
    const auto rep = nls::run_gep_experiment(e->cfg);
    const auto json = nls::equivalence_report_json(rep);
    if (!e->out_dir.empty()) {
      nls::ArtifactWriter w(e->out_dir);
      w.write("report.json", json);
      w.write_manifest("compare", e->text, e->cfg.seed, seconds_since(start));
    }
    *passed = rep.passed ? 1 : 0;
    *report = make_string(json);
  });
}

nls_status nls_verify(nls_experiment* e, nls_string** report, int* passed) {
  return guarded([&] {
    need(e, "experiment");
    need(report, "report");
    need(passed, "passed");
    need_seed(e);
    const auto start = std::chrono::steady_clock::now();
    const auto rep = nls::run_verify(e->cfg);
    const auto json = nls::verify_report_json(rep);
    if (!e->out_dir.empty()) {
      nls::ArtifactWriter w(e->out_dir);
      w.write("verify.json", json);
      w.write_manifest("verify", e->text, e->cfg.seed, seconds_since(start));
    }
    *passed = rep.passed ? 1 : 0;
    *report = make_string(json);
  });
}

const char* nls_string_data(const nls_string* s) { return s ? s->value.c_str() : ""; }

size_t nls_string_size(const nls_string* s) { return s ? s->value.size() : 0; }

void nls_string_destroy(nls_string* s) { delete s; }

nls_status nls_partitions_count(const char* type, int n, unsigned long long* out) {
  return guarded([&] {
    need(type, "type");
    need(out, "out");
    const std::string t = type;
    if (n < 0) nls::fail(nls::ErrorKind::InvalidArgument, "n must be nonnegative");
    if (t == "all") {
      *out = nls::bell_number(n);
    } else if (t == "nc") {
      *out = nls::catalan_number(n);
    } else if (t == "pairings") {
      *out = n % 2 ? 0ULL : nls::double_factorial(n - 1);
    } else {
      nls::fail(nls::ErrorKind::InvalidArgument, "type must be all, pairings or nc");
    }
  });
}

nls_status nls_partitions_list(const char* type, int n, nls_string** out) {
  return guarded([&] {
    need(type, "type");
    need(out, "out");
    const std::string t = type;
    std::vector<nls::SetPartition> parts;
    if (t == "all") parts = nls::enumerate_partitions(n);
    else if (t == "nc") parts = nls::enumerate_noncrossing(n);
    else if (t == "pairings") parts = nls::enumerate_pairings(n);
    else nls::fail(nls::ErrorKind::InvalidArgument, "type must be all, pairings or nc");
    *out = make_string(nls::partitions_text(parts));
  });
}

nls_status nls_partitions_mobius(const char* lower, const char* upper, int n, long long* out) {
  return guarded([&] {
    need(lower, "lower");
    need(upper, "upper");
    need(out, "out");
    const auto lo = partition_arg(lower, n);
    const auto hi = partition_arg(upper, n > 0 ? n : lo.size());
    *out = nls::mobius(lo, hi);
  });
}

nls_status nls_cycle_structure(const char* entries, nls_string** out) {
  return guarded([&] {
    need(entries, "entries");
    need(out, "out");
    const auto cs = nls::cycle_structure(entries_arg(entries));
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& cyc : cs.arrangement) {
      nlohmann::ordered_json c = nlohmann::ordered_json::array();
      for (const auto& p : cyc) c.push_back({p.row, p.col});
      arr.push_back(c);
    }
    nlohmann::ordered_json shared = nlohmann::ordered_json::array();
    for (const auto& p : cs.shared_edges) shared.push_back({p.row, p.col});
    nlohmann::ordered_json j{{"cycles", cs.cycles},         {"lengths", cs.lengths},
                             {"has_subcycles", cs.has_subcycles}, {"shared_edges", shared},
                             {"arrangement", arr},          {"diagnostic", cs.diagnostic}};
    *out = make_string(j.dump(2) + "\n");
  });
}

}  // extern "C"
