#include "nls/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "nls/config.hpp"
#include "nls/error.hpp"

namespace nls {

using nlohmann::ordered_json;

namespace {

ordered_json estimate(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

ordered_json estimates(const std::vector<Estimate>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& e : v) a.push_back(estimate(e));
  return a;
}

ordered_json matrix(const Eigen::MatrixXd& m) {
  ordered_json a = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

ordered_json function_json(const FunctionDescriptor& f) {
  ordered_json j{{"kind", f.name()}, {"arity", f.arity()}, {"conjectural", f.conjectural()}};
  if (const auto* p = std::get_if<Polynomial>(&f.variant())) {
    ordered_json terms = ordered_json::array();
    for (const auto& [e, c] : p->terms) terms.push_back({{"exps", e}, {"coef", c}});
    j["terms"] = terms;
  }
  return j;
}

ordered_json params_json(const EquivalenceParams& p) {
  ordered_json j{{"theta", p.theta},
                 {"theta_noise", p.theta_noise},
                 {"kappa2_f", p.kappa2f},
                 {"center_shift", p.center_shift},
                 {"discriminant", p.discriminant}};
  if (p.stein_theta_noise) j["stein_theta_noise"] = *p.stein_theta_noise;
  j["conjectural"] = p.conjectural;
  return j;
}

ordered_json prediction_body(const Prediction& p) {
  ordered_json j;
  j["auto_center"] = p.auto_center;
  if (!p.auto_center) j["uncentered_mean"] = p.uncentered_mean;
  j["covariance"] = matrix(p.covariance);
  j["input_means"] = p.input_means;
  ordered_json ic = ordered_json::array();
  for (const auto& c : p.input_cumulants) ic.push_back(c.values);
  j["input_free_cumulants"] = ic;
  j["params"] = params_json(p.params);
  if (p.kappa_f) j["predicted_free_cumulants"] = p.kappa_f->values;
  j["notes"] = p.notes;
  return j;
}

ordered_json check_json(const CumulantCheck& c) {
  return {{"order", c.order},
          {"predicted", c.predicted},
          {"empirical", estimate(c.empirical)},
          {"z", c.z},
          {"relative_error", c.relative_error},
          {"within_3se", c.within_3se},
          {"pass", c.pass}};
}

ordered_json table_json(const CumulantPredictionTable& t) {
  ordered_json rows = ordered_json::array();
  for (const auto& c : t.rows) rows.push_back(check_json(c));
  return {{"name", t.name},         {"n", t.n},   {"realizations", t.realizations},
          {"conjectural", t.conjectural}, {"rows", rows}, {"passed", t.passed}};
}

ordered_json points_json(const std::vector<ScalingPoint>& pts) {
  ordered_json a = ordered_json::array();
  for (const auto& p : pts)
    a.push_back({{"n", p.n},
                 {"value", p.cumulant.value},
                 {"se", p.cumulant.se},
                 {"realizations", p.realizations},
                 {"observations", p.observations}});
  return a;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string prediction_json(const ExperimentConfig& cfg, const Prediction& p) {
  ordered_json j;
  j["name"] = cfg.name;
  ordered_json members = ordered_json::array();
  for (const auto& m : cfg.ensemble.members) members.push_back({{"id", m.id()}, {"expression", m.to_string()}});
  j["ensemble"] = members;
  j["function"] = function_json(cfg.function);
  j["prediction"] = prediction_body(p);
  return dump(j);
}

std::string equivalence_report_json(const EquivalenceReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["n"] = r.n;
  j["realizations"] = r.realizations;
  j["seed"] = r.seed;
  j["trim"] = r.trim;
  j["conjectural"] = r.conjectural;
  j["prediction"] = prediction_body(r.prediction);
  j["moments"] = {{"y", estimates(r.moments_y)}, {"yhat", estimates(r.moments_yhat)}};
  j["free_cumulants"] = {{"y", estimates(r.free_cumulants_y)}, {"yhat", estimates(r.free_cumulants_yhat)}};
  j["classical_cumulants"] = {{"y", estimates(r.classical_cumulants_y)}};
  j["distances"] = {{"ks", r.ks},
                    {"w1", r.w1},
                    {"ks_baseline", r.ks_baseline},
                    {"w1_baseline", r.w1_baseline},
                    {"ks_threshold", r.ks_threshold}};
  ordered_json mc = ordered_json::array();
  for (const auto& c : r.moment_checks)
    mc.push_back({{"order", c.order},
                  {"y", estimate(c.y)},
                  {"yhat", estimate(c.yhat)},
                  {"relative_difference", c.relative_difference},
                  {"pass", c.pass}});
  j["moment_checks"] = mc;
  ordered_json cc = ordered_json::array();
  for (const auto& c : r.cumulant_checks) cc.push_back(check_json(c));
  j["cumulant_checks"] = cc;
  if (r.min_dominance) j["min_dominance"] = *r.min_dominance;
  j["removed"] = r.removed;
  j["pass"] = {{"ks", r.pass_ks}, {"moments", r.pass_moments}, {"dominance", r.pass_dominance}};
  j["passed"] = r.passed;
  return dump(j);
}

std::string cumulant_table_json(const CumulantPredictionTable& t) { return dump(table_json(t)); }

std::string verify_report_json(const VerifyReport& r) {
  ordered_json j;
  ordered_json sc = ordered_json::array();
  for (const auto& s : r.scaling) {
    ordered_json e{{"name", s.name},
                   {"pattern", s.pattern},
                   {"ensemble", s.ensemble},
                   {"function", s.function},
                   {"cycles", s.cycles.cycles},
                   {"cycle_lengths", s.cycles.lengths},
                   {"has_subcycles", s.cycles.has_subcycles},
                   {"points", points_json(s.points)}};
    if (s.slope) e["slope"] = *s.slope;
    if (s.slope_se) e["slope_se"] = *s.slope_se;
    if (s.slope_residual_se) e["slope_residual_se"] = *s.slope_residual_se;
    e["expected_slope"] = s.expected_slope;
    e["vanishing"] = s.vanishing;
    e["sign_constant"] = s.sign_constant;
    e["status"] = s.status;
    e["pass"] = s.pass;
    sc.push_back(e);
  }
  j["scaling"] = sc;
  ordered_json li = ordered_json::array();
  for (const auto& l : r.limits) {
    ordered_json e{{"name", l.name},   {"ensemble", l.ensemble}, {"order", l.order},
                   {"expected", l.expected}, {"points", points_json(l.points)}};
    if (l.extrapolated) e["extrapolated"] = estimate(*l.extrapolated);
    e["pass_largest_n"] = l.pass_largest;
    e["pass"] = l.pass;
    li.push_back(e);
  }
  j["limits"] = li;
  if (r.cumulants) j["cumulants"] = table_json(*r.cumulants);
  j["passed"] = r.passed;
  return dump(j);
}

std::string partitions_text(const std::vector<SetPartition>& parts) {
  std::string s;
  for (const auto& p : parts) s += p.to_string() + "\n";
  return s;
}

std::string histogram_csv(const Histogram& h) {
  std::string s = "bin_left,bin_right,count,density\n";
  for (int b = 0; b < h.bins(); ++b)
    s += fmt(h.edges[b]) + "," + fmt(h.edges[b + 1]) + "," + std::to_string(h.counts[b]) + "," + fmt(h.density(b)) +
         "\n";
  return s;
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) fail(ErrorKind::Io, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

ArtifactWriter::ArtifactWriter(std::string directory) : dir_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + dir_ + "': " + ec.message());
}

void ArtifactWriter::write(const std::string& name, const std::string& content) {
  write_text_file_atomic((std::filesystem::path(dir_) / name).string(), content);
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void ArtifactWriter::write_manifest(const std::string& command, const std::string& config_text, std::uint64_t seed,
                                    double seconds) {
  ordered_json j{{"command", command},
                 {"version", kVersion},
                 {"config_hash", hex64(config_hash(config_text))},
                 {"seed", seed},
                 {"seconds", seconds},
                 {"files", files_}};
  write_text_file_atomic((std::filesystem::path(dir_) / "manifest.json").string(), j.dump(2) + "\n");
}

void write_spectra(ArtifactWriter& out, const SpectraSet& spectra, int bins) {
  std::vector<double> y, yhat;
  for (const auto& s : spectra.y) y.insert(y.end(), s.eigenvalues.begin(), s.eigenvalues.end());
  for (const auto& s : spectra.yhat) yhat.insert(yhat.end(), s.eigenvalues.begin(), s.eigenvalues.end());
  if (y.empty() || yhat.empty()) fail(ErrorKind::InvalidArgument, "write_spectra: no spectra");
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  const auto [hlo, hhi] = std::minmax_element(yhat.begin(), yhat.end());
  const std::pair<double, double> range{std::min(*ylo, *hlo), std::max(*yhi, *hhi)};
  const int b = bins > 0 ? bins : freedman_diaconis_bins(yhat);
  out.write("hist_y.csv", histogram_csv(histogram(y, b, range)));
  out.write("hist_yhat.csv", histogram_csv(histogram(yhat, b, range)));
  for (std::size_t m = 0; m < spectra.inputs.size(); ++m) {
    std::vector<double> x;
    for (const auto& s : spectra.inputs[m]) x.insert(x.end(), s.eigenvalues.begin(), s.eigenvalues.end());
    if (!x.empty()) out.write("hist_x" + std::to_string(m + 1) + ".csv", histogram_csv(histogram(x, bins)));
  }

  ordered_json meta = ordered_json::array();
  auto dump_set = [&](const std::string& tag, const std::vector<SpectralSample>& set) {
    for (std::size_t r = 0; r < set.size(); ++r) {
      const auto& s = set[r];
      std::string text;
      for (double v : s.eigenvalues) text += fmt(v) + "\n";
      const std::string name = "eigs_" + tag + "_" + std::to_string(r) + ".txt";
      out.write(name, text);
      meta.push_back({{"file", name},
                      {"ensemble", s.ensemble_id},
                      {"n", s.n},
                      {"seed", s.seed},
                      {"index", s.index},
                      {"removed", s.removed},
                      {"trim", s.trim_note}});
    }
  };
  for (std::size_t m = 0; m < spectra.inputs.size(); ++m) dump_set("x" + std::to_string(m + 1), spectra.inputs[m]);
  dump_set("y", spectra.y);
  dump_set("yhat", spectra.yhat);
  out.write("eigs.json", meta.dump(2) + "\n");

  out.write("plot.gp",
            "set datafile separator ','\n"
            "set key top right\n"
            "set xlabel 'eigenvalue'\n"
            "set ylabel 'density'\n"
            "set style fill transparent solid 0.4\n"
            "plot 'hist_y.csv' skip 1 using (($1+$2)/2):4 with boxes title 'Y', \\\n"
            "     'hist_yhat.csv' skip 1 using (($1+$2)/2):4 with lines lw 2 title 'Y_hat'\n");
}

}  // namespace nls
