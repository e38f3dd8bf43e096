#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nls/config.hpp"
#include "nls/error.hpp"
#include "nls/report.hpp"

using namespace nls;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("nls_test_report_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("histogram csv") {
  const auto h = histogram(std::vector<double>{0.0, 1.0, 2.0, 3.0}, 2, std::make_pair(0.0, 4.0));
  CHECK(histogram_csv(h) == "bin_left,bin_right,count,density\n0,2,2,0.25\n2,4,2,0.25\n");
  const auto fine = histogram(std::vector<double>{0.1}, 1, std::make_pair(0.0, 0.1));
  // Full round-trip precision.
  CHECK(histogram_csv(fine).find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("partitions text") {
  CHECK(partitions_text(enumerate_partitions(2)) == "{1,2}\n{1}{2}\n");
  CHECK(partitions_text({}) == "");
}

TEST_CASE("atomic writes and the manifest") {
  const auto dir = scratch("artifacts");
  ArtifactWriter w(dir.string());
  CHECK(fs::is_directory(dir));
  w.write("a.txt", "first");
  w.write("a.txt", "second");
  w.write("b.txt", "x");
  CHECK(slurp(dir / "a.txt") == "second");
  CHECK(w.files() == std::vector<std::string>{"a.txt", "b.txt"});
  CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));

  w.write_manifest("compare", "{}", 42, 1.5);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["command"] == "compare");
  CHECK(m["seed"] == 42);
  CHECK(m["version"] == kVersion);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m["files"].size() == 2);
  fs::remove_all(dir);

  CHECK_THROWS_AS(write_text_file_atomic("/nonexistent/dir/x.txt", "x"), Error);
}

TEST_CASE("reports are deterministic JSON") {
  auto cfg = parse_config(R"({
    "name": "r",
    "ensemble": {"id": "X", "terms": [{"word": "A"}]},
    "function": {"kind": "relu"},
    "run": {"n": 60, "realizations": 2}
  })");
  cfg.seed = 3;
  const auto pj = nlohmann::json::parse(prediction_json(cfg, predict(cfg)));
  CHECK(pj["prediction"]["params"]["theta"][0].get<double>() == doctest::Approx(0.5));

  SpectraSet spectra;
  const auto r = run_gep_experiment(cfg, &spectra);
  const auto text = equivalence_report_json(r);
  CHECK(text == equivalence_report_json(run_gep_experiment(cfg)));
  const auto j = nlohmann::json::parse(text);
  CHECK(j["name"] == "r");
  CHECK(j["seed"] == 3);
  CHECK(j["passed"].is_boolean());
  CHECK(j["distances"]["ks"].get<double>() == doctest::Approx(r.ks));
  CHECK(j.contains("moment_checks"));
  CHECK_FALSE(j.contains("seconds"));

  const auto dir = scratch("spectra");
  ArtifactWriter w(dir.string());
  write_spectra(w, spectra, 20);
  for (const char* f : {"hist_y.csv", "hist_yhat.csv", "hist_x1.csv", "eigs_y_0.txt", "eigs_yhat_1.txt",
                        "eigs_x1_0.txt", "eigs.json", "plot.gp"})
    CHECK(fs::exists(dir / f));
  // Both pooled histograms share one grid.
  const auto hy = slurp(dir / "hist_y.csv"), hh = slurp(dir / "hist_yhat.csv");
  CHECK(hy.substr(0, hy.find(',', 33)) == hh.substr(0, hh.find(',', 33)));
  std::istringstream lines(slurp(dir / "eigs_y_0.txt"));
  int count = 0;
  for (std::string line; std::getline(lines, line);) ++count;
  CHECK(count == 60);
  fs::remove_all(dir);
}
