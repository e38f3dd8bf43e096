#pragma once

// JSON reports, histogram CSVs, eigenvalue dumps and the run manifest.
// Reports depend only on (config, seed); timings live in the manifest.

#include <cstdint>
#include <string>
#include <vector>

#include "nls/lab.hpp"
#include "nls/partition.hpp"
#include "nls/spectral.hpp"

namespace nls {

inline constexpr const char* kVersion = "0.1.0";

std::string prediction_json(const ExperimentConfig& cfg, const Prediction& p);
std::string equivalence_report_json(const EquivalenceReport& r);
std::string verify_report_json(const VerifyReport& r);
std::string cumulant_table_json(const CumulantPredictionTable& t);
// One canonical partition per line, e.g. {1,3}{2}.
std::string partitions_text(const std::vector<SetPartition>& parts);

// Columns bin_left,bin_right,count,density.
std::string histogram_csv(const Histogram& h);

// Collects output files in one directory; each file is written to a
// temporary name and renamed into place.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string directory);
  const std::string& directory() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  const std::vector<std::string>& files() const { return files_; }

  // manifest.json: command, config hash, seed, version, timings, files.
  void write_manifest(const std::string& command, const std::string& config_text, std::uint64_t seed,
                      double seconds);

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

// Pooled histograms of Y and Y_hat on a common grid, one per input, per-realization
// eigenvalue dumps with JSON metadata, and a gnuplot script.
void write_spectra(ArtifactWriter& out, const SpectraSet& spectra, int bins);

void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace nls
