#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpmap/io.hpp"

namespace rpmap {

/// An error tagged with the pipeline stage that raised it. Stage "config"
/// maps to exit status 2, any other stage to 3.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return stage_ == "config" ? 2 : 3; }

 private:
  std::string stage_;
};

inline const std::vector<std::string> kAllChecks{"exact",  "eigenvalues", "eigenfunctions", "hitting_times",
                                                 "gap",    "trend",       "exponent",       "certificates"};

/// Every field can be set from a JSON config file using the key in the
/// comment; command-line flags override the file.
struct PipelineConfig {
  ModelSpec model;                                  // model: name or object
  std::optional<std::filesystem::path> model_file;  // model_file
  std::vector<int> grid{200};                       // grid
  double dt = 0.01;                                 // dt
  int samples_per_cell = 2000;                      // samples_per_cell
  std::uint64_t seed = 1;                           // seed
  double max_return_time = 100.0;                   // max_return_time
  int min_row_samples = 1000;                       // min_row_samples
  double delta = 0.25;                              // delta
  std::vector<double> sigma2{0.02, 0.015, 0.01};    // sigma2
  std::filesystem::path output = "rpmap_out";       // output
  std::vector<std::string> checks = kAllChecks;     // checks
  std::vector<int> iterates{1, 4, 16};              // iterates
  unsigned threads = 0;                             // threads

  bool wants(const std::string& check) const;
};

/// Overlays the keys present in `j` on `base`. Unknown keys are errors.
PipelineConfig config_from_json(const Json& j, PipelineConfig base = {});
Json to_json(const PipelineConfig& c);
/// Resolves model_file into `model` and checks parameter ranges. Throws
/// StageError("config").
void finalize(PipelineConfig& c);

/// Orbit search from each guess (default: the catalog's stable and unstable
/// orbits).
std::vector<PeriodicOrbit> find_orbits(const SdeModel& model, const std::vector<State>& guesses = {});

/// Kernel at sigma^2 with balls from the model catalog and the analytic
/// hierarchy when one is available. A structure that cannot be built is left
/// out and the reason stored in build["structure_error"].
KernelArchive build_archive(const PipelineConfig& c, double sigma2);

/// Theorem checks on one kernel (eigenvalues, eigenfunctions, hitting times
/// for k = 1..N-1), filtered by c.checks.
std::vector<VerificationReport> theorem_reports(const PipelineConfig& c, const DiscretizedKernel& K,
                                                const MetastableStructure& s);

/// Probe sets for the exact suite: the balls when a structure exists,
/// otherwise the first and last quarter of the carried states.
std::vector<CellSet> probe_sets(const KernelArchive& a);

struct PipelineResult {
  bool pass = true;
  Json summary;
};

/// orbits -> kernel per sigma^2 -> structure -> spectra -> reports, all
/// persisted under c.output. Per-kernel theorem checks are asserted at the
/// smallest sigma^2 only; the other levels are reported.
PipelineResult run_pipeline(const PipelineConfig& c);

/// Parses "ball:<n>" (metastable order, 1-based) or "cells:<a>-<b>,<c>,...".
CellSet parse_set(const std::string& spec, const KernelArchive& a);

/// Label used in artifact names for a noise level.
std::string sigma2_tag(double sigma2);

}  // namespace rpmap
