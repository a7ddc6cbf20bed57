#include "rpmap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rpmap/error.hpp"

namespace rpmap {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw StageError("config", what); }

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

Json report_list(const std::vector<VerificationReport>& reports) {
  Json a = Json::array();
  for (const auto& r : reports) a.push_back(to_json(r));
  return a;
}

std::size_t parse_index(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::InvalidArgument, "bad index \"" + s + "\"");
  return static_cast<std::size_t>(v);
}

}  // namespace

bool PipelineConfig::wants(const std::string& check) const {
  return std::find(checks.begin(), checks.end(), check) != checks.end();
}

PipelineConfig config_from_json(const Json& j, PipelineConfig c) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known{"model",           "model_file",      "grid",   "dt",
                                           "samples_per_cell", "seed",           "max_return_time",
                                           "min_row_samples",  "delta",          "sigma2", "output",
                                           "checks",           "iterates",       "threads"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) config_error("unknown config key \"" + item.key() + "\"");
  }
  try {
    if (j.contains("model")) c.model = model_spec_from_json(j.at("model"));
    if (j.contains("model_file")) c.model_file = j.at("model_file").get<std::string>();
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<int>>();
    if (j.contains("dt")) c.dt = j.at("dt").get<double>();
    if (j.contains("samples_per_cell")) c.samples_per_cell = j.at("samples_per_cell").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("max_return_time")) c.max_return_time = j.at("max_return_time").get<double>();
    if (j.contains("min_row_samples")) c.min_row_samples = j.at("min_row_samples").get<int>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("sigma2")) {
      c.sigma2 = j.at("sigma2").is_array() ? j.at("sigma2").get<std::vector<double>>()
                                           : std::vector<double>{j.at("sigma2").get<double>()};
    }
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("checks")) c.checks = j.at("checks").get<std::vector<std::string>>();
    if (j.contains("iterates")) c.iterates = j.at("iterates").get<std::vector<int>>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  return c;
}

Json to_json(const PipelineConfig& c) {
  Json j;
  j["model"] = to_json(c.model);
  j["grid"] = c.grid;
  j["dt"] = c.dt;
  j["samples_per_cell"] = c.samples_per_cell;
  j["seed"] = c.seed;
  j["max_return_time"] = c.max_return_time;
  j["min_row_samples"] = c.min_row_samples;
  j["delta"] = c.delta;
  j["sigma2"] = c.sigma2;
  j["output"] = c.output.string();
  j["checks"] = c.checks;
  j["iterates"] = c.iterates;
  return j;
}

void finalize(PipelineConfig& c) {
  if (c.model_file) {
    if (!std::filesystem::exists(*c.model_file)) config_error("model file " + c.model_file->string() + " not found");
    try {
      c.model = read_model_file(*c.model_file);
    } catch (const std::exception& e) {
      config_error(e.what());
    }
  }
  if (c.grid.empty() || std::any_of(c.grid.begin(), c.grid.end(), [](int n) { return n < 1; })) {
    config_error("grid counts must be positive");
  }
  if (!(c.dt > 0.0 && c.dt <= 0.1)) config_error("dt must lie in (0, 0.1]");
  if (c.samples_per_cell < 100) config_error("samples_per_cell must be at least 100");
  if (!(c.max_return_time > 0.0)) config_error("max_return_time must be positive");
  if (c.min_row_samples < 1) config_error("min_row_samples must be positive");
  if (!(c.delta > 0.0)) config_error("delta must be positive");
  if (c.sigma2.empty()) config_error("sigma2 schedule is empty");
  for (double s : c.sigma2) {
    if (!(s > 0.0 && s < 1.0)) config_error("sigma2 values must lie in (0, 1)");
  }
  for (const std::string& check : c.checks) {
    if (std::find(kAllChecks.begin(), kAllChecks.end(), check) == kAllChecks.end()) {
      config_error("unknown check \"" + check + "\"");
    }
  }
  for (int m : c.iterates) {
    if (m < 1) config_error("iterates must be positive");
  }
  try {
    make_model(c.model);
  } catch (const std::exception& e) {
    config_error(e.what());
  }
}

std::vector<PeriodicOrbit> find_orbits(const SdeModel& model, const std::vector<State>& guesses) {
  std::vector<State> starts = guesses;
  if (starts.empty()) {
    starts = model.stable_orbits;
    starts.insert(starts.end(), model.unstable_orbits.begin(), model.unstable_orbits.end());
    if (starts.empty()) throw Error(ErrorCode::InvalidArgument, "no orbit guesses given");
  }
  std::vector<PeriodicOrbit> out;
  for (const State& g : starts) out.push_back(find_periodic_orbit(model, g));
  return out;
}

std::string sigma2_tag(double sigma2) { return "s2_" + format_double(sigma2); }

KernelArchive build_archive(const PipelineConfig& c, double sigma2) {
  const SdeModel model = make_model(c.model).with_sigma(std::sqrt(sigma2));
  KernelArchive a;
  a.model = c.model;
  a.model->sigma = model.sigma;
  BuildOptions options;
  options.max_return_time = c.max_return_time;
  options.min_row_samples = c.min_row_samples;
  options.threads = c.threads;
  a.kernel = stage("kernel", [&] {
    return build_kernel(model, section_grid(model, c.grid), c.samples_per_cell, c.dt, c.seed, options);
  });
  a.build["sigma2"] = sigma2;
  a.build["samples_per_cell"] = c.samples_per_cell;
  a.build["dt"] = c.dt;
  a.build["seed"] = c.seed;
  a.build["max_return_time"] = c.max_return_time;
  a.build["delta"] = c.delta;
  try {
    MetastableStructure s = detect_balls(a.kernel, model, c.delta);
    if (model.barrier_exponents.size() > 0 && s.size() > 1) {
      apply_hierarchy(s, model.barrier_exponents, "analytic");
    }
    a.structure = std::move(s);
  } catch (const Error& e) {
    a.build["structure_error"] = e.what();
  }
  return a;
}

std::vector<VerificationReport> theorem_reports(const PipelineConfig& c, const DiscretizedKernel& K,
                                                const MetastableStructure& s) {
  std::vector<VerificationReport> out;
  if (c.wants("eigenvalues")) out.push_back(check_eigenvalues(K, s, K.sigma));
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (c.wants("eigenfunctions")) out.push_back(check_eigenfunctions(K, s, k));
    if (c.wants("hitting_times")) out.push_back(check_hitting_times(K, s, k));
  }
  return out;
}

std::vector<CellSet> probe_sets(const KernelArchive& a) {
  if (a.structure) return a.structure->balls;
  const std::size_t n = a.kernel.size();
  const std::size_t q = std::max<std::size_t>(1, n / 4);
  CellSet first(a.kernel.states.begin(), a.kernel.states.begin() + static_cast<std::ptrdiff_t>(q));
  CellSet last(a.kernel.states.end() - static_cast<std::ptrdiff_t>(q), a.kernel.states.end());
  if (n < 2) return {first};
  return {first, last};
}

CellSet parse_set(const std::string& spec, const KernelArchive& a) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "set spec needs a kind: " + spec);
  const std::string kind = spec.substr(0, colon), body = spec.substr(colon + 1);
  if (kind == "ball") {
    if (!a.structure) throw Error(ErrorCode::InvalidArgument, "kernel file has no ball structure");
    const std::size_t i = parse_index(body);
    if (i < 1 || i > a.structure->size()) throw Error(ErrorCode::InvalidArgument, "ball index out of range");
    return a.structure->ordered_ball(i - 1);
  }
  if (kind != "cells") throw Error(ErrorCode::InvalidArgument, "unknown set kind \"" + kind + "\"");
  CellSet out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    const std::size_t lo = parse_index(item.substr(0, dash));
    const std::size_t hi = dash == std::string::npos ? lo : parse_index(item.substr(dash + 1));
    for (std::size_t cell = lo; cell <= hi; ++cell) out.push_back(cell);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  a.kernel.positions(out);
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& c) {
  namespace fs = std::filesystem;
  PipelineResult result;
  Json& summary = result.summary;
  auto record = [&](const std::string& key, bool pass, bool asserted) {
    summary["checks"][key] = {{"pass", pass}, {"asserted", asserted}};
    if (asserted && !pass) result.pass = false;
  };
  stage("output", [&] {
    fs::create_directories(c.output);
    write_json(c.output / "config.json", to_json(c));
    return 0;
  });

  const SdeModel model = stage("orbits", [&] { return make_model(c.model); });
  const std::vector<PeriodicOrbit> orbits = stage("orbits", [&] { return find_orbits(model); });
  Json orbit_json = Json::array();
  for (const auto& o : orbits) orbit_json.push_back(to_json(o));
  write_json(c.output / "orbits.json", orbit_json);

  std::vector<double> schedule = c.sigma2;
  std::sort(schedule.begin(), schedule.end(), std::greater<>());
  std::vector<KernelArchive> archives;
  for (double s2 : schedule) {
    const std::string tag = sigma2_tag(s2);
    KernelArchive a = build_archive(c, s2);
    write_kernel_file(c.output / ("kernel_" + tag + ".json"), a);
    write_kernel_csv(c.output / ("kernel_" + tag + ".csv"), a.kernel);
    stage("spectrum", [&] {
      const std::size_t count = std::min<std::size_t>(a.kernel.size(), a.structure ? a.structure->size() + 2 : 4);
      write_spectrum_csv(c.output / ("spectrum_" + tag + ".csv"), sorted_eigenvalues(a.kernel.matrix));
      write_eigenvectors_csv(c.output / ("eigenvectors_" + tag + ".csv"), a.kernel,
                             spectral_decomposition(a.kernel, count));
      return 0;
    });
    if (!a.structure) {
      record(tag + ".structure", false, true);
      archives.push_back(std::move(a));
      continue;
    }
    const bool asserted_level = s2 == schedule.back();
    Json reports;
    stage("verify", [&] {
      if (c.wants("exact")) {
        const auto exact = run_exact_suite(a.kernel, probe_sets(a), a.structure->size(), c.seed);
        reports["exact"] = report_list(exact);
        for (const auto& r : exact) record(tag + ".exact." + r.check_name, r.pass, true);
      }
      const auto theorems = theorem_reports(c, a.kernel, *a.structure);
      reports["theorems"] = report_list(theorems);
      for (const auto& r : theorems) record(tag + "." + r.check_name, r.pass, asserted_level);
      if (c.wants("certificates")) {
        Json certs = Json::array();
        for (const auto& cert : run_certificates(a.kernel, *a.structure, c.iterates)) {
          certs.push_back(to_json(cert));
          record(tag + ".certificate." + cert.name, cert.satisfied, cert.asserted);
        }
        reports["certificates"] = std::move(certs);
      }
      return 0;
    });
    write_json(c.output / ("reports_" + tag + ".json"), reports);
    archives.push_back(std::move(a));
  }

  std::vector<Level> levels;
  for (const auto& a : archives) {
    if (a.structure) levels.push_back({std::sqrt(a.build.at("sigma2").get<double>()), &a.kernel, &*a.structure});
  }
  Json schedule_json;
  stage("verify", [&] {
    if (levels.empty() || levels.front().structure->size() < 2) return 0;
    if (c.wants("gap")) {
      const auto r = check_gap(levels);
      schedule_json["gap"] = to_json(r);
      record("schedule.gap", r.pass, true);
    }
    if (c.wants("trend")) {
      const auto r = check_eigenvalue_trend(levels);
      schedule_json["trend"] = to_json(r);
      record("schedule.trend", r.pass, true);
    }
    if (c.wants("exponent")) {
      if (levels.size() < 3) {
        schedule_json["exponent"] = {{"skipped", "fewer than three noise levels"}};
      } else {
        std::vector<std::pair<double, double>> points;
        for (const Level& l : levels) points.emplace_back(l.sigma, escape_probability(*l.K, *l.structure, 1));
        const ExponentFit fit = estimate_exponent(points);
        const MetastableStructure& s = *levels.front().structure;
        Json e;
        e["H_fit"] = fit.H;
        e["intercept"] = fit.intercept;
        e["r2"] = fit.r2;
        const double analytic = s.H(static_cast<Eigen::Index>(s.order[1]), static_cast<Eigen::Index>(s.order[0]));
        if (s.h_provenance == "analytic" && std::isfinite(analytic)) {
          e["H_analytic"] = analytic;
          e["relative_error"] = std::abs(fit.H - analytic) / analytic;
          const bool pass = std::abs(fit.H - analytic) <= 0.15 * analytic;
          e["pass"] = pass;
          record("schedule.exponent", pass, true);
        }
        const Eigen::MatrixXd H = regress_exponents(levels);
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < H.rows(); ++r) {
          Json row = Json::array();
          for (Eigen::Index k = 0; k < H.cols(); ++k) {
            if (std::isfinite(H(r, k))) {
              row.push_back(H(r, k));
            } else {
              row.push_back(nullptr);
            }
          }
          rows.push_back(std::move(row));
        }
        e["H_regressed"] = std::move(rows);
        schedule_json["exponent"] = std::move(e);
      }
    }
    return 0;
  });
  write_json(c.output / "schedule.json", schedule_json);
  summary["pass"] = result.pass;
  write_json(c.output / "summary.json", summary);
  return result;
}

}  // namespace rpmap
