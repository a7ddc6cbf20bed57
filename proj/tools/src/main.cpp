#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rpmap/error.hpp"
#include "rpmap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rpmap;

namespace {

// Flags shared by every subcommand. Each one that was given on the command
// line overrides the config file.
struct Common {
  std::string config;
  std::string model;
  std::string model_file;
  double omega = 1.0;
  std::vector<int> grid;
  double dt = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;
  std::vector<double> sigma2;
  std::string out;
  std::vector<std::string> checks;
  std::vector<int> iterates;
  unsigned threads = 0;
  double max_return_time = 0.0;
  int min_row_samples = 0;
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> setters;

  void attach(CLI::App* app) {
    auto add = [&](CLI::Option* o, std::function<void(PipelineConfig&)> f) { setters.emplace_back(o, std::move(f)); };
    app->add_option("--config", config, "JSON config file; flags override its keys");
    add(app->add_option("--model", model, "catalog model: reference | radial"),
        [this](PipelineConfig& c) {
          const double s = c.model.sigma;
          c.model = model_spec_from_json(Json(model));
          c.model.sigma = s;
        });
    add(app->add_option("--model-file", model_file, "JSON model spec"),
        [this](PipelineConfig& c) { c.model_file = model_file; });
    add(app->add_option("--omega", omega, "angular velocity"), [this](PipelineConfig& c) { c.model.omega = omega; });
    add(app->add_option("--grid", grid, "cells per chart axis"), [this](PipelineConfig& c) { c.grid = grid; });
    add(app->add_option("--dt", dt, "integration step"), [this](PipelineConfig& c) { c.dt = dt; });
    add(app->add_option("--samples", samples, "samples per cell"),
        [this](PipelineConfig& c) { c.samples_per_cell = samples; });
    add(app->add_option("--seed", seed, "base seed"), [this](PipelineConfig& c) { c.seed = seed; });
    add(app->add_option("--delta", delta, "ball radius"), [this](PipelineConfig& c) { c.delta = delta; });
    add(app->add_option("--sigma2", sigma2, "noise levels sigma^2"), [this](PipelineConfig& c) { c.sigma2 = sigma2; });
    add(app->add_option("--out", out, "output directory"), [this](PipelineConfig& c) { c.output = out; });
    add(app->add_option("--checks", checks, "checks to run"), [this](PipelineConfig& c) { c.checks = checks; });
    add(app->add_option("--iterates", iterates, "iterates m of the norm certificates"),
        [this](PipelineConfig& c) { c.iterates = iterates; });
    add(app->add_option("--threads", threads, "worker cap, 0 = hardware"),
        [this](PipelineConfig& c) { c.threads = threads; });
    add(app->add_option("--max-return-time", max_return_time, "timeout of one return"),
        [this](PipelineConfig& c) { c.max_return_time = max_return_time; });
    add(app->add_option("--min-row-samples", min_row_samples, "returns required per row"),
        [this](PipelineConfig& c) { c.min_row_samples = min_row_samples; });
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config.empty()) {
      if (!fs::exists(config)) throw StageError("config", "config file " + config + " not found");
      try {
        c = config_from_json(read_json(config));
      } catch (const StageError&) {
        throw;
      } catch (const std::exception& e) {
        throw StageError("config", e.what());
      }
    }
    try {
      for (const auto& [opt, set] : setters) {
        if (opt->count() > 0) set(c);
      }
    } catch (const std::exception& e) {
      throw StageError("config", e.what());
    }
    finalize(c);
    return c;
  }
};

KernelArchive load_kernel(const std::string& path) {
  if (path.empty()) throw StageError("config", "--kernel is required");
  if (!fs::exists(path)) throw StageError("config", "kernel file " + path + " not found");
  try {
    return read_kernel_file(path);
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
}

std::string show(std::complex<double> z) {
  std::ostringstream os;
  os.precision(8);
  os << z.real();
  if (z.imag() != 0.0) os << (z.imag() > 0 ? "+" : "") << z.imag() << "i";
  return os.str();
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> values;
    std::stringstream vs(row);
    std::string v;
    while (std::getline(vs, v, ',')) values.push_back(v == "inf" ? INFINITY : std::stod(v));
    rows.push_back(values);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd H(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n) {
      throw Error(ErrorCode::InvalidArgument, "H must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) H(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  for (Eigen::Index i = 0; i < n; ++i) H(i, i) = INFINITY;
  return H;
}

bool print_reports(const std::vector<VerificationReport>& reports) {
  bool pass = true;
  for (const auto& r : reports) {
    std::printf("%-40s %s\n", r.check_name.c_str(), r.pass ? "PASS" : "FAIL");
    pass = pass && r.pass;
  }
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Return-map kernels of noisy oscillators: spectra and metastability checks"};
  app.require_subcommand(1);

  Common common;
  std::string kernel_path, kernel_file, set_spec, a_spec, b_spec, suite = "all", h_text;
  std::vector<double> guesses;
  std::vector<std::string> regress;
  std::size_t count = 0;
  bool update = false;

  auto* orbits = app.add_subcommand("orbits", "locate periodic orbits and their Floquet multipliers");
  common.attach(orbits);
  orbits->add_option("--guess", guesses, "chart points to start Newton from (default: catalog radii)");

  auto* kernel = app.add_subcommand("kernel", "estimate the discretized return kernel at each sigma^2");
  common.attach(kernel);
  kernel->add_option("--file", kernel_file, "kernel file path (single sigma^2 only)");

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and eigenvectors of a kernel");
  common.attach(spectrum);
  spectrum->add_option("--kernel", kernel_path, "kernel file");
  spectrum->add_option("--count", count, "eigenpairs to write (default N + 2)");

  auto* committor_cmd = app.add_subcommand("committor", "P_x(tau_A < tau_B) and P_x(tau+_A < tau+_B)");
  common.attach(committor_cmd);
  committor_cmd->add_option("--kernel", kernel_path, "kernel file");
  committor_cmd->add_option("--a", a_spec, "target set, ball:<n> or cells:<i>-<j>,...")->required();
  committor_cmd->add_option("--b", b_spec, "avoided set")->required();

  auto* qsd_cmd = app.add_subcommand("qsd", "quasistationary distribution of the kernel killed outside a set");
  common.attach(qsd_cmd);
  qsd_cmd->add_option("--kernel", kernel_path, "kernel file");
  qsd_cmd->add_option("--set", set_spec, "surviving set, ball:<n> or cells:<i>-<j>,...")->required();

  auto* hierarchy = app.add_subcommand("hierarchy", "order the balls by their transition exponents");
  common.attach(hierarchy);
  hierarchy->add_option("--kernel", kernel_path, "kernel file with a ball structure");
  auto* h_opt = hierarchy->add_option("--H", h_text, "user exponents, rows separated by ';'");
  hierarchy->add_option("--regress", regress, "kernel files at several sigma to regress H from")->excludes(h_opt);
  hierarchy->add_flag("--update", update, "store the hierarchy in the kernel file");

  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite on a kernel file");
  common.attach(verify_cmd);
  verify_cmd->add_option("--kernel", kernel_path, "kernel file");
  verify_cmd->add_option("--suite", suite, "exact | theorems | certificates | all")
      ->check(CLI::IsMember({"exact", "theorems", "certificates", "all"}));

  auto* analyze = app.add_subcommand("analyze", "full pipeline over the sigma^2 schedule");
  common.attach(analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return 2;
  }

  std::string current = "config";
  try {
    const PipelineConfig cfg = common.resolve();
    const SdeModel model = make_model(cfg.model);

    if (orbits->parsed()) {
      current = "orbits";
      std::vector<State> starts;
      for (double g : guesses) {
        State x(1);
        x << g;
        starts.push_back(x);
      }
      const auto found = find_orbits(model, starts);
      Json j = Json::array();
      for (const auto& o : found) {
        j.push_back(to_json(o));
        std::printf("x* = %.10g  T = %.10g  %s  multipliers:", o.chart_point[0], o.period,
                    o.stable ? "stable  " : "unstable");
        for (const auto& mu : o.multipliers) std::printf(" %s", show(mu).c_str());
        std::printf("\n");
      }
      write_json(cfg.output / "orbits.json", j);
      return 0;
    }

    if (kernel->parsed()) {
      current = "kernel";
      if (!kernel_file.empty() && cfg.sigma2.size() != 1) {
        throw StageError("config", "--file needs exactly one sigma2 value");
      }
      for (double s2 : cfg.sigma2) {
        const KernelArchive a = build_archive(cfg, s2);
        const fs::path path =
            kernel_file.empty() ? cfg.output / ("kernel_" + sigma2_tag(s2) + ".json") : fs::path(kernel_file);
        write_kernel_file(path, a);
        std::printf("%s: %zu states", path.string().c_str(), a.kernel.size());
        if (a.structure) {
          std::printf(", %zu balls", a.structure->size());
        } else {
          std::printf(", no structure (%s)", a.build.at("structure_error").get<std::string>().c_str());
        }
        std::printf("\n");
      }
      return 0;
    }

    if (spectrum->parsed()) {
      const KernelArchive a = load_kernel(kernel_path);
      current = "spectrum";
      const std::size_t n =
          std::min(a.kernel.size(), count > 0 ? count : (a.structure ? a.structure->size() + 2 : std::size_t{4}));
      const auto ev = sorted_eigenvalues(a.kernel.matrix);
      write_spectrum_csv(cfg.output / "spectrum.csv", ev);
      write_eigenvectors_csv(cfg.output / "eigenvectors.csv", a.kernel, spectral_decomposition(a.kernel, n));
      for (std::size_t i = 0; i < n; ++i) std::printf("lambda_%zu = %s\n", i, show(ev[i]).c_str());
      return 0;
    }

    if (committor_cmd->parsed()) {
      const KernelArchive a = load_kernel(kernel_path);
      current = "committor";
      const CellSet A = parse_set(a_spec, a), B = parse_set(b_spec, a);
      write_vectors_csv(cfg.output / "committor.csv", a.kernel,
                        {{"committor", committor(a.kernel, A, B)},
                         {"return_committor", return_committor_vector(a.kernel, A, B)}});
      std::printf("wrote %s\n", (cfg.output / "committor.csv").string().c_str());
      return 0;
    }

    if (qsd_cmd->parsed()) {
      const KernelArchive a = load_kernel(kernel_path);
      current = "qsd";
      const CellSet A = parse_set(set_spec, a);
      const DiscretizedKernel KA = kill(a.kernel, A);
      const QsdResult q = qsd(KA);
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.kernel.size()));
      Eigen::VectorXd phi = mu;
      const auto pos = a.kernel.positions(A);
      for (std::size_t i = 0; i < pos.size(); ++i) {
        mu[pos[i]] = q.qsd[static_cast<Eigen::Index>(i)];
        phi[pos[i]] = q.principal_right[static_cast<Eigen::Index>(i)];
      }
      write_vectors_csv(cfg.output / "qsd.csv", a.kernel, {{"qsd", mu}, {"principal_right", phi}});
      Json j;
      j["lambda0"] = q.lambda0;
      j["residual"] = q.residual;
      j["iterations"] = q.iterations;
      j["irreducible"] = q.irreducible;
      write_json(cfg.output / "qsd.json", j);
      std::printf("lambda0 = %.15g  residual = %.3g  iterations = %zu\n", q.lambda0, q.residual, q.iterations);
      return 0;
    }

    if (hierarchy->parsed()) {
      KernelArchive a = load_kernel(kernel_path);
      if (!a.structure) throw StageError("config", "kernel file has no ball structure");
      std::vector<KernelArchive> others;
      for (const auto& p : regress) others.push_back(load_kernel(p));
      current = "hierarchy";
      Eigen::MatrixXd H;
      std::string provenance;
      if (!h_text.empty()) {
        H = parse_matrix(h_text);
        provenance = "user";
      } else if (!others.empty()) {
        std::vector<Level> levels;
        for (const auto& o : others) {
          if (!o.structure) throw StageError("config", "regression kernels need ball structures");
          levels.push_back({o.kernel.sigma, &o.kernel, &*o.structure});
        }
        H = regress_exponents(levels);
        provenance = "regressed";
      } else {
        const SdeModel m = a.model ? make_model(*a.model) : model;
        if (m.barrier_exponents.size() == 0) throw Error(ErrorCode::InvalidArgument, "model has no analytic H");
        H = m.barrier_exponents;
        provenance = "analytic";
      }
      apply_hierarchy(*a.structure, H, provenance);
      write_json(cfg.output / "hierarchy.json", to_json(*a.structure));
      std::printf("order:");
      for (std::size_t i : a.structure->order) std::printf(" %zu", i);
      std::printf("  theta = %.10g  (%s)\n", a.structure->theta, provenance.c_str());
      if (update) write_kernel_file(kernel_path, a);
      return 0;
    }

    if (verify_cmd->parsed()) {
      const KernelArchive a = load_kernel(kernel_path);
      current = "verify";
      Json j;
      bool pass = true;
      if (suite == "exact" || suite == "all") {
        const std::size_t n = a.structure ? a.structure->size() : 1;
        const auto reports = run_exact_suite(a.kernel, probe_sets(a), n, cfg.seed);
        j["exact"] = Json::array();
        for (const auto& r : reports) j["exact"].push_back(to_json(r));
        pass = print_reports(reports) && pass;
      }
      if (suite != "exact" && !a.structure) throw StageError("config", "suite needs a ball structure");
      if (suite == "theorems" || suite == "all") {
        const auto reports = theorem_reports(cfg, a.kernel, *a.structure);
        j["theorems"] = Json::array();
        for (const auto& r : reports) j["theorems"].push_back(to_json(r));
        pass = print_reports(reports) && pass;
      }
      if (suite == "certificates" || suite == "all") {
        j["certificates"] = Json::array();
        for (const auto& c : run_certificates(a.kernel, *a.structure, cfg.iterates)) {
          j["certificates"].push_back(to_json(c));
          std::printf("%-40s %s%s\n", c.name.c_str(), c.satisfied ? "PASS" : "FAIL", c.asserted ? "" : " (report)");
          if (c.asserted) pass = pass && c.satisfied;
        }
      }
      write_json(cfg.output / ("verify_" + suite + ".json"), j);
      return pass ? 0 : 1;
    }

    if (analyze->parsed()) {
      current = "analyze";
      const PipelineResult r = run_pipeline(cfg);
      for (const auto& item : r.summary.at("checks").items()) {
        const bool ok = item.value().at("pass").get<bool>();
        const bool asserted = item.value().at("asserted").get<bool>();
        std::printf("%-70s %s%s\n", item.key().c_str(), ok ? "PASS" : "FAIL", asserted ? "" : " (report)");
      }
      return r.pass ? 0 : 1;
    }
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error [" << current << "]: " << e.what() << '\n';
    return current == "config" ? 2 : 3;
  }
  return 0;
}
