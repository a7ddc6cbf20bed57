#include "rpmap/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rpmap/error.hpp"

namespace rpmap {

namespace {

using Index = Eigen::Index;

constexpr const char* kKernelFormat = "rpmap-kernel";
constexpr int kKernelVersion = 1;

Json vec(const State& x) {
  Json a = Json::array();
  for (Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

State state_from(const Json& j) {
  State x(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) x[static_cast<Index>(i)] = j[i].get<double>();
  return x;
}

Json complex_list(const std::vector<std::complex<double>>& v) {
  Json a = Json::array();
  for (const auto& z : v) a.push_back(Json::array({z.real(), z.imag()}));
  return a;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Io, what); }

template <class F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    bad(what + ": " + e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) bad("cannot write " + path.string());
  return out;
}

void write_centers(std::ostream& out, const DiscretizedKernel& K, std::size_t cell) {
  const State c = K.grid.center(cell);
  for (Index a = 0; a < c.size(); ++a) out << ',' << format_double(c[a]);
}

void center_header(std::ostream& out, const DiscretizedKernel& K) {
  out << "cell";
  for (int a = 0; a < K.grid.dimension(); ++a) out << ",x" << a;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

ModelSpec model_spec_from_json(const Json& j) {
  return guarded("model spec", [&] {
    ModelSpec s;
    if (j.is_string()) {
      s.name = j.get<std::string>();
    } else {
      s.name = j.value("name", s.name);
      s.omega = j.value("omega", s.omega);
      s.sigma = j.value("sigma", s.sigma);
      s.theta_noise = j.value("theta_noise", s.theta_noise);
      s.roots = j.value("roots", s.roots);
      s.r_lo = j.value("r_lo", s.r_lo);
      s.r_hi = j.value("r_hi", s.r_hi);
      const std::string conf = j.value("confinement", std::string("recurrent"));
      if (conf == "recurrent") {
        s.confinement = Confinement::RecurrentA;
      } else if (conf == "killed") {
        s.confinement = Confinement::KilledB;
      } else {
        throw Error(ErrorCode::InvalidArgument, "confinement must be \"recurrent\" or \"killed\"");
      }
    }
    if (s.name != "reference" && s.name != "radial") {
      throw Error(ErrorCode::InvalidArgument, "unknown model \"" + s.name + "\" (catalog: reference, radial)");
    }
    if (s.name == "reference") {
      s.roots = {1.0, 1.5, 2.2};
      if (j.is_object() && (j.contains("roots") || j.contains("r_lo") || j.contains("r_hi"))) {
        throw Error(ErrorCode::InvalidArgument, "the reference model fixes roots and radial bounds");
      }
    }
    return s;
  });
}

Json to_json(const ModelSpec& s) {
  Json j;
  j["name"] = s.name;
  j["omega"] = s.omega;
  j["sigma"] = s.sigma;
  j["theta_noise"] = s.theta_noise;
  if (s.name != "reference") {
    j["roots"] = s.roots;
    j["r_lo"] = s.r_lo;
    j["r_hi"] = s.r_hi;
  }
  j["confinement"] = s.confinement == Confinement::KilledB ? "killed" : "recurrent";
  return j;
}

SdeModel make_model(const ModelSpec& s) {
  SdeModel m = s.name == "reference" ? reference_model(s.omega, s.sigma, s.theta_noise)
                                     : radial_model(s.roots, s.omega, s.sigma, s.theta_noise, s.r_lo, s.r_hi);
  m.confinement = s.confinement;
  m.validate();
  return m;
}

ModelSpec read_model_file(const std::filesystem::path& path) { return model_spec_from_json(read_json(path)); }

Json to_json(const Grid& g) {
  Json j;
  j["lo"] = vec(g.lo);
  j["hi"] = vec(g.hi);
  j["counts"] = g.counts;
  return j;
}

Grid grid_from_json(const Json& j) {
  return guarded("grid", [&] {
    return Grid::uniform(state_from(j.at("lo")), state_from(j.at("hi")), j.at("counts").get<std::vector<int>>());
  });
}

Json to_json(const DiscretizedKernel& K) {
  Json j;
  j["grid"] = to_json(K.grid);
  j["sigma"] = K.sigma;
  j["states"] = K.states;
  Json rows = Json::array();
  for (Index i = 0; i < K.matrix.rows(); ++i) {
    Json row = Json::array();
    for (Index c = 0; c < K.matrix.cols(); ++c) row.push_back(K.matrix(i, c));
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  if (K.has_kill()) {
    Json kill = Json::array();
    for (Index i = 0; i < K.kill_column.size(); ++i) kill.push_back(K.kill_column[i]);
    j["kill_column"] = std::move(kill);
  }
  j["sample_counts"] = K.sample_counts;
  return j;
}

DiscretizedKernel kernel_from_json(const Json& j) {
  return guarded("kernel", [&] {
    DiscretizedKernel K;
    K.grid = grid_from_json(j.at("grid"));
    K.sigma = j.at("sigma").get<double>();
    K.states = j.at("states").get<std::vector<std::size_t>>();
    const auto n = static_cast<Index>(K.states.size());
    const Json& rows = j.at("matrix");
    if (rows.size() != K.states.size()) bad("matrix has " + std::to_string(rows.size()) + " rows for " +
                                            std::to_string(n) + " states");
    K.matrix.resize(n, n);
    for (Index i = 0; i < n; ++i) {
      const Json& row = rows[static_cast<std::size_t>(i)];
      if (static_cast<Index>(row.size()) != n) bad("matrix row " + std::to_string(i) + " has the wrong length");
      for (Index c = 0; c < n; ++c) K.matrix(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    if (j.contains("kill_column")) {
      const auto kill = j.at("kill_column").get<std::vector<double>>();
      if (static_cast<Index>(kill.size()) != n) bad("kill column has the wrong length");
      K.kill_column = Eigen::Map<const Eigen::VectorXd>(kill.data(), n);
    }
    K.sample_counts = j.value("sample_counts", std::vector<int>{});
    for (std::size_t cell : K.states) {
      if (cell >= K.grid.size()) bad("state outside the grid");
    }
    return K;
  });
}

Json to_json(const MetastableStructure& s) {
  Json j;
  j["delta"] = s.delta;
  Json centers = Json::array();
  for (const State& c : s.centers) centers.push_back(vec(c));
  j["centers"] = std::move(centers);
  j["balls"] = s.balls;
  j["order"] = s.order;
  Json H = Json::array();
  for (Index r = 0; r < s.H.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < s.H.cols(); ++c) {
      if (std::isfinite(s.H(r, c))) {
        row.push_back(s.H(r, c));
      } else {
        row.push_back(nullptr);
      }
    }
    H.push_back(std::move(row));
  }
  j["H"] = std::move(H);
  if (std::isfinite(s.theta)) {
    j["theta"] = s.theta;
  } else {
    j["theta"] = nullptr;
  }
  j["h_provenance"] = s.h_provenance;
  return j;
}

MetastableStructure structure_from_json(const Json& j) {
  return guarded("structure", [&] {
    constexpr double inf = std::numeric_limits<double>::infinity();
    MetastableStructure s;
    s.delta = j.at("delta").get<double>();
    for (const Json& c : j.at("centers")) s.centers.push_back(state_from(c));
    s.balls = j.at("balls").get<std::vector<CellSet>>();
    s.order = j.at("order").get<std::vector<std::size_t>>();
    const Json& H = j.at("H");
    const auto n = static_cast<Index>(H.size());
    s.H = Eigen::MatrixXd::Constant(n, n, inf);
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < n; ++c) {
        const Json& v = H[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (!v.is_null()) s.H(r, c) = v.get<double>();
      }
    }
    s.theta = j.at("theta").is_null() ? inf : j.at("theta").get<double>();
    s.h_provenance = j.value("h_provenance", std::string());
    if (s.balls.size() != s.centers.size() || s.order.size() != s.balls.size()) {
      bad("structure sizes disagree");
    }
    return s;
  });
}

void write_kernel_file(const std::filesystem::path& path, const KernelArchive& a) {
  Json j;
  j["format"] = kKernelFormat;
  j["version"] = kKernelVersion;
  if (a.model) j["model"] = to_json(*a.model);
  if (!a.build.is_null()) j["build"] = a.build;
  j["kernel"] = to_json(a.kernel);
  if (a.structure) j["structure"] = to_json(*a.structure);
  write_json(path, j);
}

KernelArchive read_kernel_file(const std::filesystem::path& path) {
  const Json j = read_json(path);
  if (j.value("format", std::string()) != kKernelFormat) bad(path.string() + " is not a kernel file");
  if (j.value("version", 0) != kKernelVersion) bad(path.string() + ": unsupported kernel file version");
  KernelArchive a;
  a.kernel = kernel_from_json(j.at("kernel"));
  if (j.contains("structure")) a.structure = structure_from_json(j.at("structure"));
  if (j.contains("model")) a.model = model_spec_from_json(j.at("model"));
  if (j.contains("build")) a.build = j.at("build");
  return a;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["check"] = r.check_name;
  j["pass"] = r.pass;
  j["sigma_values"] = r.sigma_values;
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    Json row;
    row["label"] = r.labels[i];
    row["predicted"] = r.predicted[i];
    row["measured"] = r.measured[i];
    row["error"] = r.relative_errors[i];
    rows.push_back(std::move(row));
  }
  j["comparisons"] = std::move(rows);
  Json tol;
  for (const auto& [name, v] : r.tolerances) tol[name] = v;
  j["tolerances"] = std::move(tol);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const BoundCertificate& c) {
  Json j;
  j["name"] = c.name;
  Json inputs;
  for (const auto& [name, v] : c.inputs) inputs[name] = v;
  j["inputs"] = std::move(inputs);
  j["bound"] = c.bound_value;
  if (c.measured_value) j["measured"] = *c.measured_value;
  j["satisfied"] = c.satisfied;
  j["asserted"] = c.asserted;
  return j;
}

Json to_json(const PeriodicOrbit& o) {
  Json j;
  j["chart_point"] = vec(o.chart_point);
  j["anchor"] = vec(o.anchor);
  j["period"] = o.period;
  j["closure"] = o.closure;
  j["multipliers"] = complex_list(o.multipliers);
  j["stable"] = o.stable;
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) bad("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    bad(path.string() + ": " + e.what());
  }
}

void write_kernel_csv(const std::filesystem::path& path, const DiscretizedKernel& K) {
  std::ofstream out = open_out(path);
  out << "cell";
  for (std::size_t c : K.states) out << ",to_" << c;
  if (K.has_kill()) out << ",kill";
  out << '\n';
  for (Index i = 0; i < K.matrix.rows(); ++i) {
    out << K.states[static_cast<std::size_t>(i)];
    for (Index c = 0; c < K.matrix.cols(); ++c) out << ',' << format_double(K.matrix(i, c));
    if (K.has_kill()) out << ',' << format_double(K.kill_column[i]);
    out << '\n';
  }
}

void write_spectrum_csv(const std::filesystem::path& path, const std::vector<std::complex<double>>& eigenvalues) {
  std::ofstream out = open_out(path);
  out << "index,re,im,modulus\n";
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    out << i << ',' << format_double(eigenvalues[i].real()) << ',' << format_double(eigenvalues[i].imag()) << ','
        << format_double(std::abs(eigenvalues[i])) << '\n';
  }
}

void write_eigenvectors_csv(const std::filesystem::path& path, const DiscretizedKernel& K,
                            const SpectralDecomposition& sd) {
  std::ofstream out = open_out(path);
  center_header(out, K);
  for (std::size_t i = 0; i < sd.count; ++i) {
    out << ",phi" << i << "_re,phi" << i << "_im,pi" << i << "_re,pi" << i << "_im";
  }
  out << '\n';
  for (std::size_t p = 0; p < K.size(); ++p) {
    out << K.states[p];
    write_centers(out, K, K.states[p]);
    for (std::size_t i = 0; i < sd.count; ++i) {
      const auto r = sd.right_vectors[i][static_cast<Index>(p)];
      const auto l = sd.left_vectors[i][static_cast<Index>(p)];
      out << ',' << format_double(r.real()) << ',' << format_double(r.imag()) << ',' << format_double(l.real())
          << ',' << format_double(l.imag());
    }
    out << '\n';
  }
}

void write_vectors_csv(const std::filesystem::path& path, const DiscretizedKernel& K,
                       const std::vector<std::pair<std::string, Eigen::VectorXd>>& columns) {
  std::ofstream out = open_out(path);
  center_header(out, K);
  for (const auto& [name, v] : columns) {
    if (v.size() != static_cast<Index>(K.size())) bad("column " + name + " does not match the kernel");
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t p = 0; p < K.size(); ++p) {
    out << K.states[p];
    write_centers(out, K, K.states[p]);
    for (const auto& col : columns) out << ',' << format_double(col.second[static_cast<Index>(p)]);
    out << '\n';
  }
}

}  // namespace rpmap
