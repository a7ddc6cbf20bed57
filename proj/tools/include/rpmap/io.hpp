#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rpmap/floquet.hpp"
#include "rpmap/verify.hpp"

namespace rpmap {

/// Insertion-ordered so that written files are reproducible byte for byte.
using Json = nlohmann::ordered_json;

/// Built-in catalog entry plus parameters. `name` is "reference" or "radial".
struct ModelSpec {
  std::string name = "reference";
  double omega = 1.0;
  double sigma = 0.1;
  double theta_noise = 0.1;
  std::vector<double> roots{1.0, 1.5, 2.2};
  double r_lo = 0.5;
  double r_hi = 3.0;
  Confinement confinement = Confinement::RecurrentA;
};

ModelSpec model_spec_from_json(const Json& j);
Json to_json(const ModelSpec& spec);
SdeModel make_model(const ModelSpec& spec);
ModelSpec read_model_file(const std::filesystem::path& path);

/// Kernel container: a JSON document with "format": "rpmap-kernel", the
/// grid, the carried cells, the matrix row by row, optional kill column,
/// sample counts, sigma, the generating model and an optional structure.
struct KernelArchive {
  DiscretizedKernel kernel;
  std::optional<MetastableStructure> structure;
  std::optional<ModelSpec> model;
  Json build;  // sampling parameters, free form
};

Json to_json(const Grid& g);
Grid grid_from_json(const Json& j);
Json to_json(const DiscretizedKernel& K);
DiscretizedKernel kernel_from_json(const Json& j);
/// Non-finite H entries (the diagonal) are written as null.
Json to_json(const MetastableStructure& s);
MetastableStructure structure_from_json(const Json& j);

void write_kernel_file(const std::filesystem::path& path, const KernelArchive& archive);
KernelArchive read_kernel_file(const std::filesystem::path& path);

Json to_json(const VerificationReport& r);
Json to_json(const BoundCertificate& c);
Json to_json(const PeriodicOrbit& o);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Header: cell, to_<cell>... [, kill]. One row per carried cell.
void write_kernel_csv(const std::filesystem::path& path, const DiscretizedKernel& K);
/// Header: index, re, im, modulus.
void write_spectrum_csv(const std::filesystem::path& path, const std::vector<std::complex<double>>& eigenvalues);
/// Header: cell, x0.., phi<i>_re, phi<i>_im, pi<i>_re, pi<i>_im for each pair.
void write_eigenvectors_csv(const std::filesystem::path& path, const DiscretizedKernel& K,
                            const SpectralDecomposition& sd);
/// Header: cell, x0.., then one column per named vector (indexed like K).
void write_vectors_csv(const std::filesystem::path& path, const DiscretizedKernel& K,
                       const std::vector<std::pair<std::string, Eigen::VectorXd>>& columns);

}  // namespace rpmap
