#pragma once

// Reproducible studies built from the library: config parsing and validation,
// seeded test-function families, the individual studies, and the runner that
// writes reports plus a hashed manifest.

#include "curvesparse/curve_geometry.hpp"
#include "curvesparse/dyadic_grid.hpp"
#include "curvesparse/grid_function.hpp"
#include "curvesparse/operators.hpp"
#include "curvesparse/sparse_engine.hpp"
#include "curvesparse/weights_sharpness.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvesparse {

using Json = nlohmann::ordered_json;

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExponentPair {
  double r = 2.0;
  double s = 2.0;
  bool admissible = false;  ///< (1/r, 1/s') inside the region
};

struct ExperimentConfig {
  MonomialCurve curve = MonomialCurve::parabola();
  Box domain;
  Eigen::VectorXi counts;
  std::vector<ExponentPair> pairs;
  TruncationWindow window;
  QuadratureRule rule;
  SparseOptions sparse;
  unsigned long long seed = 1;
  std::string output = "out";
  Json sections = Json::object();  ///< per-subcommand settings, validated on use
  Json canonical;                  ///< the parsed config with defaults filled in
};

/// Parses and validates; unknown keys anywhere are errors.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Bundled defaults: parabola on [0,1]^2 with a 32 x 256 mesh.
ExperimentConfig default_config();

/// Generator for stream `stream`, item `index`: results do not depend on the
/// order in which items are produced.
std::mt19937_64 seeded_rng(unsigned long long seed, unsigned long long stream, unsigned long long index);

/// Nonnegative sum of `bumps` smooth compact bumps with gamma-shaped widths
/// and random centers inside the domain; independent of the mesh.
GridFunction random_bump_function(const MonomialCurve& curve, const Box& domain, const Eigen::VectorXi& counts,
                                  std::mt19937_64& rng, int bumps = 3);

// ---------------------------------------------------------------------------

struct GridPropertyReport {
  std::string alpha;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::vector<std::string> first_violations;  ///< at most 10
  double parent_volume_ratio_min = 0.0;
  double parent_volume_ratio_max = 0.0;
  double enclosing_ratio_max = 0.0;  ///< max |S| / |Q| over enclosing gamma-cubes
};

/// Nesting, partition, children, third-cube tiling and enclosing-cube checks
/// over every shift, scales |k| <= k_range, and `points` random points.
GridPropertyReport grid_property_suite(const MonomialCurve& curve, int k_range, int points, unsigned long long seed);

struct DominationTrial {
  std::size_t trial = 0;
  DominationReport report;
};

struct DominationStudy {
  ExponentPair pair;
  std::vector<DominationTrial> trials;
  double ratio_sup = 0.0;
  bool certificates_pass = true;
};

/// `trials` random (f, g) pairs on the given mesh and window.
DominationStudy domination_study(const MonomialCurve& curve, const Box& domain, const Eigen::VectorXi& counts,
                                 const ExponentPair& pair, const TruncationWindow& window, const QuadratureRule& rule,
                                 const SparseOptions& sparse, int trials, unsigned long long seed, int bumps = 3);

struct DecayRow {
  int n = 0;
  std::string direction;
  double radius = 0.0;
  double magnitude = 0.0;
  double normalized = 0.0;  ///< magnitude * (1 + radius)^(1/n)
};

struct DecayStudy {
  std::vector<DecayRow> rows;
  /// Per n: max / min over radii of the sup over directions of `normalized`.
  std::vector<std::pair<int, double>> band;
};

DecayStudy decay_study(const std::vector<int>& dims, const std::vector<double>& radii, int random_directions,
                       double t0, unsigned long long seed);

struct ContinuityResult {
  std::vector<double> y;
  std::vector<double> estimate;
  PowerLawFit fit;  ///< slope is the fitted exponent
};

ContinuityResult continuity_study(const MonomialCurve& curve, const std::vector<int>& log2_y, double r,
                                  double s_prime, double cells_per_unit, int random_fields, unsigned long long seed,
                                  const QuadratureRule& rule = {});

// ---------------------------------------------------------------------------

struct RunOptions {
  std::filesystem::path out;       ///< empty: use the config's output
  std::optional<unsigned long long> seed;
  unsigned workers = 0;
  bool refine = false;             ///< double quadrature nodes and mesh counts
};

const std::vector<std::string>& subcommands();

/// Runs one study, writes its artifacts and manifest.json into the output
/// directory, and returns the report that was written as <subcommand>.json.
Json run_subcommand(const std::string& subcommand, ExperimentConfig config, const RunOptions& options);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace curvesparse
