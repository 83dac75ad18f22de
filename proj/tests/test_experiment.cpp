#include "curvesparse/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace curvesparse;

namespace {

std::string error_of(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("defaults") {
  const auto cfg = parse_config(Json::object());
  CHECK(cfg.curve.dim() == 2);
  CHECK(cfg.counts == Eigen::Vector2i(32, 256));
  CHECK(cfg.window.k_min == -6);
  CHECK(cfg.window.k_max == 1);
  REQUIRE(cfg.pairs.size() == 1);
  CHECK(cfg.pairs[0].admissible);
  CHECK(cfg.pairs[0].r == doctest::Approx(1 / 0.6));
  CHECK(cfg.canonical["grid"]["counts"][1] == 256);
  CHECK(parse_config(cfg.canonical).canonical == cfg.canonical);
}

TEST_CASE("curve presets") {
  const auto m3 = parse_config(Json{{"curve", {{"preset", "moment3"}}}});
  CHECK(m3.curve.dim() == 3);
  CHECK(m3.counts.size() == 3);
  const auto custom = parse_config(Json{{"curve", {{"alpha", {1.0, 1.5}}, {"eps_plus", {1, 1}}, {"eps_minus", {-1, 1}}}}});
  CHECK(custom.curve.alpha()[1] == 1.5);
  CHECK(error_of(Json{{"curve", {{"preset", "moment9"}}}}).find("curve") != std::string::npos);
}

TEST_CASE("validation names the field") {
  CHECK(error_of(Json{{"stopping", {{"min_cels_per_axis", 4}}}}).find("stopping.min_cels_per_axis") !=
        std::string::npos);
  CHECK(error_of(Json{{"bogus", 1}}).find("bogus") != std::string::npos);
  CHECK(error_of(Json{{"window", {{"k_min", 2}, {"k_max", 1}}}}).find("window") != std::string::npos);
  CHECK(error_of(Json{{"quadrature", {{"nodes_per_half", 4}}}}).find("quadrature.nodes_per_half") !=
        std::string::npos);
  CHECK(error_of(Json{{"stopping", {{"C", 0.5}}}}).find("stopping.C") != std::string::npos);
  CHECK(error_of(Json{{"seed", -1}}).find("seed") != std::string::npos);
  CHECK(error_of(Json{{"grid", {{"counts", {4, 256}}}}}).find("grid.counts") != std::string::npos);
  CHECK(error_of(Json{{"grid", {{"lo", {0, 0}}, {"hi", {1, 0}}}}}).find("grid") != std::string::npos);
  CHECK(error_of(Json{{"exponent_pairs", {{0.6}}}}).find("exponent_pairs") != std::string::npos);
  CHECK(error_of(Json{{"dominate", 3}}).find("dominate") != std::string::npos);
  CHECK(error_of(Json{{"window", {{"k_min", "low"}}}}).find("window.k_min") != std::string::npos);
}

TEST_CASE("seeded streams") {
  auto a = seeded_rng(5, 1, 7), b = seeded_rng(5, 1, 7);
  CHECK(a() == b());
  CHECK(seeded_rng(5, 1, 7)() != seeded_rng(5, 1, 8)());
  CHECK(seeded_rng(5, 1, 7)() != seeded_rng(5, 2, 7)());
  CHECK(seeded_rng(5, 1, 7)() != seeded_rng(6, 1, 7)());

  const auto cfg = default_config();
  auto r1 = seeded_rng(9, 0, 3), r2 = seeded_rng(9, 0, 3);
  const auto f = random_bump_function(cfg.curve, cfg.domain, cfg.counts, r1);
  const auto g = random_bump_function(cfg.curve, cfg.domain, cfg.counts, r2);
  CHECK((f.values() == g.values()).all());
  CHECK(f.values().minCoeff() >= 0.0);
  CHECK(f.values().maxCoeff() > 0.0);

  // The same draw on a finer mesh samples the same function.
  auto r3 = seeded_rng(9, 0, 3);
  const auto fine = random_bump_function(cfg.curve, cfg.domain, 2 * cfg.counts, r3);
  CHECK(lp_norm(fine, 1.0) == doctest::Approx(lp_norm(f, 1.0)).epsilon(0.02));
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("region run writes a manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "curvesparse_region_test";
  std::filesystem::remove_all(dir);
  auto cfg = parse_config(Json{{"curve", {{"preset", "moment3"}}}, {"region", {{"points", {{0.6, 0.5}, {0.8, 0.2}}}}}});
  RunOptions opt;
  opt.out = dir;
  const Json full = run_subcommand("region", cfg, opt);
  CHECK(full.at("subcommand") == "region");
  const Json& rep = full.at("report");
  CHECK(rep.at("n") == 3);
  CHECK(rep.at("omega").at("listed_vertices").size() == 4);
  CHECK(rep.at("membership").at(0).at("inside") == true);
  CHECK(rep.at("membership").at(1).at("inside") == false);

  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("subcommand") == "region");
  CHECK(manifest.at("config_sha256").get<std::string>().size() == 64);
  REQUIRE(manifest.at("files").size() == 2);
  for (const auto& f : manifest.at("files")) {
    const std::string body = slurp(dir / f.at("path").get<std::string>());
    CHECK(f.at("sha256") == sha256_hex(body));
    CHECK(f.at("bytes") == body.size());
  }
  CHECK_THROWS_AS(run_subcommand("nope", cfg, opt), ConfigError);
  std::filesystem::remove_all(dir);
}
