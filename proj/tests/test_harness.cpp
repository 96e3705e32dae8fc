#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "driftlimit/driftlimit.h"
#include "driftlimit/harness.hpp"
#include "json.hpp"

using namespace driftlimit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("driftlimit_test_" + name);
  fs::remove_all(d);
  return d;
}

bool rejects(const std::string& text, const std::vector<std::string>& ov,
             const std::string& needle, Experiment kind = Experiment::Simulate) {
  try {
    parse_config(text, ov, kind);
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_SUITE("harness_cli") {

TEST_CASE("empty config gives the resolved two-fluid preset") {
  const RunConfig c = parse_config("{}", {}, Experiment::Simulate);
  CHECK(c.n == 100);
  CHECK(c.lo == 1.0);
  CHECK(c.hi == 2.0);
  CHECK(c.phys.tau == 1e-8);
  CHECK(c.phys.eps == 1.0);
  CHECK(c.phys.Te == 3.0);
  CHECK(c.phys.C == 1e-2);
  CHECK(c.phys.dt == 5e-9);
  CHECK(c.t_end == 6e-6);
  CHECK(c.eta == 80.0);
  CHECK(c.alpha == doctest::Approx(2 * M_PI / 3));
  const Vec3 B = c.B();
  CHECK(B[0] == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(B[1] == doctest::Approx(0.5));
  CHECK(c.scheme == SchemeSel::Both);
  CHECK(parse_config("", {}, Experiment::Simulate).n == 100);
}

TEST_CASE("defaults document lists every section and round-trips") {
  for (Experiment k : {Experiment::DiffusionValidate, Experiment::Simulate, Experiment::CStudy}) {
    const std::string d = default_config_json(k);
    const auto j = nlohmann::json::parse(d);
    for (const char* key : {"grid", "physics", "solver", "classical", "diffusion", "c_study", "output"})
      CHECK(j.contains(key));
    const RunConfig c = parse_config(d, {}, k);
    CHECK(resolved_config_json(c) == d);
  }
}

TEST_CASE("invalid physics is rejected with a clear message") {
  CHECK(rejects(R"({"physics": {"tau": -1}})", {}, "tau"));
  CHECK(rejects("{}", {"physics.Te=1"}, "singular"));
  CHECK(rejects("{}", {"physics.C=0"}, "C must be > 0"));
  CHECK(rejects("{}", {"physics.dt=-1e-9"}, "dt"));
}

TEST_CASE("unknown keys, wrong types and bad values are rejected") {
  CHECK(rejects(R"({"grid": {"nx": 10}})", {}, "grid.nx"));
  CHECK(rejects(R"({"grid": {"n": "ten"}})", {}, "grid.n"));
  CHECK(rejects("{}", {"solver.micro=\"three\""}, "micro"));
  CHECK(rejects("{}", {"grid.n=1"}, "grid.n"));
  CHECK(rejects("{}", {"novalue"}, "novalue"));
  CHECK(rejects("not json", {}, "parse"));
  CHECK(rejects(R"({"experiment": "c-study"})", {}, "experiment"));
  CHECK(rejects("{}", {"scale=0"}, "scale"));
  CHECK(rejects("{}", {"scale=1.5"}, "scale"));
}

TEST_CASE("overrides follow key paths and beat file values") {
  const RunConfig c = parse_config(R"({"grid": {"n": 40}, "physics": {"C": 1e-3}})",
                                   {"grid.n=30", "physics.potential_form=literal",
                                    "output.dir=/tmp/x", "solver.micro=two-problem"},
                                   Experiment::Simulate);
  CHECK(c.n == 30);
  CHECK(c.phys.C == 1e-3);
  CHECK(c.phys.form == PotentialForm::Literal);
  CHECK(c.out_dir == "/tmp/x");
  CHECK(c.ap.solver.micro == MicroForm::TwoProblem);
}

TEST_CASE("scale shrinks grids and, for simulate, the step count") {
  const RunConfig s = parse_config("{}", {"scale=0.5"}, Experiment::Simulate);
  CHECK(s.n == 50);
  CHECK(s.phys.dt == doctest::Approx(1e-8));
  const RunConfig d = parse_config("{}", {"scale=0.5"}, Experiment::DiffusionValidate);
  CHECK(d.diffusion.grids == std::vector<int>{13, 25, 50, 100});
  CHECK(d.diffusion.sweep_n == 50);
  const RunConfig c = parse_config("{}", {"scale=0.5"}, Experiment::CStudy);
  CHECK(c.n == 50);
  CHECK(c.c_study.dt == std::vector<double>{1e-6, 1e-7, 1e-8});
}

TEST_CASE("git blob hash matches git hash-object") {
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("slope fit recovers an exact power law") {
  std::vector<double> x, y;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    x.push_back(h);
    y.push_back(3.0 * h * h);
  }
  CHECK(fit_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(fit_slope({1.0}, {1.0}));
}

TEST_CASE("manufactured case is consistent with its exact solution") {
  const ManufacturedCase mc = manufactured_case(40, 1e-2);
  const CellField r = diffusion_residual(mc.prob, mc.exact, mc.grid);
  double rn = 0.0, fn = 0.0;
  for (std::size_t c = 0; c < r.size(); ++c) {
    rn = std::max(rn, std::abs(r[c]));
    fn = std::max(fn, std::abs(mc.prob.tau * mc.prob.f[c]));
  }
  // truncation error of the scheme on the exact solution, O(h^2) relative
  CHECK(rn <= 0.05 * fn);
}

TEST_CASE("simulate writes diagnostics, fields and meta, deterministically") {
  std::vector<fs::path> dirs;
  for (const char* name : {"det_a", "det_b"}) {
    const fs::path dir = fresh_dir(name);
    RunConfig c = parse_config("{}", {"grid.n=12", "t_end=2e-8", "output.dir=\"" + dir.string() + "\""},
                               Experiment::Simulate);
    const TwoFluidReport rep = run_two_fluid(c);
    REQUIRE(rep.ap);
    REQUIRE(rep.classical);
    CHECK(rep.ap->completed);
    CHECK(rep.ap->steps_done == 4);
    CHECK(rep.ap->consistent);
    CHECK(rep.classical->completed);
    write_meta(c, "{\"ok\": true}");
    dirs.push_back(dir);
  }
  for (const char* f : {"ap/diagnostics.csv", "classical/diagnostics.csv", "ap/fields_2.000000e-08.csv",
                        "classical/fields_2.000000e-08.csv"}) {
    const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
    CHECK_FALSE(a.empty());
    CHECK(a == b);
  }
  const std::string diag = slurp(dirs[0] / "ap/diagnostics.csv");
  CHECK(diag.rfind("step,time,cont_rel_i", 0) == 0);
  const auto meta = nlohmann::ordered_json::parse(slurp(dirs[0] / "meta.json"));
  CHECK(meta["experiment"] == "simulate");
  CHECK(meta["config"]["grid"]["n"] == 12);
  CHECK(meta["config_hash"] == git_blob_hash(meta["config"].dump(2)));
  CHECK(meta["results"]["ok"] == true);
  CHECK(meta["derived"]["lambda1"].get<double>() == doctest::Approx(2.0 / (4.0 * 25e-18)));
  for (const auto& d : dirs) fs::remove_all(d);
}

TEST_CASE("unwritable output directory is an i/o error") {
  RunConfig c = parse_config("{}", {"grid.n=8", "t_end=5e-9", "output.dir=\"/proc/no/such\""},
                             Experiment::Simulate);
  CHECK_THROWS(run_two_fluid(c));
}

TEST_CASE("c-study verdict names and lookup") {
  CHECK(std::string(verdict_name(Verdict::Stable)) == "stable");
  CHECK(std::string(verdict_name(Verdict::Diverged)) == "diverged");
  CStudyReport rep;
  rep.entries.push_back({1e-3, 1e-6, 4e-6, Verdict::BoundaryArtifacts, 4, 0, 0.7, true});
  REQUIRE(rep.find(1e-3, 1e-6) != nullptr);
  CHECK(rep.find(1e-3, 1e-6)->verdict == Verdict::BoundaryArtifacts);
  CHECK(rep.find(1e-4, 1e-6) == nullptr);
}

TEST_CASE("C API round trip from C++") {
  const char* ov[] = {"grid.n=10", "t_end=1e-8"};
  dl_config* cfg = nullptr;
  REQUIRE(dl_config_parse(DL_SIMULATE, "{}", ov, 2, &cfg) == DL_OK);
  dl_sim* sim = nullptr;
  REQUIRE(dl_sim_create(cfg, DL_SCHEME_AP, &sim) == DL_OK);
  int diverged = -1;
  CHECK(dl_sim_step(sim, 3, &diverged) == DL_OK);
  CHECK(diverged == 0);
  CHECK(dl_sim_time(sim) == doctest::Approx(1.5e-8));
  std::vector<double> n(dl_sim_num_cells(sim));
  CHECK(dl_sim_get(sim, DL_N, n.data(), n.size()) == DL_OK);
  CHECK(n[0] == doctest::Approx(1.0));
  CHECK(dl_sim_get(sim, DL_N, n.data(), 3) == DL_ERR_ARGUMENT);
  double res[6];
  CHECK(dl_sim_residuals(sim, res) == DL_OK);
  CHECK(res[0] <= 1e-6);
  dl_sim_free(sim);
  dl_config_free(cfg);

  const char* bad[] = {"physics.Te=1"};
  CHECK(dl_config_parse(DL_SIMULATE, "{}", bad, 1, &cfg) == DL_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(dl_last_error()).find("singular") != std::string::npos);
  CHECK(dl_config_load(DL_SIMULATE, "/no/such/file.json", nullptr, 0, &cfg) == DL_ERR_CONFIG);
  CHECK(dl_sim_step(nullptr, 1, nullptr) == DL_ERR_ARGUMENT);
}

}
