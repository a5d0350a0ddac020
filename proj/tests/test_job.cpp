#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "thermoformal/errors.hpp"
#include "thermoformal/job.hpp"

using namespace tf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json load(const std::string& name) {
  std::ifstream in(std::string(THERMOFORMAL_RECIPES) + "/" + name);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(THERMOFORMAL_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("thermoformal_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("defaults are materialized and the config round-trips") {
  const auto c = parse_job(json{{"command", "spectrum"}});
  const auto j = to_json(c);
  CHECK(j["n"] == 1024);
  CHECK(j["map"]["name"] == "doubling");
  CHECK(j["map"].contains("params"));
  CHECK(j["observable"]["amplitude"] == 1.0);
  CHECK(to_json(parse_job(j)) == j);
  CHECK(to_json(parse_job(json::parse(j.dump()))) == j);
  // 1 and 1.0 resolve identically
  CHECK(to_json(parse_job(json{{"command", "spectrum"}, {"gamma", 1e-1}})) ==
        to_json(parse_job(json{{"command", "spectrum"}, {"gamma", 0.1}})));
}

TEST_CASE("schema violations carry a field path") {
  auto path_of = [](const json& j) {
    try {
      parse_job(j);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  CHECK(path_of({{"command", "spectrum"}, {"frobnicate", 1}}) == "/frobnicate");
  CHECK(path_of({{"command", "spectrum"}, {"n", "big"}}) == "/n");
  CHECK(path_of({{"command", "spectrum"}, {"n", 4}}) == "/n");
  CHECK(path_of({{"command", "spectrum"}, {"gamma", 1.5}}) == "/gamma");
  CHECK(path_of({{"command", "spectrum"}, {"schema_version", 2}}) == "/schema_version");
  CHECK(path_of({{"command", "nope"}}) == "/command");
  CHECK(path_of({{"command", "spectrum"}, {"map", {{"name", "rotation"}, {"params", {{"x", 1}}}}}}) ==
        "/map/params/x");
  CHECK(path_of({{"command", "spectrum"}, {"observable", {{"kind", "cos"}, {"q", 1}}}}) == "/observable/q");
  CHECK(path_of({{"command", "spectrum"}, {"interval", {0.5, 0.3}}}) == "/interval");
  CHECK(path_of({{"command", "spectrum"}, {"orbit_lengths", {20, "x"}}}) == "/orbit_lengths/1");
  CHECK(path_of({{"command", "spectrum"}, {"seed", -1}}) == "/seed");
  CHECK(path_of({{"command", "spectrum"}, {"family", {{"kind", "wobble"}}}}) == "/family/kind");
  // derivative-free map cannot provide -log f'
  CHECK(path_of({{"command", "spectrum"}, {"t_steps", 40}}) == "/t_steps");
  CHECK_THROWS_AS(parse_job(json{{"command", "spectrum"}}, std::string("clt")), ConfigError);
}

TEST_CASE("spectrum job on the doubling map") {
  const auto r = run_job(parse_job(load("doubling_spectrum.json")));
  CHECK(r.exit_code == exit_ok);
  CHECK(std::abs(r.summary["results"]["lambda"].get<double>() - 2.0) < 1e-10);
  CHECK(std::abs(r.summary["results"]["pressure"].get<double>() - std::log(2.0)) < 1e-10);
  REQUIRE(r.csv.count("spectrum.csv"));
  const auto& csv = r.csv.at("spectrum.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "x,h,nu,mu,density");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1025);
  CHECK(r.summary["config"] == to_json(parse_job(load("doubling_spectrum.json"))));
}

TEST_CASE("certification exit codes") {
  CHECK(run_job(parse_job(load("rotation_certify.json"))).exit_code == exit_cert_fail);
  CHECK(run_job(parse_job(load("mp_certify.json"))).exit_code == exit_ok);
  json hold = {{"command", "certify"},
               {"map", {{"kind", "piecewise_poly"}, {"name", "pp"}, {"degree", 2},
                        {"params", {{"breakpoints", {0.0, 1.0}},
                                    {"coefficients", json::array({json::array({0.0, 2.0})})}}}}},
               {"resolution", 64}};
  // piecewise polynomial maps carry a derivative, so this certifies
  CHECK(run_job(parse_job(hold)).exit_code == exit_ok);
}

TEST_CASE("computation errors become exit 4 with a payload") {
  const auto r = run_job(parse_job(json{{"command", "clt"},
                                        {"observable", {{"kind", "constant"}, {"value", 1.0}}},
                                        {"samples", 100}}));
  CHECK(r.exit_code == exit_computation);
  CHECK(r.summary["status"] == "refused");
  CHECK(r.summary["error"]["module"] == "spectral_statistics");

  const auto a = run_job(parse_job(json{{"command", "rate-function"},
                                        {"observable", {{"kind", "constant"}, {"value", 0.5}}},
                                        {"t_max", 0.5}, {"t_steps", 5}, {"n", 64}}));
  CHECK(a.exit_code == exit_computation);
  CHECK(a.summary["error"]["type"] == "degenerate_legendre");
  CHECK(a.csv.empty());

  const auto c = run_job(parse_job(json{{"command", "spectrum"}, {"max_iterations", 1}, {"eig_tol", 1e-300},
                                        {"map", {{"name", "mp_like"}}}, {"n", 64}}));
  CHECK(c.exit_code == exit_computation);
  CHECK(c.summary["error"]["type"] == "convergence");
}

TEST_CASE("budget job") {
  const auto r = run_job(parse_job(json{{"command", "budget"}, {"gamma", 0.5}, {"L", 1.001}, {"N", 2}, {"C", 2.0}}));
  CHECK(r.exit_code == exit_ok);
  CHECK(r.summary["results"]["feasible"] == true);
  CHECK(r.summary["results"]["B_k"].is_string());
}

TEST_CASE("MP-like free-energy recipe, two schemes agree") {
  auto j = load("mp_free_energy.json");
  const auto a = run_job(parse_job(j));
  j["scheme"] = "collocation";
  const auto b = run_job(parse_job(j));
  REQUIRE(a.exit_code == exit_ok);
  REQUIRE(b.exit_code == exit_ok);
  CHECK(a.csv.at("free_energy.csv").substr(0, 20) == "t,E,dE,d2E,mean_psi\n");
  std::istringstream sa(a.csv.at("free_energy.csv")), sb(b.csv.at("free_energy.csv"));
  std::string la, lb;
  std::getline(sa, la);
  std::getline(sb, lb);
  int rows = 0;
  while (std::getline(sa, la) && std::getline(sb, lb)) {
    const double ea = std::stod(la.substr(la.find(',') + 1));
    const double eb = std::stod(lb.substr(lb.find(',') + 1));
    CHECK(std::abs(ea - eb) < 1e-3);
    ++rows;
  }
  CHECK(rows == 21);
}

TEST_CASE("CLI exit codes") {
  const auto dir = scratch("cli");
  const std::string recipes = THERMOFORMAL_RECIPES;
  CHECK(cli("spectrum --config " + recipes + "/doubling_spectrum.json --out " + (dir / "s").string()) == 0);
  CHECK(fs::exists(dir / "s" / "summary.json"));
  CHECK(fs::exists(dir / "s" / "spectrum.csv"));
  CHECK(cli("certify --config " + recipes + "/rotation_certify.json --out " + (dir / "r").string()) == 2);
  std::ofstream(dir / "bad.json") << R"({"command": "spectrum", "bogus": true})";
  CHECK(cli("spectrum --config " + (dir / "bad.json").string()) == 1);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(cli("spectrum --config " + (dir / "broken.json").string()) == 1);
  CHECK(cli("spectrum --config " + (dir / "missing.json").string()) == 1);
  // command mismatch between the subcommand and the file
  CHECK(cli("clt --config " + recipes + "/doubling_spectrum.json") == 1);
  std::ofstream(dir / "cob.json") << R"({"observable": {"kind": "coboundary", "of": {"kind": "cos"}}, "samples": 100})";
  CHECK(cli("clt --config " + (dir / "cob.json").string()) == 4);
}

TEST_CASE("re-running from the echoed config is bitwise identical") {
  const auto dir = scratch("repro");
  std::ofstream(dir / "job.json") << R"({"command": "clt", "samples": 3000, "n": 256, "seed": 12345})";
  REQUIRE(cli("clt --config " + (dir / "job.json").string() + " --out " + (dir / "a").string()) == 0);
  const auto first = json::parse(slurp(dir / "a" / "summary.json"));
  std::ofstream(dir / "echo.json") << first["config"].dump();
  REQUIRE(cli("clt --config " + (dir / "echo.json").string() + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  CHECK(slurp(dir / "a" / "clt_qq.csv") == slurp(dir / "b" / "clt_qq.csv"));
  // thread count does not matter
  const std::string env = "THERMOFORMAL_THREADS=3 ";
  const int rc = std::system((env + THERMOFORMAL_CLI + " clt --config " + (dir / "echo.json").string() +
                              " --out " + (dir / "c").string() + " >/dev/null 2>&1").c_str());
  REQUIRE(rc == 0);
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "c" / "summary.json"));
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 2.0, -1e-300, 6.02214076e23}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(std::nan("")) == "nan");
}
