// thermoformal <command> --config job.json [--out dir]
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "thermoformal/errors.hpp"
#include "thermoformal/job.hpp"

namespace {

const std::map<std::string, std::string> kHelp = {
    {"certify", "grid check of the contracting-branch condition"},
    {"spectrum", "leading eigenvalue, eigenvectors and equilibrium state"},
    {"correlations", "correlation decay and fitted rate"},
    {"clt", "Green-Kubo variance and Monte Carlo KS check"},
    {"free-energy", "E(t) = log lambda(phi + t psi) - log lambda(phi) on a grid"},
    {"rate-function", "Legendre transform of the free energy"},
    {"ldp", "empirical large-deviation rates against the rate function"},
    {"response", "lambda, pressure and mean along a one-parameter family"},
    {"budget", "covering-budget arithmetic"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic formalism for non-uniformly expanding circle maps"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  for (const auto& name : tf::job_commands()) {
    auto* sub = app.add_subcommand(name, kHelp.at(name));
    sub->add_option("--config", config_path, "job configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "artifact directory; summary goes to stdout when omitted");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  if (const char* w = std::getenv("THERMOFORMAL_THREADS")) {
    const int n = std::atoi(w);
    if (n > 0) omp_set_num_threads(n);
  }

  tf::JobConfig job;
  try {
    std::ifstream in(config_path);
    if (!in) throw tf::ConfigError("", "cannot open " + config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw tf::ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    job = tf::parse_job(j, command);
  } catch (const tf::ConfigError& e) {
    nlohmann::json err = {{"status", "schema_error"},
                          {"error", {{"type", "config"}, {"path", e.path()}, {"message", e.what()}}}};
    std::cerr << err.dump(2) << '\n';
    return tf::exit_schema;
  }

  const auto result = tf::run_job(job);
  if (out_dir.empty()) {
    std::cout << result.summary.dump(2) << '\n';
  } else {
    try {
      tf::write_artifacts(result, out_dir);
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return tf::exit_computation;
    }
    std::cout << out_dir << '\n';
  }
  if (result.exit_code != tf::exit_ok) {
    std::cerr << result.summary.value("status", "") << '\n';
  }
  return result.exit_code;
}
