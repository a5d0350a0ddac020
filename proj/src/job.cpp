#include "thermoformal/job.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "thermoformal/certify.hpp"
#include "thermoformal/errors.hpp"
#include "thermoformal/map_core.hpp"
#include "thermoformal/observable.hpp"
#include "thermoformal/sampler.hpp"
#include "thermoformal/statistics.hpp"
#include "thermoformal/thermo_curves.hpp"
#include "thermoformal/transfer_operator.hpp"

namespace tf {

using nlohmann::json;

const std::vector<std::string>& job_commands() {
  static const std::vector<std::string> c = {"certify",      "spectrum",      "correlations",
                                             "clt",          "free-energy",   "rate-function",
                                             "ldp",          "response",      "budget"};
  return c;
}

namespace {

enum class Kind { string, integer, uinteger, number, opt_number, opt_integer, object, opt_object,
                  numbers, integers };

struct Field {
  const char* key;
  Kind kind;
  json def;
};

const std::vector<Field>& schema() {
  static const std::vector<Field> f = {
      {"schema_version", Kind::integer, kSchemaVersion},
      {"command", Kind::string, ""},
      {"map", Kind::object, {{"kind", "builtin"}, {"name", "doubling"}}},
      {"potential", Kind::object, {{"kind", "constant"}, {"value", 0.0}}},
      {"observable", Kind::object, {{"kind", "cos"}, {"k", 1}, {"amplitude", 1.0}}},
      {"test_observable", Kind::opt_object, nullptr},
      {"scheme", Kind::string, "collocation"},
      {"n", Kind::integer, 1024},
      {"eig_tol", Kind::number, 1e-12},
      {"residual_tol", Kind::number, 1e-10},
      {"max_iterations", Kind::integer, 500000},
      {"gap_iterations", Kind::integer, 160},
      // certify
      {"condition", Kind::string, "C"},
      {"N", Kind::integer, 1},
      {"gamma", Kind::number, 0.6},
      {"resolution", Kind::integer, 1024},
      {"rho", Kind::opt_number, nullptr},
      // correlations / clt
      {"lag_max", Kind::integer, 64},
      {"orbit_length", Kind::integer, 50},
      {"samples", Kind::integer, 100000},
      {"seed", Kind::uinteger, std::uint64_t{1}},
      {"batch_size", Kind::integer, 4096},
      // free energy / rate function / ldp
      {"t_max", Kind::opt_number, nullptr},
      {"t_steps", Kind::integer, 41},
      {"epsilon", Kind::number, 1.0},
      {"affine_tol", Kind::number, 1e-6},
      {"strict_tol", Kind::number, 1e-8},
      {"mc_t", Kind::numbers, json::array()},
      {"mc_orbit_length", Kind::integer, 30},
      {"s_steps", Kind::integer, 201},
      {"interval", Kind::numbers, {0.3, 0.5}},
      {"orbit_lengths", Kind::integers, {20, 40, 80}},
      // response
      {"family", Kind::object,
       {{"kind", "builtin_param"}, {"name", "derived_from_expanding"}, {"param", "v"}}},
      {"v_min", Kind::number, 0.0},
      {"v_max", Kind::number, 1.9},
      {"v_count", Kind::integer, 33},
      {"guard_N", Kind::opt_integer, nullptr},
      {"guard_gamma", Kind::number, 0.99},
      {"guard_resolution", Kind::integer, 256},
      // budget
      {"L", Kind::number, 1.0},
      {"G", Kind::opt_integer, nullptr},
      {"dim", Kind::integer, 1},
      {"C", Kind::opt_number, nullptr},
      {"ell_cap", Kind::integer, 10000},
      {"k_cap", Kind::integer, 2000},
  };
  return f;
}

void check_kind(const json& v, Kind k, const std::string& path) {
  auto fail = [&](const char* what) { throw ConfigError(path, std::string("expected ") + what); };
  switch (k) {
    case Kind::string:
      if (!v.is_string()) fail("a string");
      break;
    case Kind::integer:
      if (!v.is_number_integer()) fail("an integer");
      break;
    case Kind::uinteger:
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
        fail("a non-negative integer");
      }
      break;
    case Kind::number:
      if (!v.is_number()) fail("a number");
      break;
    case Kind::opt_number:
      if (!v.is_null() && !v.is_number()) fail("a number or null");
      break;
    case Kind::opt_integer:
      if (!v.is_null() && !v.is_number_integer()) fail("an integer or null");
      break;
    case Kind::object:
      if (!v.is_object()) fail("an object");
      break;
    case Kind::opt_object:
      if (!v.is_null() && !v.is_object()) fail("an object or null");
      break;
    case Kind::numbers:
    case Kind::integers:
      if (!v.is_array()) fail("an array");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const bool ok = k == Kind::numbers ? v[i].is_number() : v[i].is_number_integer();
        if (!ok) throw ConfigError(path + "/" + std::to_string(i), "wrong element type");
      }
      break;
  }
}

// Numbers are stored as doubles so that 1 and 1.0 resolve identically.
json normalize(const json& v, Kind k) {
  if (k == Kind::number || (k == Kind::opt_number && !v.is_null())) return v.get<double>();
  if (k == Kind::uinteger) return v.get<std::uint64_t>();
  if (k == Kind::numbers) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x.get<double>());
    return a;
  }
  return v;
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

void reject_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return it.key() == a; }) == allowed.end()) {
      throw ConfigError(path + "/" + it.key(), "unknown key");
    }
  }
}

json resolve_family(const json& f) {
  const std::string path = "/family";
  require(f.contains("kind") && f.at("kind").is_string(), path + "/kind", "missing");
  const auto kind = f.at("kind").get<std::string>();
  if (kind == "constant" || kind == "potential_tilt") {
    reject_keys(f, {"kind"}, path);
    return {{"kind", kind}};
  }
  if (kind == "builtin_param") {
    reject_keys(f, {"kind", "name", "param", "params"}, path);
    require(f.contains("name") && f.at("name").is_string(), path + "/name", "missing");
    require(f.contains("param") && f.at("param").is_string(), path + "/param", "missing");
    json params = f.value("params", json::object());
    require(params.is_object(), path + "/params", "expected an object");
    const auto name = f.at("name").get<std::string>();
    const auto param = f.at("param").get<std::string>();
    // Building one member validates the name and parameter.
    json probe = params;
    probe[param] = 0.0;
    try {
      builtin_map(name, probe);
    } catch (const ConfigError& e) {
      throw ConfigError(path, e.what());
    } catch (const std::exception& e) {
      // parameter value 0 may be outside the family; names were accepted
    }
    return {{"kind", kind}, {"name", name}, {"param", param}, {"params", params}};
  }
  throw ConfigError(path + "/kind", "expected constant, potential_tilt or builtin_param");
}

}  // namespace

const std::string& JobConfig::command() const { return resolved.at("command").get_ref<const std::string&>(); }

JobConfig parse_job(const json& j, const std::optional<std::string>& command) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& f = schema();
    if (std::none_of(f.begin(), f.end(), [&](const Field& x) { return it.key() == x.key; })) {
      throw ConfigError("/" + it.key(), "unknown key");
    }
  }
  json r = json::object();
  for (const auto& f : schema()) {
    const std::string path = std::string("/") + f.key;
    if (j.contains(f.key)) {
      check_kind(j.at(f.key), f.kind, path);
      r[f.key] = normalize(j.at(f.key), f.kind);
    } else {
      r[f.key] = f.def;
    }
  }
  require(r["schema_version"] == kSchemaVersion, "/schema_version",
          "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  if (command) {
    const auto c = r["command"].get<std::string>();
    require(c.empty() || c == *command, "/command", "does not match the requested command '" + *command + "'");
    r["command"] = *command;
  }
  const auto cmd = r["command"].get<std::string>();
  const auto& cmds = job_commands();
  require(std::find(cmds.begin(), cmds.end(), cmd) != cmds.end(), "/command",
          "unknown command '" + cmd + "'");

  // Semantic checks.
  const auto scheme = r["scheme"].get<std::string>();
  require(scheme == "ulam" || scheme == "collocation", "/scheme", "expected ulam or collocation");
  require(r["n"].get<int>() >= 16, "/n", "must be >= 16");
  require(r["eig_tol"].get<double>() > 0.0, "/eig_tol", "must be positive");
  require(r["residual_tol"].get<double>() > 0.0, "/residual_tol", "must be positive");
  require(r["max_iterations"].get<int>() >= 1, "/max_iterations", "must be >= 1");
  require(r["gap_iterations"].get<int>() >= 0, "/gap_iterations", "must be >= 0");
  const auto cond = r["condition"].get<std::string>();
  require(cond == "C" || cond == "Cprime", "/condition", "expected C or Cprime");
  require(r["N"].get<int>() >= 1, "/N", "must be >= 1");
  const double gamma = r["gamma"].get<double>();
  require(gamma > 0.0 && gamma < 1.0, "/gamma", "must lie in (0, 1)");
  require(r["resolution"].get<int>() >= 16, "/resolution", "must be >= 16");
  require(r["rho"].is_null() || r["rho"].get<double>() >= 0.0, "/rho", "must be >= 0");
  require(r["lag_max"].get<int>() >= 1, "/lag_max", "must be >= 1");
  require(r["orbit_length"].get<int>() >= 1, "/orbit_length", "must be >= 1");
  require(r["samples"].get<int>() >= 2, "/samples", "must be >= 2");
  require(r["batch_size"].get<int>() >= 1, "/batch_size", "must be >= 1");
  require(r["t_max"].is_null() || r["t_max"].get<double>() > 0.0, "/t_max", "must be positive");
  const int ts = r["t_steps"].get<int>();
  require(ts >= 5 && ts % 2 == 1, "/t_steps", "must be odd and >= 5");
  require(r["epsilon"].get<double>() > 0.0, "/epsilon", "must be positive");
  require(r["mc_orbit_length"].get<int>() >= 1, "/mc_orbit_length", "must be >= 1");
  require(r["s_steps"].get<int>() >= 2, "/s_steps", "must be >= 2");
  require(r["interval"].size() == 2 && r["interval"][0].get<double>() <= r["interval"][1].get<double>(),
          "/interval", "expected [a, b] with a <= b");
  require(!r["orbit_lengths"].empty(), "/orbit_lengths", "must not be empty");
  for (std::size_t i = 0; i < r["orbit_lengths"].size(); ++i) {
    require(r["orbit_lengths"][i].get<int>() >= 1, "/orbit_lengths/" + std::to_string(i), "must be >= 1");
  }
  require(r["v_count"].get<int>() >= 3, "/v_count", "must be >= 3");
  require(r["v_min"].get<double>() < r["v_max"].get<double>(), "/v_max", "must exceed v_min");
  require(r["guard_N"].is_null() || r["guard_N"].get<int>() >= 1, "/guard_N", "must be >= 1");
  const double gg = r["guard_gamma"].get<double>();
  require(gg > 0.0 && gg < 1.0, "/guard_gamma", "must lie in (0, 1)");
  require(r["guard_resolution"].get<int>() >= 16, "/guard_resolution", "must be >= 16");
  require(r["L"].get<double>() >= 1.0, "/L", "must be >= 1");
  require(r["G"].is_null() || r["G"].get<int>() >= 2, "/G", "must be >= 2");
  require(r["dim"].get<int>() >= 1, "/dim", "must be >= 1");
  require(r["ell_cap"].get<int>() >= 1, "/ell_cap", "must be >= 1");
  require(r["k_cap"].get<int>() >= 1, "/k_cap", "must be >= 1");

  // Map and observables resolve to their canonical serialized form.
  const auto map = map_from_json(r["map"], "/map");
  r["map"] = map_to_json(map);
  r["potential"] = observable_to_json(observable_from_json(r["potential"], map, "/potential"));
  r["observable"] = observable_to_json(observable_from_json(r["observable"], map, "/observable"));
  if (!r["test_observable"].is_null()) {
    r["test_observable"] =
        observable_to_json(observable_from_json(r["test_observable"], map, "/test_observable"));
  }
  r["family"] = resolve_family(r["family"]);
  return JobConfig{r};
}

json to_json(const JobConfig& c) { return c.resolved; }

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ',';
      out_ << format_number(v);
      first = false;
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Context {
  const JobConfig& job;
  MapSpec map;
  PotentialSpec phi;
  Observable psi;
  Scheme scheme;
  std::size_t n;
  TripleOptions triple;

  explicit Context(const JobConfig& j)
      : job(j),
        map(map_from_json(j.at("map"), "/map")),
        phi(observable_from_json(j.at("potential"), map, "/potential")),
        psi(observable_from_json(j.at("observable"), map, "/observable")),
        scheme(scheme_from_string(j.get<std::string>("scheme"))),
        n(static_cast<std::size_t>(j.get<int>("n"))) {
    triple.tol = j.get<double>("eig_tol");
    triple.residual_tol = j.get<double>("residual_tol");
    triple.max_iterations = j.get<int>("max_iterations");
    triple.gap_iterations = j.get<int>("gap_iterations");
  }

  SamplingOptions sampling() const {
    SamplingOptions o;
    o.batch_size = static_cast<std::size_t>(job.get<int>("batch_size"));
    return o;
  }

  CurveOptions curve_options() const {
    CurveOptions o;
    o.affine_tol = job.get<double>("affine_tol");
    o.strict_tol = job.get<double>("strict_tol");
    o.guard_epsilon = job.get<double>("epsilon");
    o.triple = triple;
    return o;
  }

  double t_max() const {
    const auto& t = job.at("t_max");
    if (!t.is_null()) return t.get<double>();
    return default_t_max(phi, psi, job.get<double>("epsilon"));
  }
};

json triple_json(const SpectralTriple& t) {
  json j = {{"lambda", t.lambda},
            {"pressure", pressure(t.lambda)},
            {"gap_ratio", t.gap_ratio},
            {"iterations", t.iterations},
            {"right_residual", t.right_residual},
            {"left_residual", t.left_residual}};
  j["primitive"] = t.primitive ? json(*t.primitive) : json(nullptr);
  return j;
}

void cmd_spectrum(Context& c, JobResult& r) {
  const auto m = build_matrix(c.map, c.phi, c.scheme, c.n);
  const auto t = leading_triple(m, c.triple);
  const auto mu = equilibrium_measure(t, c.scheme);
  std::vector<Observable> modes;
  for (int k = 1; k <= 5; ++k) modes.push_back(cos_mode(k));
  json res = triple_json(t);
  res["renormalization"] = mu.renormalization;
  res["invariance_defect"] = invariance_defect(c.map, mu, modes);
  res["mean_observable"] = integrate(mu, c.psi.eval);
  const auto dens = mu.density();
  Csv csv({"x", "h", "nu", "mu", "density"});
  for (std::size_t i = 0; i < m.n(); ++i) csv.row({m.node(i), t.h[i], t.nu[i], mu.mu[i], dens[i]});
  r.summary["results"] = res;
  r.csv["spectrum.csv"] = csv.str();
}

void cmd_certify(Context& c, JobResult& r) {
  CertifyOptions opts;
  if (!c.job.at("rho").is_null()) opts.rho = c.job.get<double>("rho");
  const int N = c.job.get<int>("N");
  const double gamma = c.job.get<double>("gamma");
  const int res = c.job.get<int>("resolution");
  const auto rep = c.job.get<std::string>("condition") == "C"
                       ? check_condition_C(c.map, N, gamma, res, opts)
                       : check_condition_Cprime(c.map, N, gamma, res, opts);
  r.summary["results"] = to_json(rep);
  Csv csv({"center", "branch", "preimage", "raw", "bound", "rho"});
  for (const auto& w : rep.cells) {
    csv.row({w.center, static_cast<double>(w.branch), w.preimage, w.raw, w.bound, w.rho});
  }
  r.csv["certify.csv"] = csv.str();
  if (!rep.pass) {
    r.exit_code = exit_cert_fail;
    r.summary["status"] = "certification_failed";
  } else if (rep.certification != CertificationMode::certified) {
    r.exit_code = exit_uncertified;
    r.summary["status"] = "uncertified";
  }
}

void cmd_correlations(Context& c, JobResult& r) {
  const auto m = build_matrix(c.map, c.phi, c.scheme, c.n);
  const auto t = leading_triple(m, c.triple);
  const auto& tj = c.job.at("test_observable");
  const Observable g = tj.is_null() ? c.psi : observable_from_json(tj, c.map, "/test_observable");
  const auto s = correlations(c.map, c.phi, m, t, g, c.psi, c.job.get<int>("lag_max"));
  json res = to_json(s);
  res["gap_ratio"] = t.gap_ratio;
  r.summary["results"] = res;
  Csv csv({"lag", "C"});
  for (std::size_t k = 0; k < s.values.size(); ++k) csv.row({static_cast<double>(k), s.values[k]});
  r.csv["correlations.csv"] = csv.str();
}

void cmd_clt(Context& c, JobResult& r) {
  const auto m = build_matrix(c.map, c.phi, c.scheme, c.n);
  const auto t = leading_triple(m, c.triple);
  const auto v = clt_variance(c.map, c.phi, m, t, c.psi, c.job.get<int>("lag_max"));
  const EquilibriumSampler sampler(c.map, c.phi, t, equilibrium_measure(t, c.scheme));
  const auto e = clt_empirical(sampler, c.psi, v, c.job.get<int>("orbit_length"),
                               static_cast<std::size_t>(c.job.get<int>("samples")),
                               c.job.get<std::uint64_t>("seed"), c.sampling());
  r.summary["results"] = {{"variance", to_json(v)}, {"empirical", to_json(e)}};
  if (e.refused) {
    r.exit_code = exit_computation;
    r.summary["status"] = "refused";
    r.summary["error"] = {{"module", "spectral_statistics"}, {"type", "refused"}, {"message", e.status}};
    return;
  }
  Csv csv({"sample_quantile", "gaussian_quantile"});
  for (const auto& [a, b] : e.qq) csv.row({a, b});
  r.csv["clt_qq.csv"] = csv.str();
}

FreeEnergyCurve curve_for(Context& c, double t_max) {
  return free_energy_curve(c.map, c.phi, c.psi, t_max, c.job.get<int>("t_steps"), c.scheme, c.n,
                           c.curve_options());
}

std::string curve_csv(const FreeEnergyCurve& f) {
  Csv csv({"t", "E", "dE", "d2E", "mean_psi"});
  for (std::size_t i = 0; i < f.t.size(); ++i) csv.row({f.t[i], f.E[i], f.dE[i], f.d2E[i], f.mean_psi[i]});
  return csv.str();
}

void cmd_free_energy(Context& c, JobResult& r) {
  const double tm = c.t_max();
  const auto f = curve_for(c, tm);
  json res = to_json(f);
  res["t_max_used"] = tm;
  res["derivative_checks"] = to_json(derivative_checks(f, c.psi));
  const auto& mc_t = c.job.at("mc_t");
  if (!mc_t.empty()) {
    const auto m = build_matrix(c.map, c.phi, c.scheme, c.n);
    const auto t = leading_triple(m, c.triple);
    const EquilibriumSampler sampler(c.map, c.phi, t, equilibrium_measure(t, c.scheme));
    const int len[] = {c.job.get<int>("mc_orbit_length")};
    const auto sums = sample_birkhoff_sums(sampler, c.psi, len,
                                           static_cast<std::size_t>(c.job.get<int>("samples")),
                                           c.job.get<std::uint64_t>("seed"), c.sampling());
    json mc = json::array();
    for (const auto& tv : mc_t) {
      const double tt = tv.get<double>();
      mc.push_back({{"t", tt}, {"E_mc", free_energy_mc(sums[0], tt, len[0])}});
    }
    res["monte_carlo"] = mc;
  }
  r.summary["results"] = res;
  r.csv["free_energy.csv"] = curve_csv(f);
}

void cmd_rate_function(Context& c, JobResult& r) {
  const double tm = c.t_max();
  const auto f = curve_for(c, tm);
  const auto rf = rate_function(f, c.job.get<int>("s_steps"));
  r.summary["results"] = {{"free_energy", to_json(f)}, {"rate_function", to_json(rf)}, {"t_max_used", tm}};
  Csv csv({"s", "I", "t_of_s"});
  for (std::size_t i = 0; i < rf.s.size(); ++i) csv.row({rf.s[i], rf.I[i], rf.t_of_s[i]});
  r.csv["rate_function.csv"] = csv.str();
  r.csv["free_energy.csv"] = curve_csv(f);
}

void cmd_ldp(Context& c, JobResult& r) {
  const double tm = c.t_max();
  const auto f = curve_for(c, tm);
  const auto rf = rate_function(f, c.job.get<int>("s_steps"));
  const auto m = build_matrix(c.map, c.phi, c.scheme, c.n);
  const auto t = leading_triple(m, c.triple);
  const EquilibriumSampler sampler(c.map, c.phi, t, equilibrium_measure(t, c.scheme));
  const auto lens = c.job.get<std::vector<int>>("orbit_lengths");
  const auto iv = c.job.get<std::vector<double>>("interval");
  const auto l = ldp_empirical(sampler, c.psi, iv[0], iv[1], lens,
                               static_cast<std::size_t>(c.job.get<int>("samples")),
                               c.job.get<std::uint64_t>("seed"), rf, c.sampling());
  r.summary["results"] = {{"ldp", to_json(l)}, {"rate_function", to_json(rf)}, {"t_max_used", tm}};
  Csv csv({"n", "count", "rate"});
  for (std::size_t i = 0; i < l.n.size(); ++i) {
    csv.row({static_cast<double>(l.n[i]), static_cast<double>(l.counts[i]),
             l.rate[i].value_or(std::numeric_limits<double>::quiet_NaN())});
  }
  r.csv["ldp.csv"] = csv.str();
}

Family family_of(Context& c) {
  const auto& f = c.job.at("family");
  const auto kind = f.at("kind").get<std::string>();
  if (kind == "constant") {
    return [map = c.map, phi = c.phi](double) { return FamilyMember{map, phi}; };
  }
  if (kind == "potential_tilt") {
    return [map = c.map, phi = c.phi, psi = c.psi](double v) {
      return FamilyMember{map, tilt(phi, psi, v)};
    };
  }
  return [name = f.at("name").get<std::string>(), param = f.at("param").get<std::string>(),
          params = f.at("params"), phi = c.phi](double v) {
    json p = params;
    p[param] = v;
    return FamilyMember{builtin_map(name, p), phi};
  };
}

void cmd_response(Context& c, JobResult& r) {
  const int k = c.job.get<int>("v_count");
  const double a = c.job.get<double>("v_min");
  const double b = c.job.get<double>("v_max");
  std::vector<double> v(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (k - 1);
  ResponseOptions o;
  o.scheme = c.scheme;
  o.n = c.n;
  o.triple = c.triple;
  if (!c.job.at("guard_N").is_null()) o.guard_N = c.job.get<int>("guard_N");
  o.guard_gamma = c.job.get<double>("guard_gamma");
  o.guard_resolution = c.job.get<int>("guard_resolution");
  const auto s = response_scan(family_of(c), c.psi, v, o);
  r.summary["results"] = to_json(s);
  Csv csv({"v", "lambda", "pressure", "m", "dlambda_dv"});
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    csv.row({s.v[i], s.lambda[i], s.pressure[i], s.mean[i], s.d_lambda[i]});
  }
  r.csv["response.csv"] = csv.str();
}

void cmd_budget(Context& c, JobResult& r) {
  CoveringBudgetInput in;
  in.gamma = c.job.get<double>("gamma");
  in.L = c.job.get<double>("L");
  in.N = c.job.get<int>("N");
  in.G = c.job.at("G").is_null() ? c.map.degree : c.job.get<int>("G");
  in.dim = c.job.get<int>("dim");
  in.C = c.job.at("C").is_null() ? 0.0 : c.job.get<double>("C");
  in.ell_cap = c.job.get<int>("ell_cap");
  in.k_cap = c.job.get<int>("k_cap");
  if (in.G < 2) throw ConfigError("/G", "the covering budget needs degree >= 2");
  r.summary["results"] = to_json(covering_budget(in));
}

json error_payload(const char* type, const std::string& msg) {
  return {{"type", type}, {"message", msg}};
}

}  // namespace

JobResult run_job(const JobConfig& job) {
  JobResult r;
  r.summary = {{"schema_version", kSchemaVersion},
               {"command", job.command()},
               {"config", job.resolved},
               {"status", "ok"}};
  static const std::map<std::string, std::function<void(Context&, JobResult&)>> table = {
      {"spectrum", cmd_spectrum},       {"certify", cmd_certify},
      {"correlations", cmd_correlations}, {"clt", cmd_clt},
      {"free-energy", cmd_free_energy},   {"rate-function", cmd_rate_function},
      {"ldp", cmd_ldp},                   {"response", cmd_response},
      {"budget", cmd_budget}};
  auto fail = [&](int code, const char* status, json payload) {
    r.exit_code = code;
    r.summary["status"] = status;
    r.summary["error"] = std::move(payload);
    r.summary.erase("results");
    r.csv.clear();
  };
  try {
    Context c(job);
    table.at(job.command())(c, r);
  } catch (const ConfigError& e) {
    json p = error_payload("config", e.what());
    p["path"] = e.path();
    fail(exit_schema, "schema_error", p);
  } catch (const ConvergenceError& e) {
    json p = error_payload("convergence", e.what());
    p["last_estimate"] = nullable(e.last_estimate());
    p["iterations"] = e.iterations();
    fail(exit_computation, "computation_error", p);
  } catch (const GridPointError& e) {
    json p = error_payload("grid_point", e.what());
    p["value"] = e.value();
    fail(exit_computation, "computation_error", p);
  } catch (const ReducibilityError& e) {
    fail(exit_computation, "computation_error", error_payload("reducible", e.what()));
  } catch (const BranchInversionError& e) {
    fail(exit_computation, "computation_error", error_payload("branch_inversion", e.what()));
  } catch (const DegenerateLegendre& e) {
    fail(exit_computation, "computation_error", error_payload("degenerate_legendre", e.what()));
  } catch (const std::exception& e) {
    fail(exit_computation, "computation_error", error_payload("other", e.what()));
  }
  return r;
}

void write_artifacts(const JobResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "summary.json");
    out << r.summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / "summary.json").string());
  }
  for (const auto& [name, text] : r.csv) {
    std::ofstream out(fs::path(dir) / name);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  }
}

}  // namespace tf
