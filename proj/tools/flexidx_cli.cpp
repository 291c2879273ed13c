#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "flexidx/flexidx.hpp"

using namespace flexidx;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kInput = 2,
  kInfeasible = 3,
  kVerification = 4,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string model_path;
  std::string json_path;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json(const std::string &path, const json &doc) {
  if (path.empty())
    return;
  if (path == "-") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out)
    throw SchemaError("cannot write JSON output '" + path + "'");
  out << doc.dump(2) << "\n";
}

std::string join_names(const SystemModel &m, const std::vector<int> &idx) {
  std::string s = "{";
  for (std::size_t i = 0; i < idx.size(); ++i)
    s += (i ? ", " : "") + m[static_cast<std::size_t>(idx[i])].name;
  return s + "}";
}

std::string format_vector(const Vector &v) {
  std::ostringstream os;
  os << std::setprecision(6) << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i)
    os << (i ? ", " : "") << v(i);
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------

int run_psi(const Common &c, const std::vector<double> &theta_in) {
  const auto m = load_model(c.model_path);
  const Vector theta = Eigen::Map<const Vector>(theta_in.data(),
                                                static_cast<Eigen::Index>(theta_in.size()));
  if (theta.size() != m.n_theta)
    throw DimensionError("--theta has " + std::to_string(theta.size()) +
                         " components, model expects " + std::to_string(m.n_theta));
  const auto r = psi(m, theta);
  const auto doc = make_report("psi", m, to_json(m, r));
  std::cout << doc.dump(2) << "\n";
  if (c.json_path != "-")
    write_json(c.json_path, doc);
  return r.u <= tol::feasible_psi ? kOk : kInfeasible;
}

int run_index(const Common &c, const std::string &set_name) {
  const auto kind = set_name == "box" ? std::optional(SetKind::Hyperbox)
                                      : parse_set_kind(set_name);
  if (!kind)
    throw UsageError("unknown set kind '" + set_name + "'");
  const auto m = load_model(c.model_path);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = flexibility_index(m, UncertaintySet::for_model(*kind, m),
                                   IndexOptions{.strict_interior = true});
  const double elapsed = seconds_since(t0);

  std::cout << "model        " << m.name << "\n"
            << "set          " << to_string(r.set_kind) << "\n"
            << "delta*       " << std::setprecision(8) << r.delta_star << " ("
            << delta_units(r.set_kind) << ")\n";
  if (r.alpha_star)
    std::cout << "alpha*       " << *r.alpha_star << "\n";
  std::cout << "theta*       " << format_vector(r.theta_star) << "\n"
            << "active set   " << join_names(m, r.active_set.indices) << "\n"
            << "candidates   " << r.candidates.size() << "\n";
  for (const auto &t : r.ties)
    std::cerr << "note: tie with active set " << join_names(m, t) << "\n";

  json diag = {{"candidates", candidates_json(m, r)},
               {"timings", {{"index_seconds", elapsed}}}};
  write_json(c.json_path, make_report("index", m, to_json(m, r), std::move(diag)));
  return kOk;
}

int run_sf(const Common &c, long samples, std::uint64_t seed, unsigned threads) {
  const auto m = load_model(c.model_path);
  const auto e = estimate_sf(m, samples, seed, threads);
  std::cout << "model        " << m.name << "\n"
            << "SF estimate  " << std::setprecision(6) << e.estimate << " +/- "
            << e.std_error << " (95% CI " << e.ci95.first << " .. " << e.ci95.second
            << ")\n"
            << "samples      " << e.n_samples << " (seed " << e.seed << ")\n";
  write_json(c.json_path,
             make_report("sf", m, to_json(e),
                         {{"timings", {{"sf_seconds", e.elapsed}}}, {"threads", threads}}));
  return kOk;
}

int run_verify(const Common &c, const std::string &set_name, int probes,
               std::uint64_t seed, long sf_samples, long alpha_samples,
               unsigned threads) {
  if (set_name != "ellipsoid")
    throw UsageError("verify supports only --set ellipsoid");
  const auto m = load_model(c.model_path);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = flexibility_index(m, UncertaintySet::ellipsoid(),
                                   IndexOptions{.strict_interior = true});
  const double index_seconds = seconds_since(t0);
  const auto v = verify_solution(m, r, probes, seed);
  const auto alpha = estimate_alpha(m, r.delta_star, alpha_samples, seed, threads);
  const auto sf = estimate_sf(m, sf_samples, seed + 1, threads);

  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::ostringstream d;
  auto detail = [&](auto &&...parts) {
    d.str("");
    d << std::setprecision(6);
    (d << ... << parts);
    return d.str();
  };
  const double alpha_gap = std::abs(alpha.estimate - *r.alpha_star);
  const double alpha_tol = 4.0 * alpha.std_error + 1e-12;
  const double sf_margin = 3.0 * sf.std_error;
  const double mc_margin = 3.0 * std::hypot(alpha.std_error, sf.std_error);
  const std::vector<Check> checks = {
      {"containment", v.containment,
       detail("max psi over ", v.n_probe, " probes = ", v.worst_probe_psi)},
      {"psi(theta*) = 0", v.on_feasible_boundary,
       detail("psi = ", v.psi_at_theta_star)},
      {"theta* on ellipsoid", v.on_set_boundary,
       detail("residual = ", v.quadratic_residual)},
      {"alpha MC vs chi2", alpha_gap <= alpha_tol,
       detail("|", alpha.estimate, " - ", *r.alpha_star, "| <= ", alpha_tol)},
      {"alpha* <= SF", *r.alpha_star <= sf.estimate + sf_margin,
       detail(*r.alpha_star, " <= ", sf.estimate, " + ", sf_margin)},
      {"alpha MC <= SF", alpha.estimate <= sf.estimate + mc_margin,
       detail(alpha.estimate, " <= ", sf.estimate, " + ", mc_margin)},
  };

  bool all = true;
  json table = json::array();
  std::cout << "model " << m.name << ": delta* = " << std::setprecision(8) << r.delta_star
            << ", alpha* = " << *r.alpha_star << "\n";
  for (const auto &ch : checks) {
    all = all && ch.pass;
    std::cout << (ch.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(22) << ch.name
              << ch.detail << "\n";
    table.push_back({{"check", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}});
  }

  json result = {{"passed", all},
                 {"checks", table},
                 {"index", to_json(m, r)},
                 {"verification", to_json(v)},
                 {"alpha_mc", to_json(alpha)},
                 {"sf_mc", to_json(sf)}};
  json diag = {{"candidates", candidates_json(m, r)},
               {"timings", {{"index_seconds", index_seconds},
                            {"alpha_seconds", alpha.elapsed},
                            {"sf_seconds", sf.elapsed}}}};
  write_json(c.json_path, make_report("verify", m, std::move(result), std::move(diag)));
  if (!all)
    std::cerr << "error: verification failed\n";
  return all ? kOk : kVerification;
}

int run_boundary(const Common &c, int resolution, const std::string &out_path) {
  const auto m = load_model(c.model_path);
  if (m.n_theta != 2)
    throw DimensionError("boundary needs a model with n_theta = 2 (model '" + m.name +
                         "' has " + std::to_string(m.n_theta) + ")");
  const auto r = flexibility_index(m, UncertaintySet::ellipsoid(),
                                   IndexOptions{.strict_interior = true});
  const auto data = boundary_data(m, r, resolution);
  std::ofstream out(out_path);
  if (!out)
    throw SchemaError("cannot write CSV output '" + out_path + "'");
  write_boundary_csv(out, data);
  std::cout << "wrote " << out_path << ": " << data.feasible_boundary.size()
            << " boundary points, " << data.ellipse.size() << " ellipse points, "
            << data.hyperbox.size() << " hyperbox corners\n";
  json result = {{"csv", out_path},
                 {"resolution", resolution},
                 {"delta_star", r.delta_star},
                 {"feasible_boundary_points", data.feasible_boundary.size()},
                 {"ellipse_points", data.ellipse.size()},
                 {"hyperbox_corners", data.hyperbox.size()}};
  write_json(c.json_path, make_report("boundary", m, std::move(result)));
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Flexibility index analysis of linear systems under Gaussian uncertainty"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("model", common.model_path, "model JSON file")->required();
    sub->add_option("--json", common.json_path, "write the JSON report here ('-' for stdout)");
  };

  std::vector<double> theta;
  auto *psi_cmd = app.add_subcommand("psi", "evaluate the feasibility function at theta");
  add_common(psi_cmd);
  psi_cmd->add_option("--theta", theta, "comma-separated parameter values")
      ->required()
      ->delimiter(',');

  std::string set_name = "ellipsoid";
  const std::vector<std::string> set_names = {"ellipsoid", "box", "l1", "l2", "linf"};
  auto *index_cmd = app.add_subcommand("index", "compute the flexibility index");
  add_common(index_cmd);
  index_cmd->add_option("--set", set_name, "uncertainty set")
      ->check(CLI::IsMember(set_names));

  long samples = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto *sf_cmd = app.add_subcommand("sf", "Monte Carlo stochastic flexibility");
  add_common(sf_cmd);
  sf_cmd->add_option("--samples", samples, "number of samples")
      ->check(CLI::PositiveNumber);
  sf_cmd->add_option("--seed", seed, "random seed")->required();
  sf_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  int probes = 1000;
  long alpha_samples = 10000;
  auto *verify_cmd = app.add_subcommand("verify", "check the index against its guarantees");
  add_common(verify_cmd);
  verify_cmd->add_option("--set", set_name, "uncertainty set (ellipsoid only)");
  verify_cmd->add_option("--probes", probes, "probe points inside the ellipsoid")
      ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--seed", seed, "random seed")->required();
  verify_cmd->add_option("--samples", samples, "Monte Carlo samples for SF")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--alpha-samples", alpha_samples,
                         "Monte Carlo samples for the ellipsoid mass")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  int resolution = 360;
  std::string out_path;
  auto *boundary_cmd = app.add_subcommand("boundary", "write planar plot data as CSV");
  add_common(boundary_cmd);
  boundary_cmd->add_option("--resolution", resolution, "points per curve")
      ->check(CLI::PositiveNumber);
  boundary_cmd->add_option("--out", out_path, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*psi_cmd)
      return run_psi(common, theta);
    if (*index_cmd)
      return run_index(common, set_name);
    if (*sf_cmd)
      return run_sf(common, samples, seed, threads);
    if (*verify_cmd)
      return run_verify(common, set_name, probes, seed, samples, alpha_samples, threads);
    if (*boundary_cmd)
      return run_boundary(common, resolution, out_path);
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kUsage;
}
