#ifndef FLEXIDX_REPORT_HPP
#define FLEXIDX_REPORT_HPP

// JSON documents for analysis results and CSV plot data for planar models.
//
// Every report has the same envelope:
//   { "tool", "version", "command", "model", "result", "diagnostics" }
// Constraint indices in reports are 0-based and accompanied by names.

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flexidx/flexindex.hpp"
#include "flexidx/montecarlo.hpp"

#ifndef FLEXIDX_VERSION
#define FLEXIDX_VERSION "0.0.0"
#endif

namespace flexidx {

using nlohmann::json;

inline constexpr const char *kToolName = "flexidx";
inline constexpr const char *kToolVersion = FLEXIDX_VERSION;

inline json vector_json(const Vector &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v(i));
  return a;
}

inline json names_json(const SystemModel &m, const std::vector<int> &indices) {
  json a = json::array();
  for (int j : indices)
    a.push_back(m[static_cast<std::size_t>(j)].name);
  return a;
}

inline json to_json(const SystemModel &m, const PsiResult &r) {
  return {{"psi", r.u},
          {"feasible", r.u <= tol::feasible_psi},
          {"z_star", vector_json(r.z_star)},
          {"active_constraints", r.active_constraints},
          {"active_names", names_json(m, r.active_constraints)}};
}

inline json to_json(const SystemModel &m, const ActiveCandidate &c) {
  return {{"indices", c.indices},
          {"names", names_json(m, c.indices)},
          {"lambda", vector_json(c.lambda)},
          {"gradient_rank", c.gradient_rank}};
}

inline json to_json(const SystemModel &m, const IndexResult &r) {
  json ties = json::array();
  for (const auto &t : r.ties)
    ties.push_back(t);
  return {{"set", to_string(r.set_kind)},
          {"units", delta_units(r.set_kind)},
          {"delta_star", r.delta_star},
          {"alpha_star", r.alpha_star ? json(*r.alpha_star) : json(nullptr)},
          {"theta_star", vector_json(r.theta_star)},
          {"z_star", vector_json(r.z_star)},
          {"active_set", r.interior ? to_json(m, r.active_set) : json(nullptr)},
          {"interior", r.interior},
          {"psi_nominal", r.psi_nominal},
          {"ties", ties}};
}

inline json candidates_json(const SystemModel &m, const IndexResult &r) {
  json a = json::array();
  for (const auto &c : r.candidates)
    a.push_back({{"indices", c.indices},
                 {"names", names_json(m, c.indices)},
                 {"status", c.status},
                 {"delta", c.delta ? json(*c.delta) : json(nullptr)},
                 {"reason", c.reason},
                 {"tie", c.tie}});
  return a;
}

inline json to_json(const SystemModel &m, const ChiResult &r) {
  return {{"chi", r.chi},
          {"feasible", r.feasible},
          {"theta_worst", vector_json(r.theta_worst)},
          {"active_set", r.active_set},
          {"active_names", names_json(m, r.active_set)}};
}

inline json to_json(const McEstimate &e) {
  return {{"estimate", e.estimate},
          {"stderr", e.std_error},
          {"ci95", {e.ci95.first, e.ci95.second}},
          {"n_samples", e.n_samples},
          {"seed", e.seed},
          {"elapsed_seconds", e.elapsed}};
}

inline json to_json(const VerificationReport &v) {
  return {{"n_probe", v.n_probe},
          {"containment", {{"pass", v.containment},
                           {"worst_probe_psi", v.n_probe > 0 ? json(v.worst_probe_psi)
                                                             : json(nullptr)}}},
          {"psi_at_theta_star", {{"pass", v.on_feasible_boundary},
                                 {"value", v.psi_at_theta_star}}},
          {"on_ellipsoid", {{"pass", v.on_set_boundary},
                            {"residual", v.quadratic_residual}}}};
}

inline json make_report(const std::string &command, const SystemModel &m,
                        json result, json diagnostics = json::object()) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"command", command},
          {"model", m.name},
          {"result", std::move(result)},
          {"diagnostics", std::move(diagnostics)}};
}

// ---------------------------------------------------------------------------
// Planar plot data

struct BoundaryData {
  std::vector<Vector> feasible_boundary;
  std::vector<Vector> ellipse;
  std::vector<Vector> hyperbox; ///< empty when the model has no hyperbox
};

/// Largest t with psi(mean + t u) <= 0, capped at `cap`.
inline double ray_to_boundary(const SystemModel &m, const Vector &u, double cap) {
  const Eigen::Index nz = m.n_z;
  LpProblem p(nz + 1, Sense::Maximize);
  p.objective(nz) = 1.0;
  p.lower(nz) = 0.0;
  p.upper(nz) = cap;
  const Vector g = nominal_offsets(m);
  for (std::size_t j = 0; j < m.size(); ++j) {
    Vector row(nz + 1);
    row.head(nz) = m[j].a_z;
    row(nz) = m[j].a_theta.dot(u);
    p.add_inequality(row, -g(static_cast<Eigen::Index>(j)));
  }
  const auto s = solve_lp(p);
  return s.optimal() ? s.x(nz) : 0.0;
}

/// Points on the feasible boundary (rays from the mean), on the optimal
/// ellipse and at the optimal hyperbox corners.
inline BoundaryData boundary_data(const SystemModel &m, const IndexResult &ellipse,
                                  int resolution) {
  if (m.n_theta != 2)
    throw DimensionError("boundary plot data needs n_theta = 2 (model has " +
                         std::to_string(m.n_theta) + ")");
  if (resolution < 1)
    throw DomainError("resolution must be positive");
  BoundaryData out;
  const auto chol = covariance_factor(m);
  const Vector &mean = m.uncertainty.mean;
  const double r = std::sqrt(ellipse.delta_star);
  const double cap = 10.0 * std::max(1.0, r) * chol.L.cwiseAbs().maxCoeff();
  for (int k = 0; k < resolution; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / resolution;
    Vector u(2);
    u << std::cos(phi), std::sin(phi);
    out.feasible_boundary.push_back(mean + ray_to_boundary(m, u, cap) * u);
    out.ellipse.push_back(mean + r * (chol.L * u));
  }
  if (m.hyperbox) {
    const auto box = flexibility_index(m, UncertaintySet::model_box(m));
    const double f = box.delta_star;
    const auto &h = *m.hyperbox;
    const double xs[] = {-h.delta_minus(0), h.delta_plus(0), h.delta_plus(0), -h.delta_minus(0)};
    const double ys[] = {-h.delta_minus(1), -h.delta_minus(1), h.delta_plus(1), h.delta_plus(1)};
    for (int c = 0; c < 4; ++c) {
      Vector p(2);
      p << mean(0) + f * xs[c], mean(1) + f * ys[c];
      out.hyperbox.push_back(p);
    }
  }
  return out;
}

inline void write_boundary_csv(std::ostream &os, const BoundaryData &d) {
  os.precision(17);
  auto block = [&](const char *name, const std::vector<Vector> &pts) {
    os << "# block: " << name << "\n" << "theta1,theta2\n";
    for (const auto &p : pts)
      os << p(0) << "," << p(1) << "\n";
  };
  block("feasible_boundary", d.feasible_boundary);
  block("ellipse", d.ellipse);
  if (!d.hyperbox.empty())
    block("hyperbox", d.hyperbox);
}

} // namespace flexidx

#endif // FLEXIDX_REPORT_HPP
