#ifndef FLEXIDX_MODEL_HPP
#define FLEXIDX_MODEL_HPP

// Affine constraint systems with recourse,
//
//   f_j(z, theta) = a_z,j . z + a_theta,j . theta + c_j <= 0,   j in J,
//
// together with the Gaussian description of theta and an optional hyperbox.
// Models are read from and written to JSON; see README for the schema.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"

namespace flexidx {

struct LinearConstraint {
  std::string name;
  Vector a_z;
  Vector a_theta;
  double c = 0.0;

  bool operator==(const LinearConstraint &o) const {
    return name == o.name && same_entries(a_z, o.a_z) &&
           same_entries(a_theta, o.a_theta) && c == o.c;
  }
};

struct GaussianUncertainty {
  Vector mean;
  Matrix covariance;

  bool operator==(const GaussianUncertainty &o) const {
    return same_entries(mean, o.mean) && same_entries(covariance, o.covariance);
  }
};

/// Maximum lower and upper deviations of the hyperbox set.
struct HyperboxSpec {
  Vector delta_minus;
  Vector delta_plus;

  bool operator==(const HyperboxSpec &o) const {
    return same_entries(delta_minus, o.delta_minus) &&
           same_entries(delta_plus, o.delta_plus);
  }
};

struct SystemModel {
  std::string name;
  int n_z = 0;
  int n_theta = 0;
  std::vector<LinearConstraint> constraints;
  GaussianUncertainty uncertainty;
  std::optional<HyperboxSpec> hyperbox;

  [[nodiscard]] std::size_t size() const { return constraints.size(); }
  [[nodiscard]] const LinearConstraint &operator[](std::size_t j) const {
    return constraints[j];
  }

  bool operator==(const SystemModel &o) const = default;
};

enum class SetKind { Ellipsoid, Hyperbox, L1, L2, Linf };

inline const char *to_string(SetKind k) {
  switch (k) {
  case SetKind::Ellipsoid: return "ellipsoid";
  case SetKind::Hyperbox: return "box";
  case SetKind::L1: return "l1";
  case SetKind::L2: return "l2";
  case SetKind::Linf: return "linf";
  }
  return "?";
}

inline std::optional<SetKind> parse_set_kind(std::string_view s) {
  if (s == "ellipsoid") return SetKind::Ellipsoid;
  if (s == "box" || s == "hyperbox") return SetKind::Hyperbox;
  if (s == "l1") return SetKind::L1;
  if (s == "l2") return SetKind::L2;
  if (s == "linf") return SetKind::Linf;
  return std::nullopt;
}

/// Which scaled family T(delta) an analysis uses. Norm sets are centred at
/// the Gaussian mean; the hyperbox carries its own deviations.
struct UncertaintySet {
  SetKind kind = SetKind::Ellipsoid;
  std::optional<HyperboxSpec> box;

  static UncertaintySet ellipsoid() { return {SetKind::Ellipsoid, {}}; }
  static UncertaintySet l1() { return {SetKind::L1, {}}; }
  static UncertaintySet l2() { return {SetKind::L2, {}}; }
  static UncertaintySet linf() { return {SetKind::Linf, {}}; }
  static UncertaintySet hyperbox(HyperboxSpec spec) {
    return {SetKind::Hyperbox, std::move(spec)};
  }
  /// The hyperbox declared in the model file.
  static UncertaintySet model_box(const SystemModel &m) {
    if (!m.hyperbox)
      throw SchemaError("model '" + m.name + "' has no hyperbox block");
    return hyperbox(*m.hyperbox);
  }
  /// Resolves a kind against a model (hyperbox taken from the model).
  static UncertaintySet for_model(SetKind k, const SystemModel &m) {
    return k == SetKind::Hyperbox ? model_box(m) : UncertaintySet{k, {}};
  }
};

// ---------------------------------------------------------------------------
// Validation

inline void validate_hyperbox(const HyperboxSpec &h, int n_theta,
                              bool require_nonzero = true) {
  if (h.delta_minus.size() != n_theta || h.delta_plus.size() != n_theta)
    throw DimensionError("hyperbox deviations must have length n_theta");
  if (!h.delta_minus.allFinite() || !h.delta_plus.allFinite())
    throw SchemaError("hyperbox deviations must be finite");
  if ((h.delta_minus.array() < 0).any() || (h.delta_plus.array() < 0).any())
    throw SchemaError("hyperbox deviations must be nonnegative");
  if (require_nonzero && h.delta_minus.isZero(0) && h.delta_plus.isZero(0))
    throw SchemaError("hyperbox deviations are all zero");
}

/// Checks every model invariant. The covariance is symmetrized in place when
/// its asymmetry is within tolerance.
inline void validate_model(SystemModel &m) {
  if (m.n_z < 0)
    throw SchemaError("n_z must be nonnegative");
  if (m.n_theta < 1)
    throw SchemaError("n_theta must be positive");
  if (m.constraints.empty())
    throw SchemaError("model needs at least one constraint");

  std::set<std::string> names;
  for (const auto &con : m.constraints) {
    if (!names.insert(con.name).second)
      throw SchemaError("duplicate constraint name '" + con.name + "'");
    if (con.a_z.size() != m.n_z)
      throw DimensionError("constraint '" + con.name + "': a_z has length " +
                           std::to_string(con.a_z.size()) + ", expected " +
                           std::to_string(m.n_z));
    if (con.a_theta.size() != m.n_theta)
      throw DimensionError("constraint '" + con.name +
                           "': a_theta has length " +
                           std::to_string(con.a_theta.size()) + ", expected " +
                           std::to_string(m.n_theta));
    if (!con.a_z.allFinite() || !con.a_theta.allFinite() ||
        !std::isfinite(con.c))
      throw SchemaError("constraint '" + con.name + "' has non-finite data");
    if (con.a_z.isZero(0) && con.a_theta.isZero(0))
      throw SchemaError("constraint '" + con.name + "' is constant");
  }

  auto &u = m.uncertainty;
  if (u.mean.size() != m.n_theta)
    throw DimensionError("uncertainty mean must have length n_theta");
  if (u.covariance.rows() != m.n_theta || u.covariance.cols() != m.n_theta)
    throw DimensionError("covariance must be n_theta x n_theta");
  if (!u.mean.allFinite())
    throw SchemaError("uncertainty mean must be finite");
  if (!u.covariance.allFinite())
    throw NotSPDError("covariance has non-finite entries");
  if (asymmetry(u.covariance) > tol::symmetry)
    throw NotSPDError("covariance is not symmetric");
  u.covariance = 0.5 * (u.covariance + u.covariance.transpose()).eval();
  (void)cholesky(u.covariance);

  if (m.hyperbox)
    validate_hyperbox(*m.hyperbox, m.n_theta);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline void expect_keys(const json &j, std::string_view where,
                        std::initializer_list<std::string_view> required,
                        std::initializer_list<std::string_view> optional = {}) {
  if (!j.is_object())
    throw SchemaError(std::string(where) + ": expected an object");
  for (auto k : required)
    if (!j.contains(std::string(k)))
      throw SchemaError(std::string(where) + ": missing field '" +
                        std::string(k) + "'");
  for (const auto &item : j.items()) {
    bool known = false;
    for (auto k : required)
      known = known || item.key() == k;
    for (auto k : optional)
      known = known || item.key() == k;
    if (!known)
      throw SchemaError(std::string(where) + ": unknown field '" + item.key() +
                        "'");
  }
}

inline double read_number(const json &j, std::string_view where) {
  if (!j.is_number())
    throw SchemaError(std::string(where) + ": expected a number");
  return j.get<double>();
}

inline Vector read_vector(const json &j, std::string_view where) {
  if (!j.is_array())
    throw SchemaError(std::string(where) + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = read_number(j[i], where);
  return v;
}

inline Matrix read_matrix(const json &j, std::string_view where) {
  if (!j.is_array())
    throw SchemaError(std::string(where) + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix M;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = read_vector(j[i], where);
    if (cols < 0) {
      cols = row.size();
      M.resize(rows, cols);
    } else if (row.size() != cols) {
      throw DimensionError(std::string(where) + ": ragged matrix");
    }
    M.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  if (cols < 0)
    M.resize(0, 0);
  return M;
}

inline int read_count(const json &j, std::string_view where) {
  if (!j.is_number_integer())
    throw SchemaError(std::string(where) + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < 0 || v > 1000000)
    throw SchemaError(std::string(where) + ": out of range");
  return static_cast<int>(v);
}

inline json to_json(const Vector &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v(i));
  return a;
}

inline json to_json(const Matrix &M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    a.push_back(to_json(Vector(M.row(i).transpose())));
  return a;
}

} // namespace detail

/// Parses and validates a model document.
inline SystemModel parse_model(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw SchemaError(std::string("model is not valid JSON: ") + e.what());
  }

  detail::expect_keys(doc, "model",
                      {"name", "n_z", "n_theta", "constraints", "uncertainty"},
                      {"hyperbox"});
  SystemModel m;
  if (!doc["name"].is_string())
    throw SchemaError("model.name: expected a string");
  m.name = doc["name"].get<std::string>();
  m.n_z = detail::read_count(doc["n_z"], "model.n_z");
  m.n_theta = detail::read_count(doc["n_theta"], "model.n_theta");

  const json &cons = doc["constraints"];
  if (!cons.is_array())
    throw SchemaError("model.constraints: expected an array");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const std::string where = "constraints[" + std::to_string(i) + "]";
    detail::expect_keys(cons[i], where, {"name", "a_z", "a_theta", "c"});
    if (!cons[i]["name"].is_string())
      throw SchemaError(where + ".name: expected a string");
    LinearConstraint con;
    con.name = cons[i]["name"].get<std::string>();
    con.a_z = detail::read_vector(cons[i]["a_z"], where + ".a_z");
    con.a_theta = detail::read_vector(cons[i]["a_theta"], where + ".a_theta");
    con.c = detail::read_number(cons[i]["c"], where + ".c");
    m.constraints.push_back(std::move(con));
  }

  const json &unc = doc["uncertainty"];
  detail::expect_keys(unc, "uncertainty", {"mean", "covariance"});
  m.uncertainty.mean = detail::read_vector(unc["mean"], "uncertainty.mean");
  m.uncertainty.covariance =
      detail::read_matrix(unc["covariance"], "uncertainty.covariance");

  if (doc.contains("hyperbox")) {
    const json &hb = doc["hyperbox"];
    detail::expect_keys(hb, "hyperbox", {"delta_minus", "delta_plus"});
    m.hyperbox = HyperboxSpec{
        detail::read_vector(hb["delta_minus"], "hyperbox.delta_minus"),
        detail::read_vector(hb["delta_plus"], "hyperbox.delta_plus")};
  }

  validate_model(m);
  return m;
}

inline SystemModel load_model(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw SchemaError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

inline nlohmann::json model_to_json(const SystemModel &m) {
  using detail::json;
  using detail::to_json;
  json doc;
  doc["name"] = m.name;
  doc["n_z"] = m.n_z;
  doc["n_theta"] = m.n_theta;
  doc["constraints"] = json::array();
  for (const auto &con : m.constraints)
    doc["constraints"].push_back({{"name", con.name},
                                  {"a_z", to_json(con.a_z)},
                                  {"a_theta", to_json(con.a_theta)},
                                  {"c", con.c}});
  doc["uncertainty"] = {{"mean", to_json(m.uncertainty.mean)},
                        {"covariance", to_json(m.uncertainty.covariance)}};
  if (m.hyperbox)
    doc["hyperbox"] = {{"delta_minus", to_json(m.hyperbox->delta_minus)},
                       {"delta_plus", to_json(m.hyperbox->delta_plus)}};
  return doc;
}

inline std::string serialize_model(const SystemModel &m) {
  return model_to_json(m).dump(2);
}

// ---------------------------------------------------------------------------
// Evaluation helpers

/// f_j(z, theta) = a_z,j . z + a_theta,j . theta + c_j.
inline double evaluate_constraint(const SystemModel &m, std::size_t j,
                                  const Vector &z, const Vector &theta) {
  if (j >= m.constraints.size())
    throw IndexError("constraint index " + std::to_string(j) +
                     " out of range");
  if (z.size() != m.n_z || theta.size() != m.n_theta)
    throw DimensionError("evaluate_constraint: vector length mismatch");
  const auto &con = m.constraints[j];
  return con.a_z.dot(z) + con.a_theta.dot(theta) + con.c;
}

/// Value of every constraint at the mean with zero recourse: a_theta.mean + c.
inline Vector nominal_offsets(const SystemModel &m) {
  Vector g(static_cast<Eigen::Index>(m.size()));
  for (std::size_t j = 0; j < m.size(); ++j)
    g(static_cast<Eigen::Index>(j)) =
        m[j].a_theta.dot(m.uncertainty.mean) + m[j].c;
  return g;
}

inline Vector standard_deviations(const SystemModel &m) {
  return m.uncertainty.covariance.diagonal().cwiseSqrt();
}

/// Symmetric box of k standard deviations around the mean.
inline HyperboxSpec box_from_sigmas(const SystemModel &m, double k) {
  if (!(k >= 0.0) || !std::isfinite(k))
    throw DomainError("box_from_sigmas: k must be a finite nonnegative number");
  const Vector d = k * standard_deviations(m);
  return HyperboxSpec{d, d};
}

inline CholeskyFactor covariance_factor(const SystemModel &m) {
  return cholesky(m.uncertainty.covariance);
}

} // namespace flexidx

#endif // FLEXIDX_MODEL_HPP
