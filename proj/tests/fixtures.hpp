#ifndef FLEXIDX_TESTS_FIXTURES_HPP
#define FLEXIDX_TESTS_FIXTURES_HPP

#include <random>
#include <string>

#include "flexidx/lp.hpp"
#include "flexidx/model.hpp"
#include "flexidx/qp.hpp"
#include "oracles.hpp"

namespace fixtures {

using flexidx::Matrix;
using flexidx::SystemModel;
using flexidx::Vector;

inline std::string model_path(const std::string &stem) {
  return std::string(FLEXIDX_MODEL_DIR) + "/" + stem + ".json";
}

inline SystemModel bundled(const std::string &stem) {
  return flexidx::load_model(model_path(stem));
}

inline const char *const kBundled[] = {"simple_beta-1", "simple_beta0",
                                       "simple_beta1", "hx_beta0", "hx_beta5"};

inline oracle::System as_oracle(const SystemModel &m) {
  oracle::System s;
  const auto J = static_cast<Eigen::Index>(m.size());
  s.at.resize(J, m.n_theta);
  s.c.resize(J);
  if (m.n_z == 1)
    s.az.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto &con = m[static_cast<std::size_t>(j)];
    s.at.row(j) = con.a_theta.transpose();
    s.c(j) = con.c;
    if (m.n_z == 1)
      s.az(j) = con.a_z(0);
  }
  return s;
}

inline Vector random_vector(std::mt19937_64 &gen, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = nd(gen);
  return v;
}

inline Matrix random_spd(std::mt19937_64 &gen, Eigen::Index n) {
  Matrix M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    M.col(i) = random_vector(gen, n);
  return 0.5 * M * M.transpose() + 0.5 * Matrix::Identity(n, n);
}

/// Random affine model with psi(mean) < 0: every constraint is strictly
/// satisfied at (z = 0, theta = mean). With one recourse variable the first
/// two rows get opposite recourse signs so candidate sets exist.
inline SystemModel random_model(std::mt19937_64 &gen, int n_theta, int n_z,
                                int n_constraints) {
  std::uniform_real_distribution<double> margin(0.5, 3.0), mag(0.3, 1.5);
  SystemModel m;
  m.name = "random";
  m.n_theta = n_theta;
  m.n_z = n_z;
  m.uncertainty.mean = random_vector(gen, n_theta, 3.0);
  m.uncertainty.covariance = random_spd(gen, n_theta);
  for (int j = 0; j < n_constraints; ++j) {
    flexidx::LinearConstraint con;
    con.name = "g" + std::to_string(j);
    con.a_theta = random_vector(gen, n_theta);
    con.a_z = random_vector(gen, n_z);
    if (n_z == 1 && j < 2)
      con.a_z(0) = (j == 0 ? 1.0 : -1.0) * mag(gen);
    con.c = -con.a_theta.dot(m.uncertainty.mean) - margin(gen);
    m.constraints.push_back(std::move(con));
  }
  flexidx::validate_model(m);
  return m;
}

inline Vector unit_vector(Eigen::Index n, Eigen::Index i) {
  Vector e = Vector::Zero(n);
  e(i) = 1.0;
  return e;
}

struct RandomLp {
  flexidx::LpProblem problem;
  oracle::Matrix all_rows;
  oracle::Vector all_rhs;
};

// Five free-in-sign variables inside [-10, 10]^5 plus five random rows that
// keep a random interior point feasible.
RandomLp random_lp(std::mt19937_64 &gen, bool as_bounds) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-8.0, 8.0), slack(0.5, 3.0);
  const int n = 5, m = 5;
  RandomLp r{flexidx::LpProblem(n), oracle::Matrix(m + 2 * n, n), oracle::Vector(m + 2 * n)};
  Vector x0(n);
  for (int j = 0; j < n; ++j) {
    x0(j) = ud(gen);
    r.problem.objective(j) = nd(gen);
  }
  for (int i = 0; i < m; ++i) {
    Vector a(n);
    for (int j = 0; j < n; ++j)
      a(j) = nd(gen);
    const double b = a.dot(x0) + slack(gen);
    r.problem.add_inequality(a, b);
    r.all_rows.row(i) = a.transpose();
    r.all_rhs(i) = b;
  }
  for (int j = 0; j < n; ++j) {
    r.all_rows.row(m + 2 * j) = unit_vector(n, j).transpose();
    r.all_rhs(m + 2 * j) = 10.0;
    r.all_rows.row(m + 2 * j + 1) = -unit_vector(n, j).transpose();
    r.all_rhs(m + 2 * j + 1) = 10.0;
    if (as_bounds) {
      r.problem.lower(j) = -10.0;
      r.problem.upper(j) = 10.0;
    } else {
      r.problem.add_inequality(unit_vector(n, j), 10.0);
      r.problem.add_inequality(-unit_vector(n, j), 10.0);
    }
  }
  return r;
}

struct RandomQp {
  flexidx::QpProblem problem;
};

RandomQp random_pd_qp(std::mt19937_64 &gen) {
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> nvars(3, 6), nrows(1, 6);
  std::uniform_real_distribution<double> slack(-0.5, 2.0);
  const int n = nvars(gen), m = nrows(gen);
  RandomQp r{flexidx::QpProblem(n)};
  Matrix M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M(i, j) = nd(gen);
  r.problem.quadratic = 0.5 * (M * M.transpose()) + 0.5 * Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i)
    r.problem.linear(i) = 3.0 * nd(gen);
  Vector x0(n);
  for (int i = 0; i < n; ++i)
    x0(i) = nd(gen);
  for (int k = 0; k < m; ++k) {
    Vector a(n);
    for (int i = 0; i < n; ++i)
      a(i) = nd(gen);
    // Some rows pass through x0 exactly (weakly active at the reference).
    const double s = std::max(0.0, slack(gen));
    r.problem.add_inequality(a, a.dot(x0) + s);
  }
  return r;
}

} // namespace fixtures

#endif // FLEXIDX_TESTS_FIXTURES_HPP
