#include "tsr/match/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tsr/common.hpp"

namespace tsr {

void MatchConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("match config: lambda must be >= 0");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("match config: alpha must be in [0, 1]");
  if (!(epsilon > 0.0)) throw ConfigError("match config: epsilon must be positive");
  if (max_iters < 1) throw ConfigError("match config: max_iters must be >= 1");
  if (tolerance < 0.0) throw ConfigError("match config: tolerance must be >= 0");
}

void CostMatrix::validate() const {
  if (rule == Rule::kOneMinusCosine)
    for (size_t i = 0; i < values.size(); ++i)
      if (values[i] < 0.0 || values[i] > 2.0)
        throw NumericError("cost matrix: one-minus-cosine entry outside [0, 2]");
}

Tensor cosine_matrix(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw ShapeError("cosine_matrix: embedding widths differ (" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.cols()) + ")");
  int n = a.rows(), m = b.rows(), d = a.cols();
  auto norms = [&](const Tensor& t) {
    std::vector<double> out(t.rows());
    for (int i = 0; i < t.rows(); ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += t.at(i, j) * t.at(i, j);
      out[i] = std::max(std::sqrt(s), 1e-12);
    }
    return out;
  };
  std::vector<double> na = norms(a), nb = norms(b);
  Tensor sim(n, m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += a.at(i, k) * b.at(j, k);
      sim.at(i, j) = std::clamp(dot / (na[i] * nb[j]), -1.0, 1.0);
    }
  return sim;
}

CostMatrix one_minus_cosine_cost(const Tensor& a, const Tensor& b) {
  Tensor sim = cosine_matrix(a, b);
  Tensor cost(sim.rows(), sim.cols(), 0.0);
  for (size_t i = 0; i < sim.size(); ++i) cost[i] = 1.0 - sim[i];
  CostMatrix out{std::move(cost), CostMatrix::Rule::kOneMinusCosine};
  out.validate();
  return out;
}

namespace detail {

void sinkhorn_sweep(const Tensor& K, const std::vector<double>& log_r,
                    const std::vector<double>& log_c, std::vector<double>& u,
                    std::vector<double>& v) {
  int n = K.rows(), m = K.cols();
  // u_i = log_r_i - lse_j(K_ij + v_j)
  for (int i = 0; i < n; ++i) {
    double mx = K.at(i, 0) + v[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, K.at(i, j) + v[j]);
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += std::exp((K.at(i, j) + v[j]) - mx);
    u[i] = log_r[i] - (std::log(s) + mx);
  }
  // v_j = log_c_j - lse_i(K_ij + u_i)
  std::vector<double> mx(m), s(m, 0.0);
  for (int j = 0; j < m; ++j) mx[j] = K.at(0, j) + u[0];
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < m; ++j) mx[j] = std::max(mx[j], K.at(i, j) + u[i]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) s[j] += std::exp((K.at(i, j) + u[i]) - mx[j]);
  for (int j = 0; j < m; ++j) v[j] = log_c[j] - (std::log(s[j]) + mx[j]);
}

double plan_violation(const Tensor& K, const std::vector<double>& u,
                      const std::vector<double>& v, const std::vector<double>& r,
                      const std::vector<double>& c, Tensor* plan_out) {
  int n = K.rows(), m = K.cols();
  Tensor plan(n, m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) plan.at(i, j) = std::exp((K.at(i, j) + u[i]) + v[j]);
  double viol = 0.0;
  std::vector<double> col(m, 0.0);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) {
      row += plan.at(i, j);
      col[j] += plan.at(i, j);
    }
    viol = std::max(viol, std::abs(row - r[i]));
  }
  for (int j = 0; j < m; ++j) viol = std::max(viol, std::abs(col[j] - c[j]));
  if (plan_out) *plan_out = std::move(plan);
  return viol;
}

namespace {

// Ridge-regularized least squares via normal equations. The system is tiny
// (at most memory-1 unknowns) and the histories can be nearly collinear, so a
// small Tikhonov term keeps the extrapolation coefficients tame; the
// safeguard upstream catches anything this lets through.
std::vector<double> solve_least_squares(const std::vector<std::vector<double>>& A,
                                        const std::vector<double>& b) {
  size_t rows = b.size(), cols = A.size();
  std::vector<std::vector<double>> G(cols, std::vector<double>(cols, 0.0));
  std::vector<double> rhs(cols, 0.0);
  for (size_t i = 0; i < cols; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (size_t r = 0; r < rows; ++r) s += A[i][r] * A[j][r];
      G[i][j] = G[j][i] = s;
    }
    double s = 0.0;
    for (size_t r = 0; r < rows; ++r) s += A[i][r] * b[r];
    rhs[i] = s;
  }
  double trace = 0.0;
  for (size_t i = 0; i < cols; ++i) trace += G[i][i];
  double lam = 1e-8 * (trace / std::max<size_t>(cols, 1) + 1e-300);
  for (size_t i = 0; i < cols; ++i) G[i][i] += lam;
  // Gaussian elimination with partial pivoting
  std::vector<double> x(cols, 0.0);
  for (size_t p = 0; p < cols; ++p) {
    size_t piv = p;
    for (size_t i = p + 1; i < cols; ++i)
      if (std::abs(G[i][p]) > std::abs(G[piv][p])) piv = i;
    std::swap(G[p], G[piv]);
    std::swap(rhs[p], rhs[piv]);
    if (std::abs(G[p][p]) < 1e-300) continue;
    for (size_t i = p + 1; i < cols; ++i) {
      double f = G[i][p] / G[p][p];
      for (size_t j = p; j < cols; ++j) G[i][j] -= f * G[p][j];
      rhs[i] -= f * rhs[p];
    }
  }
  for (size_t p = cols; p-- > 0;) {
    if (std::abs(G[p][p]) < 1e-300) {
      x[p] = 0.0;
      continue;
    }
    double acc = rhs[p];
    for (size_t j = p + 1; j < cols; ++j) acc -= G[p][j] * x[j];
    x[p] = acc / G[p][p];
  }
  return x;
}

}  // namespace
}  // namespace detail

TransportPlan sinkhorn_plan(const CostMatrix& cost, const std::vector<double>& r,
                            const std::vector<double>& c, const MatchConfig& cfg) {
  cfg.validate();
  cost.validate();
  const Tensor& C = cost.values;
  int n = C.rows(), m = C.cols();
  if (static_cast<int>(r.size()) != n || static_cast<int>(c.size()) != m)
    throw ShapeError("sinkhorn_plan: marginal lengths do not match the cost matrix");
  auto check_marginal = [](const std::vector<double>& w, const char* which) {
    double total = 0.0;
    for (double x : w) {
      if (!(x > 0.0)) throw DataError(std::string("sinkhorn_plan: ") + which +
                                      " marginals must be strictly positive");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw DataError(std::string("sinkhorn_plan: ") + which + " marginals must sum to 1");
  };
  check_marginal(r, "row");
  check_marginal(c, "column");

  // Scale exactly as the unrolled graph's affine op does, so the two paths
  // stay bitwise identical.
  const double kscale = -1.0 / cfg.epsilon;
  Tensor K(n, m, 0.0);
  for (size_t i = 0; i < K.size(); ++i) K[i] = kscale * C[i] + 0.0;
  std::vector<double> log_r(n), log_c(m);
  for (int i = 0; i < n; ++i) log_r[i] = std::log(r[i]);
  for (int j = 0; j < m; ++j) log_c[j] = std::log(c[j]);

  constexpr int kAndersonMemory = 5;
  std::vector<double> u(n, 0.0), v(m, 0.0);       // current iterate x
  std::deque<std::vector<double>> hist_g, hist_res;  // g(x) and g(x) - x

  TransportPlan out;
  out.row_marginals = r;
  out.col_marginals = c;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    std::vector<double> su = u, sv = v;
    detail::sinkhorn_sweep(K, log_r, log_c, su, sv);
    double viol = detail::plan_violation(K, su, sv, r, c, &out.plan);
    out.iterations = it;
    out.violation = viol;
    if (viol < cfg.tolerance) {
      out.converged = true;
      return out;
    }
    if (cfg.accelerated) {
      std::vector<double> gx(n + m), res(n + m);
      for (int i = 0; i < n; ++i) {
        gx[i] = su[i];
        res[i] = su[i] - u[i];
      }
      for (int j = 0; j < m; ++j) {
        gx[n + j] = sv[j];
        res[n + j] = sv[j] - v[j];
      }
      hist_g.push_back(std::move(gx));
      hist_res.push_back(std::move(res));
      if (static_cast<int>(hist_g.size()) > kAndersonMemory) {
        hist_g.pop_front();
        hist_res.pop_front();
      }
      size_t k = hist_g.size();
      if (k >= 2) {
        // minimize |res_last + dR theta| over the residual differences
        std::vector<std::vector<double>> dR(k - 1, std::vector<double>(n + m));
        std::vector<double> rhs(n + m);
        for (size_t col = 0; col + 1 < k; ++col)
          for (int i = 0; i < n + m; ++i)
            dR[col][i] = hist_res[col + 1][i] - hist_res[col][i];
        for (int i = 0; i < n + m; ++i) rhs[i] = -hist_res[k - 1][i];
        std::vector<double> theta = detail::solve_least_squares(dR, rhs);
        std::vector<double> gamma(k, 0.0);
        gamma[k - 1] = 1.0;
        for (size_t i = 0; i + 1 < k; ++i) {
          gamma[i + 1] += theta[i];
          gamma[i] -= theta[i];
        }
        std::vector<double> au(n, 0.0), av(m, 0.0);
        for (size_t h = 0; h < k; ++h) {
          for (int i = 0; i < n; ++i) au[i] += gamma[h] * hist_g[h][i];
          for (int j = 0; j < m; ++j) av[j] += gamma[h] * hist_g[h][n + j];
        }
        bool finite = true;
        for (double x : au) finite &= std::isfinite(x);
        for (double x : av) finite &= std::isfinite(x);
        if (finite) {
          detail::sinkhorn_sweep(K, log_r, log_c, au, av);  // stabilizing sweep
          Tensor aplan;
          double aviol = detail::plan_violation(K, au, av, r, c, &aplan);
          if (std::isfinite(aviol) && aviol < viol) {  // safeguarded acceptance
            u = std::move(au);
            v = std::move(av);
            out.plan = std::move(aplan);
            out.violation = aviol;
            if (aviol < cfg.tolerance) {
              out.converged = true;
              return out;
            }
            continue;
          }
        }
      }
    }
    u = std::move(su);
    v = std::move(sv);
  }
  return out;  // converged stays false; plan and violation are still valid
}

}  // namespace tsr
