#include "mergesim/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mergesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Factor {
  Eigen::MatrixXd J;  // J J' = G^{-1}, rotated as constraints enter
  Eigen::MatrixXd R;  // upper triangular, first q columns used
  int q = 0;
  double r_norm = 1.0;
};

// Appends the constraint whose transformed normal is d = J' n.
bool add_constraint(Factor& f, Eigen::VectorXd& d) {
  const int n = static_cast<int>(d.size());
  for (int j = n - 1; j >= f.q + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = f.J(k, j - 1);
      const double t2 = f.J(k, j);
      f.J(k, j - 1) = t1 * cc + t2 * ss;
      f.J(k, j) = xny * (t1 + f.J(k, j - 1)) - t2;
    }
  }
  ++f.q;
  for (int i = 0; i < f.q; ++i) f.R(i, f.q - 1) = d(i);
  const double diag = std::abs(d(f.q - 1));
  if (diag <= std::numeric_limits<double>::epsilon() * f.r_norm) {
    --f.q;
    return false;
  }
  f.r_norm = std::max(f.r_norm, diag);
  return true;
}

// Removes active slot `slot` and restores the triangular form of R.
void drop_constraint(Factor& f, std::vector<int>& active, std::vector<double>& lambda, int slot) {
  const int n = static_cast<int>(f.J.rows());
  for (int i = slot; i < f.q - 1; ++i) {
    active[i] = active[i + 1];
    lambda[i] = lambda[i + 1];
    f.R.col(i) = f.R.col(i + 1);
  }
  active.pop_back();
  lambda.pop_back();
  f.R.col(f.q - 1).setZero();
  --f.q;
  for (int j = slot; j < f.q; ++j) {
    double cc = f.R(j, j);
    double ss = f.R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    f.R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      f.R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      f.R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < f.q; ++k) {
      const double t1 = f.R(j, k);
      const double t2 = f.R(j + 1, k);
      f.R(j, k) = t1 * cc + t2 * ss;
      f.R(j + 1, k) = xny * (t1 + f.R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = f.J(k, j);
      const double t2 = f.J(k, j + 1);
      f.J(k, j) = t1 * cc + t2 * ss;
      f.J(k, j + 1) = xny * (f.J(k, j) + t1) - t2;
    }
  }
}

}  // namespace

QpSolution solve_dense_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                          const Eigen::MatrixXd& C, const Eigen::VectorXd& c, double feas_tol) {
  const int n = static_cast<int>(G.rows());
  const int m = static_cast<int>(C.rows());
  QpSolution sol;

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) return sol;

  Factor f;
  f.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  f.R = Eigen::MatrixXd::Zero(n, n);

  Eigen::VectorXd x = -llt.solve(g);
  std::vector<int> active;
  std::vector<double> lambda;
  std::vector<char> excluded(m, 0);
  const int max_iter = 50 * (n + m) + 100;

  while (sol.iterations < max_iter) {
    ++sol.iterations;
    std::vector<char> is_active(m, 0);
    for (int a : active) is_active[a] = 1;

    int p = -1;
    double worst = -feas_tol;
    for (int i = 0; i < m; ++i) {
      if (is_active[i] || excluded[i]) continue;
      const double s = C.row(i).dot(x) + c(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) break;

    const Eigen::VectorXd np = C.row(p).transpose();
    double lambda_p = 0.0;
    double s_p = worst;
    bool added = false;
    while (!added) {
      Eigen::VectorXd d = f.J.transpose() * np;
      Eigen::VectorXd z = f.J.rightCols(n - f.q) * d.tail(n - f.q);
      Eigen::VectorXd r(f.q);
      if (f.q > 0)
        r = f.R.topLeftCorner(f.q, f.q).triangularView<Eigen::Upper>().solve(d.head(f.q));

      double t1 = kInf;
      int drop = -1;
      for (int k = 0; k < f.q; ++k) {
        if (r(k) > 0.0 && lambda[k] / r(k) < t1) {
          t1 = lambda[k] / r(k);
          drop = k;
        }
      }
      const double zn = z.dot(np);
      const double t2 = std::abs(zn) > std::numeric_limits<double>::epsilon() ? -s_p / zn : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return sol;  // primal infeasible

      if (std::isfinite(t2)) x += t * z;
      for (int k = 0; k < f.q; ++k) lambda[k] -= t * r(k);
      lambda_p += t;

      if (t == t2) {
        if (add_constraint(f, d)) {
          active.push_back(p);
          lambda.push_back(lambda_p);
        } else {
          excluded[p] = 1;
        }
        added = true;
      } else {
        drop_constraint(f, active, lambda, drop);
        s_p = np.dot(x) + c(p);
      }
    }
  }

  for (int i = 0; i < m; ++i)
    if (C.row(i).dot(x) + c(i) < -std::max(feas_tol, 1e-7)) return sol;
  sol.x = x;
  sol.objective = 0.5 * x.dot(G * x) + g.dot(x);
  sol.status = QpStatus::Optimal;
  return sol;
}

}  // namespace mergesim
