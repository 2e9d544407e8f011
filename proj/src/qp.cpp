#include "chargeprice/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "chargeprice/error.hpp"

namespace chargeprice {

DirectionResult feasible_direction(const Eigen::VectorXd& price, const Eigen::VectorXd& grad,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   double gamma, const Eigen::MatrixXd& metric, int max_iter) {
  const Eigen::Index n = price.size();
  if (grad.size() != n || lower.size() != n || upper.size() != n || metric.rows() != n ||
      metric.cols() != n)
    throw ValidationError("feasible direction: dimension mismatch");
  if (!(gamma > 0.0)) throw ValidationError("feasible direction: gamma must be positive");
  if (!grad.allFinite()) throw ValidationError("feasible direction: gradient is not finite");
  if (!metric.isApprox(metric.transpose()) || metric.llt().info() != Eigen::Success)
    throw ValidationError("feasible direction: metric must be symmetric positive definite");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(lower[i] - 1e-12 <= price[i] && price[i] <= upper[i] + 1e-12))
      throw ValidationError("feasible direction: price outside its bounds");

  // min 1/2 v^T H v + c^T v  s.t.  A v <= b,  v = (h, z).
  const Eigen::Index nv = n + 1, m = 2 * n + 1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv, nv);
  H.topLeftCorner(n, n) = gamma * metric;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  c[n] = -1.0;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, nv);
  Eigen::VectorXd b(m);
  A.row(0).head(n) = -grad.transpose();
  A(0, n) = 1.0;
  b[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    A(1 + i, i) = 1.0;
    A(1 + i, n) = 1.0;
    b[1 + i] = std::max(upper[i] - price[i], 0.0);
    A(1 + n + i, i) = -1.0;
    A(1 + n + i, n) = 1.0;
    b[1 + n + i] = std::max(price[i] - lower[i], 0.0);
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(nv);
  Eigen::Index first = 0;
  v[n] = b.minCoeff(&first);
  std::vector<Eigen::Index> work{first};
  const double scale = 1.0 + grad.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();

  DirectionResult out;
  Eigen::VectorXd y_work;
  for (int it = 0;; ++it) {
    if (it >= max_iter) throw NumericalError("feasible direction: max QP iterations reached");
    out.iterations = it + 1;
    const Eigen::Index k = static_cast<Eigen::Index>(work.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + k, nv + k);
    kkt.topLeftCorner(nv, nv) = H;
    for (Eigen::Index j = 0; j < k; ++j) {
      kkt.block(0, nv + j, nv, 1) = A.row(work[j]).transpose();
      kkt.block(nv + j, 0, 1, nv) = A.row(work[j]);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + k);
    rhs.head(nv) = -(H * v + c);
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Eigen::VectorXd p = sol.head(nv);

    if (p.lpNorm<Eigen::Infinity>() <= 1e-13 * scale) {
      y_work = sol.tail(k);
      Eigen::Index drop = -1;
      double most_negative = -1e-12;
      for (Eigen::Index j = 0; j < k; ++j)
        if (y_work[j] < most_negative) {
          most_negative = y_work[j];
          drop = j;
        }
      if (drop < 0) break;
      work.erase(work.begin() + drop);
      continue;
    }

    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::find(work.begin(), work.end(), j) != work.end()) continue;
      const double ap = A.row(j).dot(p);
      if (ap <= 1e-14 * scale) continue;
      const double room = std::max(b[j] - A.row(j).dot(v), 0.0);
      if (room / ap < step) {
        step = room / ap;
        blocking = j;
      }
    }
    v += step * p;
    if (blocking >= 0) work.push_back(blocking);
  }

  out.multipliers = Eigen::VectorXd::Zero(m);
  for (std::size_t j = 0; j < work.size(); ++j) out.multipliers[work[j]] = y_work[j];
  out.h = v.head(n);
  out.z = v[n];
  out.objective = out.z - 0.5 * gamma * out.h.dot(metric * out.h);

  const Eigen::VectorXd slack = b - A * v;
  double res = (H * v + c + A.transpose() * out.multipliers).lpNorm<Eigen::Infinity>();
  for (Eigen::Index j = 0; j < m; ++j) {
    res = std::max(res, -slack[j]);
    res = std::max(res, -out.multipliers[j]);
    res = std::max(res, std::abs(out.multipliers[j] * slack[j]));
  }
  out.kkt_residual = res;
  return out;
}

}  // namespace chargeprice
