#include "posgrowth/hilbert.hpp"

#include "json.hpp"
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "posgrowth/dynamics.hpp"

namespace posgrowth {

ConeVector::ConeVector(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  detail::require_interior(coords_);
}

double payoff_lipschitz_local(const Eigen::VectorXd& q, const Eigen::MatrixXd& m,
                              const Eigen::VectorXd& x) {
  const Eigen::Index n = m.rows();
  detail::require_same_size(q, x);
  if (m.cols() != n || q.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "q, m and x must share the dimension");
  }
  const double qx = q.dot(x);
  if (!(qx > 0.0)) throw Error(ErrorCode::Domain, "<q, x> must be positive");

  // Off-diagonal part does not depend on a.
  double off = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) off += q(i) * std::abs(m(i, j)) * x(j);
    }
  }
  // Weighted median of the diagonal with weights q_j x_j.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return m(a, a) < m(b, b); });
  double half = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) half += q(j) * x(j);
  half *= 0.5;
  double acc = 0.0;
  double median = m(order.back(), order.back());
  for (Eigen::Index k : order) {
    acc += q(k) * x(k);
    if (acc >= half) {
      median = m(k, k);
      break;
    }
  }
  double diag = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) diag += q(j) * x(j) * std::abs(m(j, j) - median);
  return (off + diag) / qx;
}

double payoff_lipschitz_bound(const ConeVector& q, const MetzlerMatrix& m, int samples,
                              std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::OutOfRange, "samples must be >= 1");
  const Eigen::Index n = m.dim();
  if (q.size() != n) throw Error(ErrorCode::DimensionMismatch, "q and m differ in dimension");
  double best = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    best = std::max(best, payoff_lipschitz_local(q.coords(), m.entries(),
                                                 Eigen::VectorXd::Unit(n, k)));
  }
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    best = std::max(best, payoff_lipschitz_local(q.coords(), m.entries(),
                                                 random_simplex_point(rng, n)));
  }
  return best;
}

std::optional<double> contraction_rate_bound(const ControlSet& cs) {
  double mu = std::numeric_limits<double>::infinity();
  for (const auto& v : cs.vertex_matrices()) {
    const Eigen::MatrixXd& m = v.entries();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (i == j) continue;
        if (!(m(i, j) > 0.0)) return std::nullopt;
        mu = std::min(mu, 2.0 * std::sqrt(m(i, j) * m(j, i)));
      }
    }
  }
  return mu;
}

std::string ContractionReport::to_json() const {
  nlohmann::json j{{"mu", mu},         {"t", t},
                   {"trials", trials}, {"passes", passes},
                   {"worst_ratio", worst_ratio}};
  return j.dump();
}

ContractionReport verify_contraction(const ControlSet& cs, double t, int trials,
                                     std::uint64_t seed) {
  const auto mu = contraction_rate_bound(cs);
  if (!mu) {
    throw Error(ErrorCode::MissingRate,
                "contraction rate unavailable: a vertex has a zero off-diagonal entry");
  }
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfRange, "t must be nonnegative");
  ContractionReport rep;
  rep.mu = *mu;
  rep.t = t;
  rep.trials = trials;
  const double factor = std::exp(-rep.mu * t);
  const Eigen::Index n = cs.dim();

  for (int k = 0; k < trials; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd x = random_cone_point(rng, n);
    Eigen::VectorXd y = random_cone_point(rng, n);
    if (k % 10 == 9) y = uniform(rng, 0.1, 10.0) * x;  // proportional pairs
    const double d0 = hilbert_distance(x, y);
    if (t > 0.0) {
      const ControlSignal sig = random_bang_bang(rng, cs, t, std::max(t / 4.0, 1e-3));
      for (const auto& p : sig.pieces) {
        const Eigen::MatrixXd prop = (p.duration * cs.matrix(p.control)).exp();
        x = prop * x;
        y = prop * y;
        x /= x.sum();
        y /= y.sum();
      }
    }
    const double d1 = hilbert_distance(x, y);
    if (d1 <= factor * d0 + 1e-8) ++rep.passes;
    if (d0 > 1e-12) rep.worst_ratio = std::max(rep.worst_ratio, d1 / (factor * d0));
  }
  return rep;
}

}  // namespace posgrowth
