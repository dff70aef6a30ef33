#include "posgrowth/ergodic_set.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace posgrowth {

namespace {

constexpr double kStallAdvance = 1e-9;
constexpr double kDecimation = 2e-4;

Eigen::VectorXd perron_point(const ControlSet& cs, double alpha) {
  const Eigen::VectorXd e = perron(cs.at(alpha)).right;
  return e / e.sum();
}

// Drops the tail once successive points advance less than kStallAdvance, and
// thins the rest to roughly kDecimation spacing.
std::vector<Eigen::VectorXd> thin(const Trajectory& t) {
  std::vector<Eigen::VectorXd> out{t.states.front()};
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (l1_distance(t.states[k], t.states[k - 1]) < kStallAdvance) {
      if (l1_distance(t.states[k - 1], out.back()) > 0.0) out.push_back(t.states[k - 1]);
      break;
    }
    if (l1_distance(t.states[k], out.back()) >= kDecimation || k + 1 == t.size()) {
      out.push_back(t.states[k]);
    }
  }
  return out;
}

using P2 = Eigen::Vector2d;

P2 planar(const Eigen::VectorXd& y) { return {y(0), y(1)}; }

double cross(const P2& o, const P2& a, const P2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool segments_cross(const P2& p1, const P2& p2, const P2& q1, const P2& q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

bool is_simple(const std::vector<Eigen::VectorXd>& poly) {
  const std::size_t m = poly.size();
  if (m < 4) return true;
  for (std::size_t i = 0; i < m; ++i) {
    const P2 a = planar(poly[i]);
    const P2 b = planar(poly[(i + 1) % m]);
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (segments_cross(a, b, planar(poly[j]), planar(poly[(j + 1) % m]))) return false;
    }
  }
  return true;
}

// Andrew's monotone chain on the planar projection.
std::vector<Eigen::VectorXd> outer_hull(std::vector<Eigen::VectorXd> pts) {
  std::sort(pts.begin(), pts.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  std::vector<Eigen::VectorXd> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(planar(hull[k - 2]), planar(hull[k - 1]), planar(p)) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(planar(hull[k - 2]), planar(hull[k - 1]), planar(pts[i])) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

// min_t ||y - (p + t (q - p))||_1 over t in [0, 1]; the objective is convex
// piecewise linear, so the minimum sits at an endpoint or a kink.
double l1_to_segment(const Eigen::VectorXd& y, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  const Eigen::VectorXd d = q - p;
  double best = std::min(l1_distance(y, p), l1_distance(y, q));
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) == 0.0) continue;
    const double t = (y(i) - p(i)) / d(i);
    if (t > 0.0 && t < 1.0) best = std::min(best, l1_distance(y, p + t * d));
  }
  return best;
}

double l1_to_polyline(const ErgodicBoundary& b, const Eigen::VectorXd& y) {
  const auto& poly = b.polyline;
  if (poly.size() == 1) return l1_distance(y, poly.front());
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    best = std::min(best, l1_to_segment(y, poly[i], poly[(i + 1) % m]));
  }
  return best;
}

bool ray_parity(const std::vector<Eigen::VectorXd>& poly, const Eigen::VectorXd& y) {
  bool inside = false;
  const std::size_t m = poly.size();
  const double px = y(0);
  const double py = y(1);
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const double xi = poly[i](0), yi = poly[i](1);
    const double xj = poly[j](0), yj = poly[j](1);
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

Eigen::VectorXd sample_where(Rng& rng, const ErgodicBoundary& b, bool want_inside) {
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const Eigen::VectorXd y = random_simplex_point(rng, b.n);
    if (contains(b, SimplexPoint(y)) == want_inside) return y;
  }
  // Degenerate sets have no interior to sample.
  return b.polyline.front();
}

}  // namespace

ErgodicBoundary trace_boundary(const ControlSet& cs, double horizon, double dt) {
  const Segment& s = cs.as_segment();
  const Eigen::VectorXd za = perron_point(cs, s.a);
  const Eigen::VectorXd zA = perron_point(cs, s.A);

  ErgodicBoundary b;
  b.n = static_cast<int>(cs.dim());
  b.curve_from_low = integrate_projected(SimplexPoint(za), cs, ControlSignal::constant(s.A, horizon), dt);
  b.curve_from_high = integrate_projected(SimplexPoint(zA), cs, ControlSignal::constant(s.a, horizon), dt);

  const double miss_low = l1_distance(b.curve_from_low.states.back(), zA);
  const double miss_high = l1_distance(b.curve_from_high.states.back(), za);
  if (miss_low > 1e-6 || miss_high > 1e-6) {
    std::ostringstream os;
    os << "horizon " << horizon << " too short: curves end " << miss_low << " and " << miss_high
       << " from their limit points";
    throw Error(ErrorCode::HorizonTooShort, os.str());
  }

  b.delta = std::numeric_limits<double>::infinity();
  for (const Trajectory* t : {&b.curve_from_low, &b.curve_from_high}) {
    for (const auto& y : t->states) b.delta = std::min(b.delta, y.minCoeff());
  }

  if (b.n == 2 || l1_distance(za, zA) <= kBoundaryTol) {
    b.polyline = {za, zA};
    if (l1_distance(za, zA) <= kBoundaryTol) b.polyline = {za};
    return b;
  }
  if (b.n != 3) {
    throw Error(ErrorCode::DimensionMismatch, "ergodic set boundaries are traced for n = 2, 3");
  }
  std::vector<Eigen::VectorXd> low = thin(b.curve_from_low);
  std::vector<Eigen::VectorXd> high = thin(b.curve_from_high);
  b.polyline = low;
  b.polyline.insert(b.polyline.end(), high.begin(), high.end());
  if (!is_simple(b.polyline)) {
    b.polyline = outer_hull(b.polyline);
    b.pruned = true;
  }
  return b;
}

bool contains(const ErgodicBoundary& b, const SimplexPoint& y) {
  const Eigen::VectorXd& v = y.coords();
  if (b.polyline.size() == 1) return l1_distance(v, b.polyline.front()) <= kBoundaryTol;
  if (b.n == 2) {
    const double lo = std::min(b.polyline[0](1), b.polyline[1](1));
    const double hi = std::max(b.polyline[0](1), b.polyline[1](1));
    // l1 distance on S is twice the coordinate gap.
    return v(1) >= lo - kBoundaryTol / 2 && v(1) <= hi + kBoundaryTol / 2;
  }
  return ray_parity(b.polyline, v) || l1_to_polyline(b, v) <= kBoundaryTol;
}

double distance_to_set(const ErgodicBoundary& b, const Eigen::VectorXd& y) {
  if (contains(b, SimplexPoint(y))) return 0.0;
  if (b.n == 2 && b.polyline.size() == 2) {
    return l1_to_segment(y, b.polyline[0], b.polyline[1]);
  }
  return l1_to_polyline(b, y);
}

std::string InvarianceReport::to_json() const {
  nlohmann::json j{{"trials", trials},
                   {"inside_pass", inside_pass},
                   {"attract_pass", attract_pass},
                   {"delta_boundary", delta_boundary},
                   {"pruned", pruned}};
  return j.dump();
}

InvarianceReport invariance_check(const ErgodicBoundary& b, const ControlSet& cs, int trials,
                                  double horizon, std::uint64_t seed, double dt) {
  InvarianceReport r;
  r.trials = trials;
  r.delta_boundary = b.delta;
  r.pruned = b.pruned;
  for (int k = 0; k < trials; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    const Eigen::VectorXd y0 = sample_where(rng, b, true);
    const ControlSignal sig = random_bang_bang(rng, cs, horizon, 1.0, dt);
    const Trajectory t = integrate_projected(SimplexPoint(y0), cs, sig, dt);
    bool ok = true;
    for (const auto& y : t.states) {
      if (distance_to_set(b, y) > 1e-3) {
        ok = false;
        break;
      }
    }
    if (ok) ++r.inside_pass;
  }
  for (int k = 0; k < trials; ++k) {
    Rng rng(mix_seed(seed ^ 0xa77ac7ULL, static_cast<std::uint64_t>(k)));
    const Eigen::VectorXd y0 = sample_where(rng, b, false);
    const ControlSignal sig = random_bang_bang(rng, cs, horizon, 1.0, dt);
    const Trajectory t = integrate_projected(SimplexPoint(y0), cs, sig, dt);
    if (distance_to_set(b, t.states.back()) < 1e-2) ++r.attract_pass;
  }
  return r;
}

void write_boundary_csv(std::ostream& os, const ErgodicBoundary& b) {
  for (int i = 0; i < b.n; ++i) os << (i ? "," : "") << 'y' << i + 1;
  os << '\n' << std::setprecision(17);
  for (const auto& y : b.polyline) {
    for (Eigen::Index i = 0; i < y.size(); ++i) os << (i ? "," : "") << y(i);
    os << '\n';
  }
}

}  // namespace posgrowth
