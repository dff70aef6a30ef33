#include "posgrowth/matrices.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace posgrowth {

namespace {

constexpr double kMinEigenGap = 1e-9;

// Breadth-first reachability from node 0, following edge j -> i when
// m(i,j) > 0 (forward) or i -> j (backward).
std::vector<bool> reachable(const Eigen::MatrixXd& m, bool forward) {
  const Eigen::Index n = m.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Eigen::Index> todo;
  seen[0] = true;
  todo.push(0);
  while (!todo.empty()) {
    const Eigen::Index j = todo.front();
    todo.pop();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j || seen[static_cast<std::size_t>(i)]) continue;
      const double w = forward ? m(i, j) : m(j, i);
      if (w > 0.0) {
        seen[static_cast<std::size_t>(i)] = true;
        todo.push(i);
      }
    }
  }
  return seen;
}

// Power iteration on exp(h m), which maps the closed cone into its interior
// for irreducible m. Returns the fixed direction with unit coordinate sum.
Eigen::VectorXd cone_power_iteration(const Eigen::MatrixXd& m, Eigen::VectorXd v) {
  const double h = 1.0 / (1.0 + m.diagonal().cwiseAbs().maxCoeff());
  const Eigen::MatrixXd step = (h * m).exp();
  v = v.cwiseAbs();
  v /= v.sum();
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd next = step * v;
    next /= next.sum();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change <= 1e-15) break;
  }
  return v;
}

Eigen::Index dominant_index(const Eigen::VectorXcd& ev) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (ev(i).real() > ev(best).real()) best = i;
  }
  return best;
}

}  // namespace

double inf_norm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

bool is_irreducible(const Eigen::MatrixXd& m) {
  const auto fwd = reachable(m, true);
  const auto bwd = reachable(m, false);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

MetzlerMatrix validate_metzler(const Eigen::MatrixXd& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 2) {
    std::ostringstream os;
    os << "expected a square matrix with n >= 2, got " << entries.rows() << "x"
       << entries.cols();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  const Eigen::Index n = entries.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(entries(i, j))) {
        std::ostringstream os;
        os << "non-finite entry at (" << i + 1 << "," << j + 1 << ")";
        throw Error(ErrorCode::NonFinite, os.str());
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && entries(i, j) < 0.0) {
        throw NegativeOffDiagonal(static_cast<int>(i + 1), static_cast<int>(j + 1),
                                  entries(i, j));
      }
    }
  }
  return MetzlerMatrix(entries, is_irreducible(entries));
}

ControlSet ControlSet::segment(Eigen::MatrixXd G, Eigen::MatrixXd F, double a, double A) {
  if (G.rows() != F.rows() || G.cols() != F.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "segment: G and F differ in shape");
  }
  if (!std::isfinite(a) || !std::isfinite(A) || a > A) {
    throw Error(ErrorCode::OutOfRange, "segment: range requires finite a <= A");
  }
  ControlSet cs;
  for (double alpha : {a, A}) {
    MetzlerMatrix m = validate_metzler(G + alpha * F);
    if (!m.irreducible()) {
      std::ostringstream os;
      os << "segment endpoint G + " << alpha << " F is reducible";
      throw Error(ErrorCode::NotIrreducible, os.str());
    }
    cs.vertices_.push_back(std::move(m));
  }
  cs.dim_ = G.rows();
  cs.repr_ = Segment{std::move(G), std::move(F), a, A};
  return cs;
}

ControlSet ControlSet::vertices(std::vector<MetzlerMatrix> matrices) {
  if (matrices.empty()) {
    throw Error(ErrorCode::InvalidModel, "vertex list is empty");
  }
  const Eigen::Index n = matrices.front().dim();
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    if (matrices[k].dim() != n) {
      throw Error(ErrorCode::DimensionMismatch, "vertex matrices differ in dimension");
    }
    if (!matrices[k].irreducible()) {
      std::ostringstream os;
      os << "vertex " << k << " is reducible";
      throw Error(ErrorCode::NotIrreducible, os.str());
    }
  }
  ControlSet cs;
  cs.vertices_ = matrices;
  cs.dim_ = n;
  cs.repr_ = VertexList{std::move(matrices)};
  return cs;
}

const Segment& ControlSet::as_segment() const {
  if (const auto* s = std::get_if<Segment>(&repr_)) return *s;
  throw Error(ErrorCode::WrongVariant, "control set is a vertex list, not a segment");
}

MetzlerMatrix ControlSet::at(double alpha) const {
  const Segment& s = as_segment();
  if (!(alpha >= s.a && alpha <= s.A)) {
    std::ostringstream os;
    os << "alpha = " << alpha << " outside [" << s.a << ", " << s.A << "]";
    throw Error(ErrorCode::OutOfRange, os.str());
  }
  if (alpha == s.a) return vertices_.front();
  if (alpha == s.A) return vertices_.back();
  return validate_metzler(s.G + alpha * s.F);
}

const Eigen::MatrixXd& ControlSet::matrix(VertexIndex v) const {
  if (v.value >= vertices_.size()) {
    throw Error(ErrorCode::OutOfRange, "vertex index out of range");
  }
  return vertices_[v.value].entries();
}

Eigen::MatrixXd ControlSet::matrix(const Control& c) const {
  if (const auto* v = std::get_if<VertexIndex>(&c)) return matrix(*v);
  return at(std::get<double>(c)).entries();
}

std::vector<MetzlerMatrix> vertices(const ControlSet& cs) { return cs.vertex_matrices(); }

MetzlerMatrix at(const ControlSet& cs, double alpha) { return cs.at(alpha); }

double SpectralData::spectral_gap() const {
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < eigenvalues.size(); ++i) {
    second = std::max(second, eigenvalues(i).real());
  }
  return perron.lambda - second;
}

PerronPair perron(const MetzlerMatrix& m) {
  if (!m.irreducible()) {
    throw Error(ErrorCode::NotIrreducible, "Perron pair requires an irreducible matrix");
  }
  const Eigen::MatrixXd& a = m.entries();
  Eigen::EigenSolver<Eigen::MatrixXd> right_solver(a);
  Eigen::EigenSolver<Eigen::MatrixXd> left_solver(a.transpose());
  const Eigen::Index r = dominant_index(right_solver.eigenvalues());
  const Eigen::Index l = dominant_index(left_solver.eigenvalues());

  PerronPair p;
  p.right = cone_power_iteration(a, right_solver.eigenvectors().col(r).real());
  p.left = cone_power_iteration(a.transpose(), left_solver.eigenvectors().col(l).real());
  p.left /= p.left.dot(p.right);
  // Two-sided Rayleigh quotient with <phi1, e1> = 1.
  p.lambda = p.left.dot(a * p.right);
  return p;
}

double perron_value(const MetzlerMatrix& m) { return perron(m).lambda; }

SpectralData spectral(const MetzlerMatrix& m) {
  PerronPair p = perron(m);
  const Eigen::Index n = m.dim();

  Eigen::EigenSolver<Eigen::MatrixXd> solver(m.entries());
  Eigen::VectorXcd ev = solver.eigenvalues();
  Eigen::MatrixXcd vecs = solver.eigenvectors();

  double min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      min_gap = std::min(min_gap, std::abs(ev(i) - ev(j)));
    }
  }
  if (min_gap < kMinEigenGap) {
    std::ostringstream os;
    os << "eigenvalue gap " << min_gap << " below " << kMinEigenGap;
    throw Error(ErrorCode::DefectiveSpectrum, os.str());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (ev(x).real() != ev(y).real()) return ev(x).real() > ev(y).real();
    return ev(x).imag() > ev(y).imag();
  });

  SpectralData out;
  out.eigenvalues.resize(n);
  out.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = ev(order[static_cast<std::size_t>(k)]);
    out.right.col(k) = vecs.col(order[static_cast<std::size_t>(k)]);
  }
  out.eigenvalues(0) = p.lambda;
  out.right.col(0) = p.right.cast<std::complex<double>>();

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(out.right);
  out.left = lu.inverse();
  out.left.row(0) = p.left.transpose().cast<std::complex<double>>();

  const Eigen::MatrixXcd gram = out.left * out.right;
  const double bio = (gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(bio <= 1e-8)) {
    std::ostringstream os;
    os << "biorthogonal normalisation failed (defect " << bio << ")";
    throw Error(ErrorCode::DefectiveSpectrum, os.str());
  }
  out.perron = std::move(p);
  return out;
}

}  // namespace posgrowth
