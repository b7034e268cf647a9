#include "kahlerlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include "kahlerlab/csv.hpp"
#include "kahlerlab/error.hpp"

namespace kahlerlab {

namespace {

double mu_norm(const ScalarField& v, const ScalarField& mass) {
  return std::sqrt((v.array().square() * mass.array()).sum());
}

// ||L phi + lambda phi||_mu = ||M^{-1}(S phi - lambda M phi)||_mu
double residual_norm(const SparseOperator& op, const Eigen::Ref<const Eigen::VectorXd>& phi,
                     double lambda) {
  const ScalarField r = op.stiffness * phi - lambda * op.mass.cwiseProduct(phi);
  return std::sqrt((r.array().square() / op.mass.array()).sum());
}

void finish(const SparseOperator& op, SpectralData& spec) {
  const int k = spec.count();
  spec.mass = op.mass;
  spec.volume = op.volume;
  spec.eigenvalues(0) = 0.0;
  spec.eigenfunctions.col(0).setConstant(1.0 / std::sqrt(op.volume));
  const ScalarField w = op.mass.cwiseProduct(spec.eigenfunctions.col(0));
  for (int j = 1; j < k; ++j) {
    const double c = w.dot(spec.eigenfunctions.col(j));
    spec.eigenfunctions.col(j) -= c * spec.eigenfunctions.col(0);
    spec.eigenfunctions.col(j) /= mu_norm(spec.eigenfunctions.col(j), op.mass);
  }
  spec.residuals.resize(k);
  for (int j = 0; j < k; ++j)
    spec.residuals(j) = residual_norm(op, spec.eigenfunctions.col(j), spec.eigenvalues(j));
  if (spec.complete()) {
    spec.remainder = ScalarField::Zero(op.mass.size());
  } else {
    spec.remainder = (op.mass.cwiseInverse() - spec.eigenfunctions.rowwise().squaredNorm())
                         .cwiseMax(0.0);
  }
}

SpectralData dense_eigendecompose(const SparseOperator& op, int k) {
  const auto n = static_cast<Eigen::Index>(op.size());
  const ScalarField d = op.mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd t = Eigen::MatrixXd(op.stiffness);
  t = d.asDiagonal() * t * d.asDiagonal();
  t = 0.5 * (t + t.transpose()).eval();
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                                         t.data(), static_cast<lapack_int>(n), w.data());
  if (info != 0)
    fail(ErrorCode::kSolver, "dense eigensolver failed with info " + std::to_string(info));
  SpectralData spec;
  spec.eigenvalues = w.head(k).cwiseMax(0.0);
  spec.eigenfunctions = d.asDiagonal() * t.leftCols(k);
  finish(op, spec);
  return spec;
}

// M-orthonormal basis for the columns of q via Householder QR of M^{1/2} q.
Eigen::MatrixXd mass_orthonormalize(const Eigen::MatrixXd& q, const ScalarField& sqrt_mass) {
  const Eigen::MatrixXd z = sqrt_mass.asDiagonal() * q;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  const Eigen::MatrixXd thin =
      qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), z.cols());
  return sqrt_mass.cwiseInverse().asDiagonal() * thin;
}

// Subspace iteration on B = (S + sigma M)^{-1} M with Rayleigh-Ritz over
// span[X, B X], which is self-adjoint in the mass inner product.
SpectralData iterative_eigendecompose(const SparseOperator& op, int k, double tol,
                                      const EigenOptions& options) {
  const auto n = static_cast<Eigen::Index>(op.size());
  const int p = static_cast<int>(std::min<Eigen::Index>(n / 2, std::max(2 * k, k + 16)));
  require(p >= k, ErrorCode::kInvalidArgument, "too many eigenpairs for the iterative path");

  double gersh = 0.0;
  for (int col = 0; col < op.stiffness.outerSize(); ++col) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) s += std::abs(it.value());
    gersh = std::max(gersh, s / op.mass(col));
  }
  const double sigma = 1e-4 * gersh;
  SparseMatrix shifted = op.stiffness;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += sigma * op.mass(i);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::kSolver, "shifted factorization failed");

  const ScalarField sqrt_mass = op.mass.cwiseSqrt();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = unif(rng);
  x = mass_orthonormalize(x, sqrt_mass);

  Eigen::VectorXd theta;
  Eigen::VectorXd res(k);
  double worst = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::MatrixXd basis(n, 2 * p);
    basis.leftCols(p) = x;
    basis.rightCols(p) = ldlt.solve(op.mass.asDiagonal() * x);
    basis = mass_orthonormalize(basis, sqrt_mass);
    Eigen::MatrixXd small = basis.transpose() * (op.stiffness * basis);
    small = 0.5 * (small + small.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
    theta = es.eigenvalues().head(p);
    x = basis * es.eigenvectors().leftCols(p);

    worst = 0.0;
    for (int j = 0; j < k; ++j) {
      res(j) = residual_norm(op, x.col(j), theta(j));
      worst = std::max(worst, res(j) / std::max(1.0, theta(j)));
    }
    if (worst <= tol) {
      SpectralData spec;
      spec.eigenvalues = theta.head(k).cwiseMax(0.0);
      spec.eigenfunctions = x.leftCols(k);
      finish(op, spec);
      return spec;
    }
  }
  fail(ErrorCode::kSolver, "eigensolver did not converge: worst relative residual " +
                               format_number(worst) + " > " + format_number(tol));
}

}  // namespace

SpectralData eigendecompose(const SparseOperator& op, int k, double tol,
                            const EigenOptions& options) {
  const auto n = static_cast<int>(op.size());
  require(k >= 1 && k <= n, ErrorCode::kInvalidArgument,
          "eigenpair count must lie in [1, N]");
  require(tol > 0.0, ErrorCode::kInvalidArgument, "tolerance must be positive");
  SpectralData spec;
  if (n <= options.max_dense && !options.force_iterative) {
    spec = dense_eigendecompose(op, k);
  } else {
    require(2 * k <= n, ErrorCode::kInvalidArgument,
            "iterative path needs K <= N/2; use the dense path");
    spec = iterative_eigendecompose(op, k, tol, options);
  }
  for (int j = 0; j < k; ++j) {
    if (spec.residuals(j) > tol * std::max(1.0, spec.eigenvalues(j)) * 1e3) {
      fail(ErrorCode::kSolver, "eigenpair " + std::to_string(j) + " has residual " +
                                   format_number(spec.residuals(j)));
    }
  }
  return spec;
}

double minimum_valid_time(const SpectralData& spec, NodeId x, NodeId y, double tol) {
  if (spec.complete()) return 0.0;
  const double top = spec.eigenvalues(spec.count() - 1);
  const double r = std::sqrt(spec.remainder(static_cast<Eigen::Index>(x)) *
                             spec.remainder(static_cast<Eigen::Index>(y)));
  const double target = tol / spec.volume;
  if (r <= target) return 0.0;
  if (top <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(r / target) / top;
}

HeatKernelEval heat_kernel_eval(const SpectralData& spec, NodeId x, NodeId y, double t,
                                double tol) {
  require(std::isfinite(t) && t > 0.0, ErrorCode::kInvalidArgument, "t must be positive");
  require(x < spec.node_count() && y < spec.node_count(), ErrorCode::kInvalidArgument,
          "node out of range");
  const auto xi = static_cast<Eigen::Index>(x), yi = static_cast<Eigen::Index>(y);
  HeatKernelEval out;
  out.t = t;
  double s = 0.0;
  for (int k = 0; k < spec.count(); ++k)
    s += std::exp(-spec.eigenvalues(k) * t) * spec.eigenfunctions(xi, k) *
         spec.eigenfunctions(yi, k);
  out.value = s;
  out.deviation = s - 1.0 / spec.volume;
  if (!spec.complete()) {
    out.tail_bound = std::exp(-spec.eigenvalues(spec.count() - 1) * t) *
                     std::sqrt(spec.remainder(xi) * spec.remainder(yi));
  }
  if (out.tail_bound > tol * std::max(std::abs(out.value), 1.0 / spec.volume)) {
    fail(ErrorCode::kTruncation,
         "heat kernel truncation tail " + format_number(out.tail_bound) + " too large at t = " +
             format_number(t) + "; minimum valid t is " +
             format_number(minimum_valid_time(spec, x, y, tol)));
  }
  return out;
}

ScalarField heat_kernel_row(const SpectralData& spec, NodeId x, double t) {
  require(std::isfinite(t) && t > 0.0, ErrorCode::kInvalidArgument, "t must be positive");
  const Eigen::VectorXd c = (-spec.eigenvalues.array() * t).exp() *
                            spec.eigenfunctions.row(static_cast<Eigen::Index>(x)).transpose().array();
  return spec.eigenfunctions * c;
}

BoundReport heat_trace_bound_check(const SpectralData& spec, std::span<const double> t_grid,
                                   double intersection, double volume, double q,
                                   std::span<const NodeId> nodes) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  require(intersection > 0.0 && volume > 0.0, ErrorCode::kInvalidArgument,
          "intersection number and volume must be positive");
  const double e = q / (q - 1.0);
  BoundReport r;
  r.check = "heat_trace";
  r.fitted_constant = -std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    require(t > 0.0, ErrorCode::kInvalidArgument, "t grid must be positive");
    for (NodeId x : nodes) {
      const HeatKernelEval h = heat_kernel_eval(spec, x, x, t, 1e-6);
      const double lhs = (h.deviation + h.tail_bound) * volume;
      const double rhs = std::pow(t / intersection, -e);
      const double c = lhs / rhs;
      ++r.samples;
      if (c > r.fitted_constant) {
        r.fitted_constant = c;
        r.lhs = lhs;
        r.rhs = rhs;
      }
    }
  }
  return r;
}

double heat_decay_rate(const SpectralData& spec, NodeId x, double t1, double t2) {
  require(t2 > t1 && t1 > 0.0, ErrorCode::kInvalidArgument, "need 0 < t1 < t2");
  const double a = std::abs(heat_kernel_eval(spec, x, x, t1).deviation);
  const double b = std::abs(heat_kernel_eval(spec, x, x, t2).deviation);
  return -std::log(b / a) / (t2 - t1);
}

double GreenFunction::lower_constant() const { return std::max(0.0, -volume * min_value()); }

ScalarField GreenFunction::shifted(double c0) const {
  return values.array() + (c0 + 1.0) / volume;
}

struct GreenSolver::Impl {
  const SparseOperator* op = nullptr;
  NodeId ground = 0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

GreenSolver::GreenSolver(const SparseOperator& op) : impl_(std::make_unique<Impl>()) {
  const auto n = static_cast<int>(op.size());
  require(n >= 2, ErrorCode::kInvalidArgument, "operator too small");
  impl_->op = &op;
  impl_->ground = static_cast<NodeId>(n - 1);
  SparseMatrix reduced = op.stiffness.topLeftCorner(n - 1, n - 1);
  impl_->ldlt.compute(reduced);
  if (impl_->ldlt.info() != Eigen::Success)
    fail(ErrorCode::kSingular, "grounded stiffness matrix is singular; deflation failed");
  const Eigen::VectorXd d = impl_->ldlt.vectorD();
  if (d.minCoeff() <= 0.0)
    fail(ErrorCode::kSingular,
         "grounded stiffness matrix is not positive definite; grid may be disconnected");
}

GreenSolver::~GreenSolver() = default;
GreenSolver::GreenSolver(GreenSolver&&) noexcept = default;
GreenSolver& GreenSolver::operator=(GreenSolver&&) noexcept = default;

GreenFunction GreenSolver::solve(NodeId source) const {
  const SparseOperator& op = *impl_->op;
  const auto n = static_cast<Eigen::Index>(op.size());
  require(source < op.size(), ErrorCode::kInvalidArgument, "source node out of range");
  // S G = e_x - mu / V
  Eigen::VectorXd b = -op.mass / op.volume;
  b(static_cast<Eigen::Index>(source)) += 1.0;
  Eigen::VectorXd g(n);
  g.head(n - 1) = impl_->ldlt.solve(b.head(n - 1));
  g(n - 1) = 0.0;
  if (!g.allFinite()) fail(ErrorCode::kSingular, "Green solve produced non-finite values");
  GreenFunction out;
  out.source = source;
  out.volume = op.volume;
  out.values = g.array() - weighted_mean(op, g);
  return out;
}

GreenFunction green_function_eval(const SparseOperator& op, NodeId source) {
  return GreenSolver(op).solve(source);
}

GreenFunction green_function_spectral(const SpectralData& spec, NodeId source) {
  require(spec.complete(), ErrorCode::kTruncation,
          "spectral Green function needs the complete spectrum");
  require(source < spec.node_count(), ErrorCode::kInvalidArgument, "source node out of range");
  Eigen::VectorXd c = spec.eigenfunctions.row(static_cast<Eigen::Index>(source)).transpose();
  c(0) = 0.0;
  for (int k = 1; k < spec.count(); ++k) {
    require(spec.eigenvalues(k) > 0.0, ErrorCode::kSingular,
            "zero eigenvalue beyond the constants; grid may be disconnected");
    c(k) /= spec.eigenvalues(k);
  }
  GreenFunction out;
  out.source = source;
  out.volume = spec.volume;
  out.values = spec.eigenfunctions * c;
  return out;
}

GreenResidual green_equation_residual(const SparseOperator& op, const GreenFunction& g) {
  Eigen::VectorXd target = Eigen::VectorXd::Constant(g.values.size(), 1.0 / op.volume);
  const auto x = static_cast<Eigen::Index>(g.source);
  target(x) -= 1.0 / op.mass(x);
  // Relative to the size of the point mass so the value is grid independent.
  GreenResidual r;
  r.equation = (op.apply(g.values) - target).cwiseAbs().maxCoeff() * op.mass(x);
  r.mean = std::abs(g.values.dot(op.mass));
  return r;
}

GreenMoments green_integral_moments(const SparseOperator& op, const GreenFunction& g,
                                    double eps, double beta, double c0) {
  require(std::isfinite(beta) && beta > 0.0, ErrorCode::kInvalidArgument,
          "beta must be positive");
  require(std::isfinite(eps) && eps > 0.0, ErrorCode::kInvalidArgument,
          "epsilon must be positive");
  require(c0 >= g.lower_constant() * (1.0 - 1e-12), ErrorCode::kInvalidArgument,
          "shift constant too small: shifted Green function drops below 1/V");
  const ScalarField s = g.shifted(c0);
  const double v = op.volume;
  GreenMoments m;
  m.min_value = g.min_value();
  m.moment_1 = (s.array().pow(1.0 + eps) * op.mass.array()).sum();
  double m2 = 0.0;
  const auto n = static_cast<int>(op.size());
  for (int col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) {
      if (it.row() >= col) continue;
      const double w = -it.value();
      const double a = s(it.row());
      const double b = s(col);
      double mean;  // generalized mean of xi^{-1-beta} between a and b
      if (a == b) {
        mean = std::pow(a, -1.0 - beta);
      } else {
        mean = std::pow(a, -beta) * std::expm1(-beta * std::log1p((b - a) / a)) /
               (beta * (a - b));
      }
      m2 += w * (a - b) * (a - b) * mean;
    }
  }
  m.moment_2 = m2;
  m.normalized_1 = std::pow(v, eps) * m.moment_1;
  m.normalized_2 = beta * std::pow(v, -beta) * m.moment_2;
  return m;
}

double green_representation_residual(const SparseOperator& op,
                                     std::span<const GreenFunction> greens,
                                     const ScalarField& u) {
  require(u.size() == op.mass.size(), ErrorCode::kInvalidArgument,
          "field size does not match the operator");
  const ScalarField su = op.stiffness * u;
  const double mean = weighted_mean(op, u);
  double worst = 0.0;
  for (const auto& g : greens) {
    const double pairing = g.values.dot(su);
    const double r = u(static_cast<Eigen::Index>(g.source)) - mean - pairing;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

HeatDerivativeEval heat_time_derivative_eval(const SpectralData& spec, NodeId x, double t) {
  require(std::isfinite(t) && t > 0.0, ErrorCode::kInvalidArgument, "t must be positive");
  const auto xi = static_cast<Eigen::Index>(x);
  if (!spec.complete()) {
    const double top = spec.eigenvalues(spec.count() - 1);
    const double tmin = std::max(minimum_valid_time(spec, x, x, 1e-8), 1.0 / top);
    if (t < tmin)
      fail(ErrorCode::kTruncation, "time derivative truncation too coarse at t = " +
                                       format_number(t) + "; minimum valid t is " +
                                       format_number(tmin));
  }
  const Eigen::ArrayXd lam = spec.eigenvalues.array();
  const Eigen::ArrayXd e = (-lam * t).exp();
  const Eigen::ArrayXd phix = spec.eigenfunctions.row(xi).transpose().array();
  const Eigen::VectorXd coef = (-lam * e * phix).matrix();
  HeatDerivativeEval out;
  out.l2_squared = coef.squaredNorm();
  const Eigen::VectorXd row = spec.eigenfunctions * coef;
  out.l2_direct = (row.array().square() * spec.mass.array()).sum();
  out.sup_norm = row.cwiseAbs().maxCoeff();
  out.reduced_diagonal = (e * phix.square()).tail(spec.count() - 1).sum();
  return out;
}

BoundReport eigenvalue_growth_check(const SpectralData& spec, double intersection, double q,
                                    int max_index) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  const int top = max_index < 0 ? spec.count() - 1 : std::min(max_index, spec.count() - 1);
  require(top >= 1, ErrorCode::kInvalidArgument, "need at least one nonzero eigenvalue");
  const double e = (q - 1.0) / q;
  BoundReport r;
  r.check = "eigen_growth";
  r.kind = CheckKind::kFloor;
  r.fitted_constant = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= top; ++k) {
    const double rhs = std::pow(static_cast<double>(k), e) / intersection;
    const double c = spec.eigenvalues(k) / rhs;
    ++r.samples;
    if (c < r.fitted_constant) {
      r.fitted_constant = c;
      r.lhs = spec.eigenvalues(k);
      r.rhs = rhs;
    }
  }
  return r;
}

BoundReport eigenfunction_sup_check(const SpectralData& spec, double intersection,
                                    double volume, double q) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  const double e = q / (q - 1.0);
  BoundReport r;
  r.check = "eigenfunction_sup";
  r.fitted_constant = -std::numeric_limits<double>::infinity();
  for (int k = 1; k < spec.count(); ++k) {
    const double sup2 = spec.eigenfunctions.col(k).cwiseAbs2().maxCoeff();
    const double lhs = sup2 * volume;
    const double rhs = std::pow(intersection * spec.eigenvalues(k), e);
    const double c = lhs / rhs;
    ++r.samples;
    if (c > r.fitted_constant) {
      r.fitted_constant = c;
      r.lhs = lhs;
      r.rhs = rhs;
    }
  }
  return r;
}

void write_spectrum_csv(const SpectralData& spec, std::ostream& out) {
  out << "k,lambda,residual\n";
  for (int k = 0; k < spec.count(); ++k)
    out << k << ',' << format_number(spec.eigenvalues(k)) << ','
        << format_number(spec.residuals(k)) << '\n';
}

}  // namespace kahlerlab
