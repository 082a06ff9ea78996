#include "fbqkd/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fbqkd/error.hpp"

namespace fbqkd {

std::optional<Projector> parse_projector(char c) {
  switch (c) {
    case '+': return Projector::Plus;
    case '-': return Projector::Minus;
    case '0': return Projector::Zero;
    case '1': return Projector::One;
    default: return std::nullopt;
  }
}

std::optional<ProjectorOutcome> ProjectorOutcome::parse(std::string_view label) {
  if (label.size() != 2) return std::nullopt;
  auto a = parse_projector(label[0]);
  auto b = parse_projector(label[1]);
  if (!a || !b) return std::nullopt;
  return ProjectorOutcome{*a, *b};
}

std::string detector_name(DetectorId d) { return "D" + std::to_string(static_cast<int>(d)); }

std::optional<DetectorId> parse_detector(std::string_view name) {
  if (name.size() == 2 && (name[0] == 'D' || name[0] == 'd')) name.remove_prefix(1);
  if (name.size() != 1 || name[0] < '1' || name[0] > '6') return std::nullopt;
  return static_cast<DetectorId>(name[0] - '0');
}

}  // namespace fbqkd

namespace fbqkd::qstate {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

Matrix2c outer(const Vector2c& v) { return v * v.adjoint(); }

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

}  // namespace

void validate_density(const Matrix4c& m) {
  if (!m.allFinite()) throw InvalidArgument("density matrix has non-finite entries");
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw InvalidArgument("density matrix is not Hermitian (deviation " + std::to_string(herm) +
                          ")");
  }
  const Complex tr = m.trace();
  if (std::abs(tr - Complex{1.0, 0.0}) > kTraceTol) {
    throw InvalidArgument("density matrix trace is " + std::to_string(tr.real()) + ", not 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kEigenFloor) {
    throw InvalidArgument("density matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

DensityMatrix::DensityMatrix(const Matrix4c& m) : m_(m) { validate_density(m_); }

MeasurementSetting::MeasurementSetting(Basis basis, double analysis_phase)
    : basis_(basis), phase_(wrap_phase(analysis_phase)) {
  if (!std::isfinite(analysis_phase)) throw InvalidArgument("analysis phase must be finite");
}

Vector2c MeasurementSetting::ket(int bit) const {
  Vector2c v = Vector2c::Zero();
  if (basis_ == Basis::Z) {
    v(bit) = 1.0;
    return v;
  }
  const double s = 1.0 / std::sqrt(2.0);
  v(0) = s;
  v(1) = (bit == 0 ? s : -s) * std::polar(1.0, phase_);
  return v;
}

Vector4c psi_plus() {
  Vector4c v = Vector4c::Zero();
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

Vector4c psi_minus() {
  Vector4c v = psi_plus();
  v(3) = -v(3);
  return v;
}

DensityMatrix bell_state(double theta) {
  Vector4c v = Vector4c::Zero();
  v(0) = 1.0 / std::sqrt(2.0);
  v(3) = std::polar(1.0 / std::sqrt(2.0), theta);
  Matrix4c m = v * v.adjoint();
  // Remove rounding asymmetry so the validator sees an exactly Hermitian matrix.
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(m);
}

DensityMatrix noisy_state(double p_werner, double theta) {
  if (!(p_werner >= 0.0 && p_werner <= 1.0)) {
    throw InvalidArgument("Werner weight must lie in [0, 1]");
  }
  Matrix4c m = p_werner * bell_state(theta).matrix() +
               ((1.0 - p_werner) / 4.0) * Matrix4c::Identity();
  return DensityMatrix(m);
}

OutcomeTable outcome_probabilities(const DensityMatrix& rho, const MeasurementSetting& alice,
                                   const MeasurementSetting& bob) {
  OutcomeTable out;
  for (int a = 0; a < 2; ++a) {
    const Matrix2c pa = outer(alice.ket(a));
    for (int b = 0; b < 2; ++b) {
      const Matrix4c proj = kron(outer(bob.ket(b)), pa);
      out.p[a][b] = std::max(0.0, (rho.matrix() * proj).trace().real());
    }
  }
  return out;
}

double two_photon_fringe(double visibility, double theta_sum) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw InvalidArgument("visibility must lie in [0, 1]");
  }
  return 0.5 * (1.0 + visibility * std::cos(theta_sum));
}

double fidelity_to_pure(const DensityMatrix& rho, const Vector4c& target) {
  if (std::abs(target.squaredNorm() - 1.0) > 1e-9) {
    throw InvalidArgument("fidelity target must be normalised");
  }
  const Complex f = target.dot(rho.matrix() * target);
  return std::clamp(f.real(), 0.0, 1.0);
}

namespace {

int block_origin(Basis b) { return b == Basis::X ? 0 : 2; }

constexpr std::array<std::pair<Basis, Basis>, 4> kBlocks{{{Basis::X, Basis::X},
                                                         {Basis::X, Basis::Z},
                                                         {Basis::Z, Basis::X},
                                                         {Basis::Z, Basis::Z}}};

double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.transpose() * b).trace();
}

double overlap_fidelity(const Eigen::MatrixXd& e, const Eigen::MatrixXd& t) {
  const double ee = trace_product(e, e);
  const double tt = trace_product(t, t);
  if (ee <= 0.0 || tt <= 0.0) throw InvalidArgument("correlation fidelity of a zero matrix");
  return trace_product(e, t) * trace_product(t, e) / (ee * tt);
}

}  // namespace

CorrelationMatrix::CorrelationMatrix(const Eigen::Matrix4d& entries) : t_(entries) {
  if (!t_.allFinite() || t_.minCoeff() < 0.0) {
    throw InvalidArgument("correlation matrix entries must be finite and nonnegative");
  }
  for (auto [a, b] : kBlocks) {
    const double s = subspace(a, b).sum();
    if (std::abs(s - 1.0) > 1e-9) {
      throw InvalidArgument("correlation subspace does not sum to 1");
    }
  }
}

Eigen::Matrix2d CorrelationMatrix::subspace(Basis alice, Basis bob) const {
  return t_.block<2, 2>(block_origin(alice), block_origin(bob));
}

double correlation_fidelity(const Eigen::Matrix4d& t_exp, const Eigen::Matrix4d& t_th) {
  return overlap_fidelity(t_exp, t_th);
}

double correlation_fidelity(const CorrelationMatrix& t_exp, const CorrelationMatrix& t_th) {
  return overlap_fidelity(t_exp.entries(), t_th.entries());
}

double subspace_fidelity(const CorrelationMatrix& t_exp, const CorrelationMatrix& t_th,
                         Basis alice, Basis bob) {
  return overlap_fidelity(t_exp.subspace(alice, bob), t_th.subspace(alice, bob));
}

CorrelationMatrix ideal_correlation_matrix() {
  Eigen::Matrix4d t = Eigen::Matrix4d::Constant(0.25);
  t.block<2, 2>(0, 0) << 0.5, 0.0, 0.0, 0.5;
  t.block<2, 2>(2, 2) << 0.5, 0.0, 0.0, 0.5;
  return CorrelationMatrix(t);
}

CorrelationMatrix normalize_counts_to_correlation(const CountMatrix& counts) {
  Eigen::Matrix4d t;
  for (auto [a, b] : kBlocks) {
    const int r0 = block_origin(a);
    const int c0 = block_origin(b);
    double total = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) total += static_cast<double>(counts[r0 + i][c0 + j]);
    if (total <= 0.0) throw InsufficientData("correlation subspace has no counts");
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        t(r0 + i, c0 + j) = static_cast<double>(counts[r0 + i][c0 + j]) / total;
  }
  // Re-normalise each block against rounding before validation.
  for (auto [a, b] : kBlocks) {
    auto blk = t.block<2, 2>(block_origin(a), block_origin(b));
    blk /= blk.sum();
  }
  return CorrelationMatrix(t);
}

void write_correlation_csv(std::ostream& os, const CorrelationMatrix& t) {
  os << "alice\\bob";
  for (Projector p : kAllProjectors) os << ',' << projector_symbol(p);
  os << '\n';
  std::ostringstream cell;
  cell.precision(17);
  for (Projector a : kAllProjectors) {
    os << projector_symbol(a);
    for (Projector b : kAllProjectors) {
      cell.str({});
      cell << t(a, b);
      os << ',' << cell.str();
    }
    os << '\n';
  }
}

CorrelationMatrix read_correlation_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("correlation CSV is empty");
  Eigen::Matrix4d t;
  for (int row = 0; row < 4; ++row) {
    if (!std::getline(is, line)) throw InvalidArgument("correlation CSV has fewer than 4 rows");
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    auto label = cell.empty() ? std::nullopt : parse_projector(cell[0]);
    if (!label || static_cast<int>(*label) != row) {
      throw InvalidArgument("unexpected row label in correlation CSV: " + cell);
    }
    for (int col = 0; col < 4; ++col) {
      if (!std::getline(ss, cell, ',')) throw InvalidArgument("short row in correlation CSV");
      t(row, col) = std::stod(cell);
    }
  }
  return CorrelationMatrix(t);
}

}  // namespace fbqkd::qstate
