#pragma once

// Two-qubit frequency-bin state algebra. Basis order is {|00>, |01>, |10>, |11>}
// with the signal (Bob) qubit first.

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "fbqkd/types.hpp"

namespace fbqkd::qstate {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;
using Matrix2c = Eigen::Matrix<Complex, 2, 2>;
using Vector2c = Eigen::Matrix<Complex, 2, 1>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kEigenFloor = -1e-10;

/// Throws InvalidArgument unless `m` is Hermitian, unit-trace and PSD within tolerance.
void validate_density(const Matrix4c& m);

class DensityMatrix {
 public:
  /// Validating constructor.
  explicit DensityMatrix(const Matrix4c& m);

  const Matrix4c& matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

  double purity() const { return (m_ * m_).trace().real(); }

 private:
  Matrix4c m_;
};

/// Basis choice of one party; the analysis phase only matters for X and is kept in [0, 2pi).
class MeasurementSetting {
 public:
  MeasurementSetting(Basis basis, double analysis_phase = 0.0);

  static MeasurementSetting z() { return {Basis::Z}; }
  static MeasurementSetting x(double phase = 0.0) { return {Basis::X, phase}; }

  Basis basis() const { return basis_; }
  double analysis_phase() const { return phase_; }

  /// Ket of outcome `bit` (0 -> |0> or |+_phi>, 1 -> |1> or |-_phi>), with
  /// |+-_phi> = (|0> +- e^{i phi}|1>)/sqrt(2).
  Vector2c ket(int bit) const;

 private:
  Basis basis_;
  double phase_;
};

/// p[a][b] = probability that Alice reads bit a and Bob reads bit b.
struct OutcomeTable {
  std::array<std::array<double, 2>, 2> p{};

  double operator()(int a, int b) const { return p[a][b]; }
  double total() const { return p[0][0] + p[0][1] + p[1][0] + p[1][1]; }
};

Vector4c psi_plus();
Vector4c psi_minus();

/// Pure state (|00> + e^{i theta}|11>)/sqrt(2).
DensityMatrix bell_state(double theta);

/// Werner mixture p * bell_state(theta) + (1 - p) * I/4.
DensityMatrix noisy_state(double p_werner, double theta);

/// Tr(rho . Pi_bob (x) Pi_alice) for every pair of outcomes. The signal qubit is the
/// first tensor factor.
OutcomeTable outcome_probabilities(const DensityMatrix& rho, const MeasurementSetting& alice,
                                   const MeasurementSetting& bob);

/// Relative two-photon coincidence rate (1 + V cos(theta_sum)) / 2.
double two_photon_fringe(double visibility, double theta_sum);

/// <psi|rho|psi> for a normalised pure target, clamped to [0, 1].
double fidelity_to_pure(const DensityMatrix& rho, const Vector4c& target);

/// 4x4 outcome table; rows are Alice {+,-,0,1}, columns Bob {+,-,0,1}.
class CorrelationMatrix {
 public:
  /// Validating constructor: entries nonnegative, each 2x2 block sums to one.
  explicit CorrelationMatrix(const Eigen::Matrix4d& entries);

  const Eigen::Matrix4d& entries() const { return t_; }
  double operator()(Projector alice, Projector bob) const {
    return t_(static_cast<int>(alice), static_cast<int>(bob));
  }

  /// 2x2 block for the given (Alice basis, Bob basis).
  Eigen::Matrix2d subspace(Basis alice, Basis bob) const;

 private:
  Eigen::Matrix4d t_;
};

/// Normalised overlap Tr(A^T B) Tr(B^T A) / (Tr(A^T A) Tr(B^T B)). Scale invariant in
/// both arguments; throws InvalidArgument on an all-zero argument.
double correlation_fidelity(const Eigen::Matrix4d& t_exp, const Eigen::Matrix4d& t_th);
double correlation_fidelity(const CorrelationMatrix& t_exp, const CorrelationMatrix& t_th);

/// The same overlap restricted to one 2x2 basis block.
double subspace_fidelity(const CorrelationMatrix& t_exp, const CorrelationMatrix& t_th,
                         Basis alice, Basis bob);

/// Matched bases perfectly correlated, mismatched bases uniform.
CorrelationMatrix ideal_correlation_matrix();

using CountMatrix = std::array<std::array<std::uint64_t, 4>, 4>;

/// Divides every 2x2 block by its own total. Throws InsufficientData on an empty block.
CorrelationMatrix normalize_counts_to_correlation(const CountMatrix& counts);

/// CSV with a header row and column of outcome labels.
void write_correlation_csv(std::ostream& os, const CorrelationMatrix& t);
CorrelationMatrix read_correlation_csv(std::istream& is);

}  // namespace fbqkd::qstate
