#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbqkd/error.hpp"
#include "fbqkd/qstate.hpp"

namespace fbqkd::tomography {

using qstate::DensityMatrix;
using qstate::Matrix4c;

/// Eigenvectors of the single-qubit Pauli operators.
enum class PauliEigen : std::uint8_t { ZPlus, ZMinus, XPlus, XMinus, YPlus, YMinus };

std::string to_string(PauliEigen e);
std::optional<PauliEigen> parse_pauli_eigen(const std::string& s);

struct TomographySetting {
  PauliEigen alice;
  PauliEigen bob;
  std::uint64_t shots = 0;

  friend bool operator==(const TomographySetting&, const TomographySetting&) = default;
};

struct TomographyRecord {
  TomographySetting setting;
  std::uint64_t count = 0;

  friend bool operator==(const TomographyRecord&, const TomographyRecord&) = default;
};

/// All 36 product settings {Z+-, X+-, Y+-} x {Z+-, X+-, Y+-}.
std::vector<TomographySetting> projector_set(std::uint64_t shots_per_setting = 1);

/// Rank-one projector Pi_bob (x) Pi_alice (signal qubit first).
Matrix4c projector(const TomographySetting& s);

/// Real 36x16 map from Pauli coordinates r_ij = Tr(rho sigma_i (x) sigma_j) to outcome
/// probabilities.
Eigen::MatrixXd measurement_matrix(const std::vector<TomographySetting>& settings);

/// Numerical rank from the singular values (relative threshold 1e-10).
int measurement_rank(const std::vector<TomographySetting>& settings);

/// Each count ~ Binomial(shots, Tr(rho Pi)); deterministic in `seed`.
std::vector<TomographyRecord> simulate_counts(const DensityMatrix& rho,
                                              std::uint64_t shots_per_setting,
                                              std::uint64_t seed);

/// Per-shot binomial log-likelihood of the records under `rho`; zero-count terms are
/// skipped. Returns -inf when a record with nonzero count has zero probability.
double log_likelihood(const Matrix4c& rho, const std::vector<TomographyRecord>& records);

/// Unconstrained least-squares estimate from observed frequencies. Hermitian and
/// unit-trace, not necessarily PSD. Throws IncompleteData on rank-deficient input.
Matrix4c linear_inversion(const std::vector<TomographyRecord>& records);

struct MleOptions {
  int max_iterations = 5000;
  double tolerance = 1e-9;  // on the per-shot log-likelihood improvement
  bool record_trace = false;
};

struct MleResult {
  DensityMatrix rho;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> likelihood_trace;  // one entry per accepted iterate when requested
};

/// Raised when the optimiser hits max_iterations; carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, DensityMatrix last, double last_ll)
      : Error(what), last_iterate(std::move(last)), last_log_likelihood(last_ll) {}

  DensityMatrix last_iterate;
  double last_log_likelihood;
};

/// Maximum-likelihood density matrix under the Cholesky parameterisation
/// rho = T^dag T / Tr(T^dag T), T lower triangular.
MleResult mle_reconstruct(const std::vector<TomographyRecord>& records,
                          const MleOptions& options = {});

/// 16 real parameters of T (4 real diagonal, 6 complex sub-diagonal) <-> rho.
Eigen::VectorXd cholesky_parameters(const Matrix4c& rho);
Matrix4c rho_from_parameters(const Eigen::VectorXd& params);

/// Analytic gradient of log_likelihood with respect to the Cholesky parameters.
Eigen::VectorXd log_likelihood_gradient(const Eigen::VectorXd& params,
                                        const std::vector<TomographyRecord>& records);

double trace_distance(const Matrix4c& a, const Matrix4c& b);

/// Root fidelity between two density matrices, (Tr sqrt(sqrt(a) b sqrt(a)))^2.
double state_fidelity(const Matrix4c& a, const Matrix4c& b);

void write_records_csv(std::ostream& os, const std::vector<TomographyRecord>& records);
std::vector<TomographyRecord> read_records_csv(std::istream& is);

/// Real block followed by imaginary block, each 4 rows of 4 columns.
void write_density_csv(std::ostream& os, const Matrix4c& rho);

}  // namespace fbqkd::tomography
