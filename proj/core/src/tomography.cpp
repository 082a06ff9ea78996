#include "fbqkd/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "fbqkd/rng.hpp"

namespace fbqkd::tomography {

namespace {

using qstate::Complex;
using qstate::Matrix2c;
using qstate::Vector2c;
using qstate::Vector4c;

constexpr std::array<PauliEigen, 6> kEigen{PauliEigen::ZPlus, PauliEigen::ZMinus,
                                           PauliEigen::XPlus, PauliEigen::XMinus,
                                           PauliEigen::YPlus, PauliEigen::YMinus};

Vector2c eigenvector(PauliEigen e) {
  const double s = 1.0 / std::sqrt(2.0);
  const Complex i{0.0, 1.0};
  Vector2c v;
  switch (e) {
    case PauliEigen::ZPlus: v << 1.0, 0.0; break;
    case PauliEigen::ZMinus: v << 0.0, 1.0; break;
    case PauliEigen::XPlus: v << s, s; break;
    case PauliEigen::XMinus: v << s, -s; break;
    case PauliEigen::YPlus: v << s, s * i; break;
    case PauliEigen::YMinus: v << s, -s * i; break;
  }
  return v;
}

/// |bob> (x) |alice>.
Vector4c product_vector(const TomographySetting& s) {
  const Vector2c b = eigenvector(s.bob);
  const Vector2c a = eigenvector(s.alice);
  Vector4c v;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) v(2 * i + j) = b(i) * a(j);
  return v;
}

std::array<Matrix2c, 4> paulis() {
  std::array<Matrix2c, 4> p;
  const Complex i{0.0, 1.0};
  p[0] << 1.0, 0.0, 0.0, 1.0;
  p[1] << 0.0, 1.0, 1.0, 0.0;
  p[2] << 0.0, -i, i, 0.0;
  p[3] << 1.0, 0.0, 0.0, -1.0;
  return p;
}

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

const std::array<Matrix4c, 16>& pauli_products() {
  static const std::array<Matrix4c, 16> table = [] {
    std::array<Matrix4c, 16> t;
    const auto p = paulis();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) t[4 * i + j] = kron(p[i], p[j]);
    return t;
  }();
  return table;
}

double probability(const Matrix4c& rho, const Vector4c& v) {
  return v.dot(rho * v).real();
}

Matrix4c hermitize(const Matrix4c& m) { return 0.5 * (m + m.adjoint()); }

/// Projects a Hermitian matrix onto the PSD cone and renormalises the trace.
Matrix4c project_psd(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitize(m));
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.sum() <= 0.0) ev.setConstant(0.25);
  ev /= ev.sum();
  return hermitize(es.eigenvectors() * ev.cast<Complex>().asDiagonal() *
                   es.eigenvectors().adjoint());
}

struct PreparedRecord {
  Vector4c v;
  double n;
  double misses;
};

struct Problem {
  std::vector<PreparedRecord> rows;
  double total_shots = 0.0;

  explicit Problem(const std::vector<TomographyRecord>& records) {
    rows.reserve(records.size());
    for (const auto& r : records) {
      if (r.count > r.setting.shots) throw InvalidArgument("tomography count exceeds shots");
      rows.push_back({product_vector(r.setting), static_cast<double>(r.count),
                      static_cast<double>(r.setting.shots - r.count)});
      total_shots += static_cast<double>(r.setting.shots);
    }
    if (total_shots <= 0.0) throw IncompleteData("tomography records contain no shots");
  }

  double value(const Matrix4c& rho) const {
    double ll = 0.0;
    for (const auto& r : rows) {
      const double p = probability(rho, r.v);
      if (r.n > 0.0) {
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        ll += r.n * std::log(p);
      }
      if (r.misses > 0.0) {
        if (p >= 1.0) return -std::numeric_limits<double>::infinity();
        ll += r.misses * std::log1p(-p);
      }
    }
    return ll / total_shots;
  }

  /// dL/drho as a Hermitian matrix.
  Matrix4c derivative(const Matrix4c& rho) const {
    Matrix4c g = Matrix4c::Zero();
    for (const auto& r : rows) {
      const double p = std::clamp(probability(rho, r.v), 1e-300, 1.0 - 1e-16);
      double w = 0.0;
      if (r.n > 0.0) w += r.n / p;
      if (r.misses > 0.0) w -= r.misses / (1.0 - p);
      g += w * (r.v * r.v.adjoint());
    }
    return g / total_shots;
  }
};

constexpr int kParams = 16;
constexpr std::array<std::pair<int, int>, 6> kOffDiagonal{{{1, 0}, {2, 0}, {2, 1}, {3, 0},
                                                           {3, 1}, {3, 2}}};

Matrix4c triangular_from_parameters(const Eigen::VectorXd& x) {
  Matrix4c t = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = x(i);
  for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
    auto [i, j] = kOffDiagonal[k];
    t(i, j) = Complex{x(4 + 2 * static_cast<int>(k)), x(5 + 2 * static_cast<int>(k))};
  }
  return t;
}

}  // namespace

std::string to_string(PauliEigen e) {
  switch (e) {
    case PauliEigen::ZPlus: return "Z+";
    case PauliEigen::ZMinus: return "Z-";
    case PauliEigen::XPlus: return "X+";
    case PauliEigen::XMinus: return "X-";
    case PauliEigen::YPlus: return "Y+";
    case PauliEigen::YMinus: return "Y-";
  }
  return "?";
}

std::optional<PauliEigen> parse_pauli_eigen(const std::string& s) {
  for (PauliEigen e : kEigen)
    if (to_string(e) == s) return e;
  return std::nullopt;
}

std::vector<TomographySetting> projector_set(std::uint64_t shots_per_setting) {
  std::vector<TomographySetting> out;
  out.reserve(36);
  for (PauliEigen a : kEigen)
    for (PauliEigen b : kEigen) out.push_back({a, b, shots_per_setting});
  return out;
}

Matrix4c projector(const TomographySetting& s) {
  const Vector4c v = product_vector(s);
  return v * v.adjoint();
}

Eigen::MatrixXd measurement_matrix(const std::vector<TomographySetting>& settings) {
  const auto& sigma = pauli_products();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(settings.size()), 16);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const Matrix4c pk = projector(settings[k]);
    for (int m = 0; m < 16; ++m)
      a(static_cast<Eigen::Index>(k), m) = (pk * sigma[m]).trace().real() / 4.0;
  }
  return a;
}

int measurement_rank(const std::vector<TomographySetting>& settings) {
  if (settings.empty()) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(measurement_matrix(settings));
  const auto& sv = svd.singularValues();
  const double cut = 1e-10 * sv(0);
  return static_cast<int>((sv.array() > cut).count());
}

std::vector<TomographyRecord> simulate_counts(const DensityMatrix& rho,
                                              std::uint64_t shots_per_setting,
                                              std::uint64_t seed) {
  if (shots_per_setting < 1) throw InvalidArgument("shots_per_setting must be >= 1");
  std::vector<TomographyRecord> out;
  const auto settings = projector_set(shots_per_setting);
  out.reserve(settings.size());
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const double p = std::clamp(probability(rho.matrix(), product_vector(settings[k])), 0.0, 1.0);
    Rng rng = make_rng(seed, "tomography.counts", k);
    std::binomial_distribution<std::uint64_t> dist(shots_per_setting, p);
    out.push_back({settings[k], dist(rng)});
  }
  return out;
}

double log_likelihood(const Matrix4c& rho, const std::vector<TomographyRecord>& records) {
  return Problem(records).value(rho);
}

Matrix4c linear_inversion(const std::vector<TomographyRecord>& records) {
  std::vector<TomographySetting> settings;
  settings.reserve(records.size());
  Eigen::VectorXd f(static_cast<Eigen::Index>(records.size()));
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].setting.shots == 0) throw IncompleteData("tomography record with zero shots");
    settings.push_back(records[k].setting);
    f(static_cast<Eigen::Index>(k)) =
        static_cast<double>(records[k].count) / static_cast<double>(records[k].setting.shots);
  }
  if (measurement_rank(settings) < 16) {
    throw IncompleteData("tomography records are not informationally complete");
  }
  const Eigen::MatrixXd a = measurement_matrix(settings);
  const Eigen::VectorXd r = a.colPivHouseholderQr().solve(f);
  const auto& sigma = pauli_products();
  Matrix4c rho = Matrix4c::Zero();
  for (int m = 0; m < 16; ++m) rho += (r(m) / 4.0) * sigma[m];
  rho = hermitize(rho);
  const double tr = rho.trace().real();
  if (tr <= 0.0) throw IncompleteData("linear inversion produced a non-positive trace");
  return rho / tr;
}

Eigen::VectorXd cholesky_parameters(const Matrix4c& rho) {
  // rho = T^dag T with T lower triangular <=> rho = L L^dag with L = T^dag upper... use
  // the reversed-order Cholesky: factor J rho J = L L^dag with J the exchange matrix.
  Matrix4c j = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) j(i, 3 - i) = 1.0;
  const Matrix4c flipped = j * rho * j;
  Eigen::LLT<Matrix4c> llt(flipped);
  if (llt.info() != Eigen::Success) throw InvalidArgument("Cholesky start point is not PD");
  const Matrix4c l = llt.matrixL();
  // J rho J = L L^dag  =>  rho = (J L J)(J L J)^dag, and J L J is upper triangular, so
  // T = (J L J)^dag is lower triangular with rho = T^dag T.
  Matrix4c t = (j * l * j).adjoint();
  Eigen::VectorXd x(kParams);
  for (int i = 0; i < 4; ++i) x(i) = t(i, i).real();
  for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
    auto [r, c] = kOffDiagonal[k];
    x(4 + 2 * static_cast<int>(k)) = t(r, c).real();
    x(5 + 2 * static_cast<int>(k)) = t(r, c).imag();
  }
  return x;
}

Matrix4c rho_from_parameters(const Eigen::VectorXd& params) {
  const Matrix4c t = triangular_from_parameters(params);
  Matrix4c a = t.adjoint() * t;
  const double tr = a.trace().real();
  if (!(tr > 0.0)) throw InvalidArgument("Cholesky parameters describe a zero matrix");
  return hermitize(a / tr);
}

namespace {

Eigen::VectorXd gradient_impl(const Eigen::VectorXd& x, const Problem& problem) {
  const Matrix4c t = triangular_from_parameters(x);
  const Matrix4c a = t.adjoint() * t;
  const double tr = a.trace().real();
  const Matrix4c rho = a / tr;
  const Matrix4c g = problem.derivative(rho);
  const Complex mean = (g * rho).trace();
  const Matrix4c m = g - mean.real() * Matrix4c::Identity();
  const Matrix4c b = m * t.adjoint();
  Eigen::VectorXd grad(kParams);
  for (int i = 0; i < 4; ++i) grad(i) = 2.0 * b(i, i).real() / tr;
  for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
    auto [r, c] = kOffDiagonal[k];
    grad(4 + 2 * static_cast<int>(k)) = 2.0 * b(c, r).real() / tr;
    grad(5 + 2 * static_cast<int>(k)) = -2.0 * b(c, r).imag() / tr;
  }
  return grad;
}

}  // namespace

Eigen::VectorXd log_likelihood_gradient(const Eigen::VectorXd& params,
                                        const std::vector<TomographyRecord>& records) {
  return gradient_impl(params, Problem(records));
}

MleResult mle_reconstruct(const std::vector<TomographyRecord>& records,
                          const MleOptions& options) {
  const Problem problem(records);
  // Linear inversion checks informational completeness and gives the start point.
  Matrix4c start = project_psd(linear_inversion(records));
  start = 0.999 * start + 0.001 * Matrix4c::Identity() / 4.0;

  Eigen::VectorXd x = cholesky_parameters(start);
  double ll = problem.value(rho_from_parameters(x));
  Eigen::VectorXd g = gradient_impl(x, problem);

  constexpr int kMemory = 8;
  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;

  MleResult result{DensityMatrix(rho_from_parameters(x)), 0, ll, {}};
  if (options.record_trace) result.likelihood_trace.push_back(ll);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // Two-loop recursion on the negated objective; d is an ascent direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      const double rho_k = 1.0 / y_hist[k].dot(s_hist[k]);
      alpha[k] = rho_k * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    double gamma = 1.0 / std::max(g.norm(), 1e-12);
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd d = gamma * q;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double rho_k = 1.0 / y_hist[k].dot(s_hist[k]);
      const double beta = rho_k * y_hist[k].dot(d);
      d += s_hist[k] * (alpha[k] - beta);
    }
    double slope = g.dot(d);
    if (!(slope > 0.0)) {
      s_hist.clear();
      y_hist.clear();
      d = g / std::max(g.norm(), 1e-12);
      slope = g.dot(d);
    }

    double step = 1.0;
    double ll_new = ll;
    Eigen::VectorXd x_new = x;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      ll_new = problem.value(rho_from_parameters(x_new));
      if (std::isfinite(ll_new) && ll_new >= ll + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || ll_new < ll) {
      // No ascent possible along any tried step: stationary to working precision.
      result.iterations = iter;
      break;
    }

    const Eigen::VectorXd g_new = gradient_impl(x_new, problem);
    // Ascent on L is descent on -L: s = dx, y = -(g_new - g).
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g - g_new;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }

    const double improvement = ll_new - ll;
    x = x_new;
    g = g_new;
    ll = ll_new;
    result.iterations = iter;
    if (options.record_trace) result.likelihood_trace.push_back(ll);
    if (improvement < options.tolerance) {
      result.rho = DensityMatrix(rho_from_parameters(x));
      result.log_likelihood = ll;
      return result;
    }
    if (iter == options.max_iterations) {
      throw ConvergenceError("MLE did not converge within the iteration limit",
                             DensityMatrix(rho_from_parameters(x)), ll);
    }
  }
  result.rho = DensityMatrix(rho_from_parameters(x));
  result.log_likelihood = ll;
  return result;
}

double trace_distance(const Matrix4c& a, const Matrix4c& b) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitize(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double state_fidelity(const Matrix4c& a, const Matrix4c& b) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> ea(hermitize(a));
  const Eigen::Vector4d sa = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix4c root = ea.eigenvectors() * sa.cast<Complex>().asDiagonal() *
                        ea.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix4c> inner(hermitize(root * b * root),
                                                Eigen::EigenvaluesOnly);
  const double s = inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(s * s, 0.0, 1.0);
}

void write_records_csv(std::ostream& os, const std::vector<TomographyRecord>& records) {
  os << "alice_projector,bob_projector,shots,count\n";
  for (const auto& r : records) {
    os << to_string(r.setting.alice) << ',' << to_string(r.setting.bob) << ','
       << r.setting.shots << ',' << r.count << '\n';
  }
}

std::vector<TomographyRecord> read_records_csv(std::istream& is) {
  std::vector<TomographyRecord> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (line.rfind("alice_projector", 0) != 0) {
    throw InvalidArgument("tomography CSV must start with the header row");
  }
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, shots, count;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, shots, ',') ||
        !std::getline(ss, count, ',')) {
      throw InvalidArgument("malformed tomography CSV line " + std::to_string(line_no));
    }
    auto pa = parse_pauli_eigen(a);
    auto pb = parse_pauli_eigen(b);
    if (!pa || !pb) throw InvalidArgument("unknown projector on line " + std::to_string(line_no));
    TomographyRecord r{{*pa, *pb, std::stoull(shots)}, std::stoull(count)};
    if (r.count > r.setting.shots) {
      throw InvalidArgument("count exceeds shots on line " + std::to_string(line_no));
    }
    out.push_back(r);
  }
  return out;
}

void write_density_csv(std::ostream& os, const Matrix4c& rho) {
  std::ostringstream cell;
  cell.precision(17);
  auto block = [&](const char* name, auto part) {
    os << name << ",00,01,10,11\n";
    static constexpr const char* kLabels[] = {"00", "01", "10", "11"};
    for (int i = 0; i < 4; ++i) {
      os << kLabels[i];
      for (int j = 0; j < 4; ++j) {
        cell.str({});
        cell << part(rho(i, j));
        os << ',' << cell.str();
      }
      os << '\n';
    }
  };
  block("real", [](Complex c) { return c.real(); });
  block("imag", [](Complex c) { return c.imag(); });
}

}  // namespace fbqkd::tomography
