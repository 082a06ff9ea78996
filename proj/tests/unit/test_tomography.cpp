#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fbqkd/error.hpp"
#include "fbqkd/qstate.hpp"
#include "fbqkd/tomography.hpp"

using namespace fbqkd;
using namespace fbqkd::tomography;
using qstate::Complex;
using std::numbers::pi;

namespace {

// Kets written out independently of the library.
qstate::Vector2c ket(PauliEigen e) {
  const double s = std::sqrt(0.5);
  qstate::Vector2c v;
  switch (e) {
    case PauliEigen::ZPlus: v << 1, 0; break;
    case PauliEigen::ZMinus: v << 0, 1; break;
    case PauliEigen::XPlus: v << s, s; break;
    case PauliEigen::XMinus: v << s, -s; break;
    case PauliEigen::YPlus: v << s, Complex(0, s); break;
    case PauliEigen::YMinus: v << s, Complex(0, -s); break;
  }
  return v;
}

double prob_by_hand(const Matrix4c& rho, PauliEigen alice, PauliEigen bob) {
  const auto b = ket(bob), a = ket(alice);
  qstate::Vector4c v;
  v << b(0) * a(0), b(0) * a(1), b(1) * a(0), b(1) * a(1);
  return (v.adjoint() * rho * v)(0, 0).real();
}

// Frequencies at the infinite-shot limit, expressed with a huge shot count.
std::vector<TomographyRecord> exact_records(const Matrix4c& rho) {
  std::vector<TomographyRecord> out;
  const std::uint64_t shots = 1'000'000'000'000ULL;
  for (const auto& s : projector_set(shots)) {
    const double p = std::max(0.0, prob_by_hand(rho, s.alice, s.bob));
    out.push_back({s, static_cast<std::uint64_t>(std::llround(p * static_cast<double>(shots)))});
  }
  return out;
}

Matrix4c random_werner(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return qstate::noisy_state(0.5 + 0.5 * u(rng), 2 * pi * u(rng)).matrix();
}

}  // namespace

TEST_CASE("projector set") {
  const auto set = projector_set();
  CHECK(set.size() == 36);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j) CHECK_FALSE(set[i] == set[j]);
  CHECK(measurement_rank(set) == 16);

  std::vector<TomographySetting> zz;
  for (const auto& s : set) {
    const bool z = (s.alice == PauliEigen::ZPlus || s.alice == PauliEigen::ZMinus) &&
                   (s.bob == PauliEigen::ZPlus || s.bob == PauliEigen::ZMinus);
    if (z) zz.push_back(s);
  }
  CHECK(zz.size() == 4);
  CHECK(measurement_rank(zz) < 16);
  const auto rho = qstate::noisy_state(0.7, 1.3).matrix();
  double total = 0.0;
  for (const auto& s : zz) total += (rho * projector(s)).trace().real();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("projectors match hand-built kets") {
  std::mt19937_64 rng(1);
  const auto rho = random_werner(rng);
  for (const auto& s : projector_set()) {
    CHECK((rho * projector(s)).trace().real() ==
          doctest::Approx(prob_by_hand(rho, s.alice, s.bob)).epsilon(1e-14));
  }
}

TEST_CASE("simulate_counts") {
  const auto psi = qstate::bell_state(0.0);
  const auto rec = simulate_counts(psi, 1000, 5);
  for (const auto& r : rec) {
    CHECK(r.count <= r.setting.shots);
    if (r.setting.alice == PauliEigen::ZPlus && r.setting.bob == PauliEigen::ZMinus) {
      CHECK(r.count == 0);
    }
  }
  CHECK(simulate_counts(psi, 1000, 5) == rec);
  CHECK_FALSE(simulate_counts(psi, 1000, 6) == rec);

  // I/4: every product projector has probability 1/4
  const auto mixed = simulate_counts(qstate::noisy_state(0.0, 0.0), 40000, 2);
  for (const auto& r : mixed) {
    const double sd = std::sqrt(40000 * 0.25 * 0.75);
    CHECK(std::abs(static_cast<double>(r.count) - 10000.0) < 5 * sd);
  }
  CHECK_THROWS_AS(simulate_counts(psi, 0, 1), InvalidArgument);
}

TEST_CASE("Cholesky parameterisation round trip") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const auto rho = random_werner(rng);
    const auto back = rho_from_parameters(cholesky_parameters(rho));
    CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-10);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Random(16);
  const auto r = rho_from_parameters(x);
  CHECK_NOTHROW(qstate::DensityMatrix{r});
}

TEST_CASE("analytic gradient matches finite differences") {
  const auto rec = simulate_counts(qstate::noisy_state(0.8, 0.4), 5000, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(16);
    for (int i = 0; i < 16; ++i) x(i) = n01(rng);
    const auto g = log_likelihood_gradient(x, rec);
    for (int i = 0; i < 16; ++i) {
      const double h = 1e-6;
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd =
          (log_likelihood(rho_from_parameters(xp), rec) - log_likelihood(rho_from_parameters(xm), rec)) /
          (2 * h);
      CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("MLE recovers a pure Bell state from exact frequencies") {
  const auto r = mle_reconstruct(exact_records(qstate::bell_state(0.0).matrix()));
  CHECK(qstate::fidelity_to_pure(r.rho, qstate::psi_plus()) >= 0.999);
}

TEST_CASE("MLE self-consistency at 1e6 shots") {
  const auto truth = qstate::noisy_state(0.92, 0.0);
  const auto r = mle_reconstruct(simulate_counts(truth, 1000000, 11));
  CHECK(state_fidelity(r.rho.matrix(), truth.matrix()) >= 0.99);
}

TEST_CASE("MLE reads back the off-diagonal phase") {
  const auto r = mle_reconstruct(simulate_counts(qstate::bell_state(pi / 2), 1000000, 12));
  CHECK(std::abs(std::arg(r.rho(3, 0)) - pi / 2) < 0.05);
}

TEST_CASE("property: MLE output is a density matrix and the likelihood never drops") {
  std::mt19937_64 rng(21);
  MleOptions opt;
  opt.record_trace = true;
  for (int trial = 0; trial < 8; ++trial) {
    const std::uint64_t shots = trial % 2 ? 10 : 5000;
    const auto truth = random_werner(rng);
    const auto rec = simulate_counts(qstate::DensityMatrix(truth), shots, 100 + trial);
    const auto r = mle_reconstruct(rec, opt);
    CHECK_NOTHROW(qstate::validate_density(r.rho.matrix()));
    REQUIRE(r.likelihood_trace.size() >= 1);
    for (std::size_t i = 1; i < r.likelihood_trace.size(); ++i) {
      CHECK(r.likelihood_trace[i] >= r.likelihood_trace[i - 1]);
    }
    // the true state is feasible, so the maximum cannot lie below it
    CHECK(r.log_likelihood >= log_likelihood(truth, rec) - 1e-9);
  }
}

TEST_CASE("linear inversion agrees with MLE at 1e6 shots") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    const auto rec = simulate_counts(qstate::DensityMatrix(random_werner(rng)), 1000000, 200 + trial);
    const auto lin = linear_inversion(rec);
    const auto mle = mle_reconstruct(rec);
    CHECK(trace_distance(lin, mle.rho.matrix()) < 0.02);
  }
}

TEST_CASE("incomplete records are rejected") {
  auto rec = simulate_counts(qstate::bell_state(0.0), 100, 1);
  rec.resize(9);
  CHECK_THROWS_AS(linear_inversion(rec), IncompleteData);
  CHECK_THROWS_AS(mle_reconstruct(rec), IncompleteData);
}

TEST_CASE("iteration cap raises ConvergenceError with the last iterate") {
  MleOptions opt;
  opt.max_iterations = 1;
  const auto rec = simulate_counts(qstate::noisy_state(0.9, 0.2), 100000, 2);
  try {
    mle_reconstruct(rec, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK_NOTHROW(qstate::validate_density(e.last_iterate.matrix()));
    CHECK(std::isfinite(e.last_log_likelihood));
  }
}

TEST_CASE("trace distance and state fidelity") {
  const auto a = qstate::bell_state(0.0).matrix();
  const auto b = qstate::bell_state(pi).matrix();
  CHECK(trace_distance(a, a) == doctest::Approx(0.0));
  CHECK(trace_distance(a, b) == doctest::Approx(1.0));
  CHECK(state_fidelity(a, b) == doctest::Approx(0.0).epsilon(1e-9));
  const auto w = qstate::noisy_state(0.9213, 0.0).matrix();
  CHECK(state_fidelity(w, a) == doctest::Approx(0.9410).epsilon(1e-4));
}

TEST_CASE("CSV formats") {
  const auto rec = simulate_counts(qstate::noisy_state(0.9, 0.0), 50, 3);
  std::stringstream ss;
  write_records_csv(ss, rec);
  CHECK(ss.str().rfind("alice_projector,bob_projector,shots,count\n", 0) == 0);
  CHECK(read_records_csv(ss) == rec);

  std::stringstream bad("alice_projector,bob_projector,shots,count\nZ+,Q-,5,1\n");
  CHECK_THROWS_AS(read_records_csv(bad), InvalidArgument);

  std::stringstream d;
  write_density_csv(d, qstate::bell_state(pi / 2).matrix());
  const std::string s = d.str();
  CHECK(s.rfind("real,00,01,10,11\n", 0) == 0);
  CHECK(s.find("imag,00,01,10,11\n") != std::string::npos);
}
