#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nslab/meanfield.hpp"

using namespace nslab;

namespace {

Eigen::VectorXcd bump_orbital(const Lattice& lat, double width = 1.0, int center = 1) {
  Eigen::VectorXcd chi(lat.size());
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    double r = lat.min_image_distance(i, center);
    chi[i] = std::exp(-r * r / (2.0 * width * width));
  }
  chi /= chi.norm();
  return chi;
}

} // namespace

TEST_CASE("product embedding: frozen examples") {
  Lattice two(1, 2, 1.0);
  auto b22 = build_basis(two, 2);
  Eigen::VectorXcd chi(2);
  chi << M_SQRT1_2, M_SQRT1_2;
  FockVector v = product_embed(chi, 2, b22);
  CHECK(std::abs(v.amplitudes[0] - 0.5) < 1e-15);          // (2,0)
  CHECK(std::abs(v.amplitudes[1] - M_SQRT1_2) < 1e-15);    // (1,1)
  CHECK(std::abs(v.amplitudes[2] - 0.5) < 1e-15);          // (0,2)

  // N=1: amplitudes are the orbital itself
  Lattice lat(1, 5, 1.0);
  auto b1 = build_basis(lat, 1);
  Eigen::VectorXcd orb = bump_orbital(lat);
  FockVector v1 = product_embed(orb, 1, b1);
  CHECK((v1.amplitudes - orb).norm() < 1e-14);

  // concentrated orbital: single occupation vector (N,0,...,0)
  Eigen::VectorXcd point = Eigen::VectorXcd::Zero(5);
  point[0] = 1.0;
  auto b4 = build_basis(lat, 4);
  FockVector vp = product_embed(point, 4, b4);
  std::int32_t t[4] = {0, 0, 0, 0};
  CHECK(std::abs(std::abs(vp.amplitudes[b4->index_of(t)]) - 1.0) < 1e-14);
  CHECK(vp.amplitudes.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-13));

  Lattice other(1, 4, 1.0);
  CHECK_THROWS_AS((void)product_embed(orb, 2, build_basis(other, 2)), std::invalid_argument);
}

TEST_CASE("one-body rdm: rank one on product states, trace one, spectrum in [0,1]") {
  Lattice lat(1, 4, 1.0);
  Eigen::VectorXcd chi = bump_orbital(lat, 1.3, 2);
  for (int N : {1, 2, 4}) {
    auto basis = build_basis(lat, N);
    FockVector v = product_embed(chi, N, basis);
    Eigen::MatrixXcd rho = one_body_rdm(v);
    CHECK((rho - chi * chi.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-13);
  }
  // complex orbital: the convention must still give chi chi^dag
  Eigen::VectorXcd cchi = bump_orbital(lat, 1.3, 2);
  for (std::int64_t i = 0; i < lat.size(); ++i)
    cchi[i] *= std::exp(std::complex<double>(0, 0.7 * double(i)));
  cchi /= cchi.norm();
  FockVector vc = product_embed(cchi, 3, build_basis(lat, 3));
  CHECK((one_body_rdm(vc) - cchi * cchi.adjoint()).cwiseAbs().maxCoeff() < 1e-13);

  // correlated state: still a density matrix
  auto basis = build_basis(lat, 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist;
  FockVector v(basis);
  for (std::int64_t k = 0; k < basis->dimension(); ++k)
    v.amplitudes[k] = std::complex<double>(dist(rng), dist(rng));
  v.normalize();
  Eigen::MatrixXcd rho = one_body_rdm(v);
  CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  CHECK(es.eigenvalues().minCoeff() > -1e-13);
  CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-13);
  CHECK(std::abs(rho.trace().real() - 1.0) < 1e-13);

  FockVector vac(build_basis(lat, 0));
  vac.amplitudes[0] = 1.0;
  CHECK_THROWS_AS((void)one_body_rdm(vac), std::invalid_argument);
}

TEST_CASE("lattice hartree: N=1 and strength=0 reduce to the exact hopping flow") {
  Lattice lat(1, 6, 0.8);
  CouplingSpec grav(CouplingKind::GravityAttractive, 0.4, 1.6, 1.0);
  Eigen::VectorXcd chi = bump_orbital(lat, 1.0, 3);
  const double t = 2.0, dt = 1e-3;

  auto basis = build_basis(lat, 1);
  auto H = build_hamiltonian(basis, CouplingSpec(grav.kind, 0.0, grav.sigma, grav.mass));
  FockVector v0(basis);
  v0.amplitudes = chi;
  FockVector ref = evolve_exact(H, v0, t);

  // N=1: the (N-1) factor removes the self-interaction entirely
  auto traj1 = hartree_evolve_lattice(chi, 1, lat, grav, t, dt);
  CHECK((traj1.back() - ref.amplitudes).norm() < 5e-12);

  // strength = 0 at N = 3: same linear flow
  auto traj0 =
      hartree_evolve_lattice(chi, 3, lat, CouplingSpec(grav.kind, 0.0, grav.sigma, grav.mass),
                             t, dt);
  CHECK((traj0.back() - ref.amplitudes).norm() < 5e-12);
}

TEST_CASE("stationary hartree orbital stays put in real time") {
  Lattice lat(1, 6, 0.8);
  CouplingSpec grav(CouplingKind::GravityAttractive, 0.6, 1.6, 1.0);
  const int N = 4;
  Eigen::VectorXcd chi0 = bump_orbital(lat, 1.0, 3);
  Eigen::VectorXcd gs = lattice_hartree_ground_state(chi0, N, lat, grav, 1e-13);
  auto traj = hartree_evolve_lattice(gs, N, lat, grav, 100 * 0.01, 0.01);
  Eigen::VectorXd rho0 = gs.cwiseAbs2();
  double drift = std::sqrt((traj.back().cwiseAbs2() - rho0).squaredNorm() / rho0.squaredNorm());
  CHECK(drift < 1e-6);
  // norm preserved through the run
  CHECK(std::abs(traj.back().norm() - 1.0) < 1e-12);
}

TEST_CASE("convergence experiment: exact embedding at t=0, free case, N-trend") {
  Lattice lat(1, 4, 1.0);
  Eigen::VectorXcd chi = bump_orbital(lat, 0.9, 1);
  std::vector<int> ns{2, 3, 4, 5};

  auto at_zero = convergence_experiment(lat, ns, 0.8, 2.0, 1.0, chi, 0.0, 0.01);
  for (auto& r : at_zero.rows) CHECK(r.trace_distance < 1e-12);

  auto free_run = convergence_experiment(lat, ns, 0.0, 2.0, 1.0, chi, 1.5, 0.005);
  for (auto& r : free_run.rows) CHECK(r.trace_distance < 1e-10);

  auto run = convergence_experiment(lat, ns, 0.8, 2.0, 1.0, chi, 1.5, 0.002);
  for (size_t i = 1; i < run.rows.size(); ++i)
    CHECK(run.rows[i].trace_distance < run.rows[i - 1].trace_distance);
  CHECK(run.spearman_rho < 0);
  CHECK(run.fitted_exponent < 0);
  for (auto& r : run.rows) {
    CHECK(r.fidelity > 0.5);
    CHECK(r.fidelity <= 1.0 + 1e-12);
  }
}

TEST_CASE("spearman and fit helpers") {
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0));
  auto [slope, icpt] = linear_fit({0, 1, 2}, {1, 3, 5});
  CHECK(slope == doctest::Approx(2.0));
  CHECK(icpt == doctest::Approx(1.0));
}
