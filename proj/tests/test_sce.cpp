#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nslab/meanfield.hpp"
#include "nslab/sce.hpp"

using namespace nslab;

namespace {

Eigen::VectorXcd lump(const Lattice& lat, double width, int center) {
  Eigen::VectorXcd chi(lat.size());
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    double r = lat.min_image_distance(i, center);
    chi[i] = std::exp(-r * r / (2.0 * width * width));
  }
  chi /= chi.norm();
  return chi;
}

} // namespace

TEST_CASE("sce potential: vacuum, independent oracle, superposition") {
  Lattice lat(3, 4, 1.0);
  const double sigma = 2.0, G = 1.5, mass = 1.1;

  FockVector vac(build_basis(lat, 0));
  vac.amplitudes[0] = 1.0;
  CHECK(sce_potential(vac, sigma, G, mass).cwiseAbs().maxCoeff() == 0.0);

  // one-particle orbital: independently coded double sum over the smeared
  // density (the paper's <mu_reg> = m (smeared |phi|^2))
  auto b1 = build_basis(lat, 1);
  FockVector v(b1);
  v.amplitudes = lump(lat, 1.2, 5);
  Eigen::VectorXd got = sce_potential(v, sigma, G, mass);
  const auto M = lat.size();
  const double gnorm = std::pow(2.0 * M_PI * sigma * sigma, -1.5);
  const double self_k = PoissonSolver::self_cell_kernel(lat.spacing);
  for (std::int64_t i = 0; i < M; ++i) {
    double acc = 0;
    for (std::int64_t j = 0; j < M; ++j) {
      double mu_j = 0;
      for (std::int64_t l = 0; l < M; ++l) {
        double r = lat.min_image_distance(j, l);
        mu_j += gnorm * std::exp(-r * r / (2 * sigma * sigma)) * std::norm(v.amplitudes[l]);
      }
      double d = lat.min_image_distance(i, j);
      acc += (d > 0 ? 1.0 / d : self_k) * mu_j;
    }
    CHECK(got[i] == doctest::Approx(-G * mass * acc).epsilon(1e-12));
  }
  CHECK(got.maxCoeff() < 0.0); // attractive everywhere

  // two far-separated lumps in an N=2 product state: potentials add
  Lattice line(1, 64, 1.0);
  auto b2 = build_basis(line, 2);
  Eigen::VectorXcd l1 = lump(line, 2.0, 16), l2 = lump(line, 2.0, 48);
  auto bb1 = build_basis(line, 1);
  FockVector u1(bb1), u2(bb1);
  u1.amplitudes = l1;
  u2.amplitudes = l2;
  FockVector pair(b2);
  // product of two distinguishable-lump orbitals, symmetrized
  for (std::int64_t k = 0; k < b2->dimension(); ++k) {
    auto p = b2->positions(k);
    std::complex<double> amp = l1[p[0]] * l2[p[1]] + l1[p[1]] * l2[p[0]];
    pair.amplitudes[k] = p[0] == p[1] ? amp / 2.0 : amp * M_SQRT1_2;
  }
  pair.normalize();
  Eigen::VectorXd vp = sce_potential(pair, 2.0, G, mass);
  Eigen::VectorXd vs = sce_potential(u1, 2.0, G, mass) + sce_potential(u2, 2.0, G, mass);
  CHECK((vp - vs).cwiseAbs().maxCoeff() < 1e-10 * vs.cwiseAbs().maxCoeff());
}

TEST_CASE("misstep: free coupling gives identical trajectories") {
  Lattice lat(1, 32, 1.0);
  CouplingSpec free_c(CouplingKind::GravityAttractive, 0.0, 2.0, 1.0);
  auto rep = misstep_compare(lump(lat, 2.0, 16), lat, free_c, 3.0, 0.01, 10);
  for (auto& row : rep.rows) {
    CHECK(row.l2_distance < 1e-12);
    CHECK(std::abs(row.norm_a - 1.0) < 1e-12);
    CHECK(std::abs(row.norm_b - 1.0) < 1e-12);
  }
}

TEST_CASE("misstep: mean-field-sourced mode equals the lattice NSE solver") {
  Lattice lat(1, 32, 1.0);
  CouplingSpec grav(CouplingKind::GravityAttractive, 0.35, 2.0, 1.0);
  Eigen::VectorXcd chi0 = lump(lat, 2.0, 16);
  const double t = 3.0, dt = 0.01;
  auto rep = misstep_compare(chi0, lat, grav, t, dt, 50);
  // hartree flow with (N-1) strength equal to the misstep coupling
  auto traj = hartree_evolve_lattice(chi0, 2, lat, grav, t, dt, 50);
  REQUIRE(traj.size() == rep.mean_field_trajectory.size());
  for (size_t i = 0; i < traj.size(); ++i)
    CHECK((traj[i] - rep.mean_field_trajectory[i]).norm() < 1e-10);
}

TEST_CASE("misstep: exact-field density is coupling independent, distance grows") {
  Lattice lat(1, 32, 1.0);
  Eigen::VectorXcd chi0 = lump(lat, 2.0, 16);
  const double t = 6.0, dt = 0.01;
  CouplingSpec weak(CouplingKind::GravityAttractive, 0.0, 2.0, 1.0);
  CouplingSpec strong(CouplingKind::GravityAttractive, 0.6, 2.0, 1.0);
  auto r0 = misstep_compare(chi0, lat, weak, t, dt, 100);
  auto r1 = misstep_compare(chi0, lat, strong, t, dt, 100);
  REQUIRE(r0.exact_field_trajectory.size() == r1.exact_field_trajectory.size());
  for (size_t i = 0; i < r0.exact_field_trajectory.size(); ++i) {
    Eigen::VectorXd d0 = r0.exact_field_trajectory[i].cwiseAbs2();
    Eigen::VectorXd d1 = r1.exact_field_trajectory[i].cwiseAbs2();
    CHECK((d0 - d1).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(r1.rows.front().l2_distance < 1e-14);
  CHECK(r1.max_distance > 0.01);
  // distance grows from zero
  CHECK(r1.rows.back().l2_distance > r1.rows[1].l2_distance * 0.5);
  CHECK(r1.rows[1].l2_distance > 0.0);

  // frozen-source variant differs from the self-consistent one
  auto rf = misstep_compare(chi0, lat, strong, t, dt, 100, /*resource_each_step=*/false);
  CHECK((rf.mean_field_trajectory.back() - r1.mean_field_trajectory.back()).norm() > 1e-6);
}
