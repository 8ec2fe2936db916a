#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nslab/kernels.hpp"
#include "nslab/poisson.hpp"

using namespace nslab;

namespace {

// Radial quadrature oracle for the smeared Newton kernel: for a normalized
// spherical Gaussian of width s, (gauss_s * 1/r)(r) reduces to
//   (1/r) int_0^r 4 pi u^2 g(u) du + int_r^inf 4 pi u g(u) du.
// Composite Simpson in long double; independent of f_sigma's Erf route.
long double smeared_kernel_quadrature(long double r, long double s) {
  const long double pi = 3.14159265358979323846264338327950288L;
  auto g = [&](long double u) {
    return powl(2.0L * pi * s * s, -1.5L) * expl(-u * u / (2.0L * s * s));
  };
  const int n = 40000;
  const long double cut = r + 14.0L * s;
  auto simpson = [&](auto f, long double a, long double b) {
    long double h = (b - a) / n, acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0L : 2.0L);
    return acc * h / 3.0L;
  };
  long double inner =
      r > 0 ? simpson([&](long double u) { return 4.0L * pi * u * u * g(u); }, 0.0L, r) / r
            : 0.0L;
  long double outer = simpson([&](long double u) { return 4.0L * pi * u * g(u); }, r, cut);
  return inner + outer;
}

} // namespace

TEST_CASE("f_sigma matches the radial quadrature oracle") {
  // F_sigma = gauss_{sigma*sqrt(2)} * 1/r (the two density smearings compose).
  const double sigma = 0.7;
  const long double s = sigma * std::sqrt(2.0L);
  for (double r : {0.0, 0.2, 0.7, 1.4, 3.5, 7.0}) {
    long double oracle = smeared_kernel_quadrature(r, s);
    CHECK(f_sigma(r, sigma) == doctest::Approx(double(oracle)).epsilon(1e-9));
  }
}

TEST_CASE("f_sigma limits and bounds") {
  // sigma -> 0 saturation at fixed r
  CHECK(std::abs(f_sigma(1.0, 0.01) - 1.0) < 1e-12);
  // r -> 0 limit equals 1/(sigma sqrt(pi)); quadrature agrees above
  for (double sigma : {0.1, 1.0, 4.0})
    CHECK(f_sigma(0.0, sigma) == doctest::Approx(1.0 / (sigma * std::sqrt(M_PI))).epsilon(1e-10));
  // series continuation is continuous across the r/sigma = 1e-3 switch
  const double sigma = 2.0, rs = 1e-3 * sigma;
  CHECK(f_sigma(rs * (1 - 1e-9), sigma) ==
        doctest::Approx(f_sigma(rs * (1 + 1e-9), sigma)).epsilon(1e-13));
  // 0 < F(r) <= 1/r and monotone non-increasing, scanned over r/sigma in (0,100]
  double prev = f_sigma(0.0, 1.0);
  for (int i = 1; i <= 10000; ++i) {
    double r = 100.0 * i / 10000.0;
    double f = f_sigma(r, 1.0);
    CHECK(f > 0);
    CHECK(f <= 1.0 / r);
    CHECK(f <= prev + 1e-15);
    prev = f;
  }
  CHECK_THROWS_AS((void)f_sigma(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("delta_m signs, scaling, and failure modes") {
  auto grav = CouplingSpec::gravity(0.5, 2.0, 0.3); // strength = G m^2 = 2
  auto coul = CouplingSpec::coulomb(4.0 * M_PI, 1.0, 0.3);
  CHECK(delta_m(grav) < 0);
  CHECK(delta_m(coul) > 0);
  CHECK(delta_m(grav) == doctest::Approx(-2.0 / (0.3 * std::sqrt(M_PI))).epsilon(1e-14));
  // Coulomb: strength = e^2/(4 pi), so delta_m = e^2/(4 pi^{3/2} sigma)
  CHECK(delta_m(coul) ==
        doctest::Approx(4.0 * M_PI / (4.0 * std::pow(M_PI, 1.5) * 0.3)).epsilon(1e-14));
  auto grav_half = grav;
  grav_half.sigma = 0.15;
  CHECK(std::abs(delta_m(grav_half)) == doctest::Approx(2.0 * std::abs(delta_m(grav))));
  auto bad = grav;
  bad.sigma = 0.0;
  CHECK_THROWS_AS((void)delta_m(bad), std::invalid_argument);
  CouplingSpec ext(CouplingKind::CoulombExternalAttractive, 1.0, 0.3, 1.0);
  CHECK_THROWS_AS((void)delta_m(ext), std::invalid_argument);
}

TEST_CASE("delta_m agrees with the smeared lattice self-energy sum") {
  // |delta_m| = G m^2 (gauss_sigma * gauss_sigma * 1/r)(0); evaluate the outer
  // convolution as a 64^3 lattice sum with the inner one analytic.
  const double a = 1.0, sigma = 4.0 * a, G = 1.0, m = 1.0;
  Grid grid(3, 64, a);
  auto kern = gaussian_smearing(sigma, grid);
  const double s_in = sigma * std::sqrt(2.0);
  double acc = 0;
  std::int64_t idx = 0;
  for (int x = 0; x < grid.n; ++x)
    for (int y = 0; y < grid.n; ++y)
      for (int z = 0; z < grid.n; ++z, ++idx) {
        double r = std::sqrt(grid.coord(x) * grid.coord(x) + grid.coord(y) * grid.coord(y) +
                             grid.coord(z) * grid.coord(z));
        // inner convolution gauss_sigma * 1/r = Erf(r/s_in)/r, s_in = sigma*sqrt(2)
        double smeared_inv_r = r > 0 ? std::erf(r / s_in) / r : 2.0 / (s_in * std::sqrt(M_PI));
        acc += kern.samples[idx] * smeared_inv_r;
      }
  double lattice = G * m * m * acc * grid.cell_volume();
  auto grav = CouplingSpec::gravity(G, m, sigma);
  CHECK(lattice == doctest::Approx(std::abs(delta_m(grav))).epsilon(0.01));
}

TEST_CASE("gaussian smearing samples and normalization") {
  Grid grid(3, 64, 1.0);
  auto k = gaussian_smearing(4.0, grid);
  CHECK(k.samples[0] == doctest::Approx(std::pow(2.0 * M_PI * 16.0, -1.5)).epsilon(1e-14));
  CHECK((k.samples.array() >= 0).all());
  CHECK_FALSE(k.under_resolved);
  CHECK(k.samples.sum() * grid.cell_volume() == doctest::Approx(1.0).epsilon(1e-6));

  auto tight = gaussian_smearing(1.5, grid); // < 2 spacings: flagged, not fatal
  CHECK(tight.under_resolved);

  Grid line(1, 256, 0.5);
  auto k1 = gaussian_smearing(3.0 * 0.5, line);
  CHECK(k1.samples.sum() * line.cell_volume() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(k1.samples[0] == doctest::Approx(std::pow(2.0 * M_PI * 2.25, -0.5)).epsilon(1e-14));

  CHECK_THROWS_AS((void)gaussian_smearing(0.0, grid), std::invalid_argument);
}

TEST_CASE("smearing a constant field returns the constant") {
  Grid grid(3, 32, 1.0);
  auto k = gaussian_smearing(3.0, grid);
  Eigen::VectorXd field = Eigen::VectorXd::Constant(grid.size(), 2.5);
  Eigen::VectorXd out = convolve_periodic(field, k);
  CHECK((out.array() - 2.5).abs().maxCoeff() < 2.5 * 2e-6);
}

TEST_CASE("poisson: zero density gives zero potential") {
  Grid grid(3, 16, 1.0);
  for (auto bc : {PoissonBC::Isolated, PoissonBC::PeriodicZeroMean}) {
    auto v = poisson_solve(Eigen::VectorXd::Zero(grid.size()), grid, 1.0, bc);
    CHECK(v.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("poisson isolated: point mass matches -G/R and the direct sum") {
  const double G = 2.0, a = 1.0;
  Grid grid(3, 32, a);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(grid.size());
  rho[0] = 1.0 / grid.cell_volume(); // unit mass at the origin site
  PoissonSolver solver(grid, PoissonBC::Isolated);
  auto v = solver.solve(rho, G);
  for (int R = 4; R <= grid.n / 4; ++R) {
    double got = v[std::int64_t(0) * grid.n * grid.n + 0 * grid.n + R]; // along z
    double direct = -G / R; // one-term direct sum for a point source
    CHECK(got == doctest::Approx(direct).epsilon(0.01));
  }
}

TEST_CASE("poisson isolated: gaussian blob matches the Erf closed form") {
  // blob mid-box: the isolated solve treats [0,L)^3 as free space
  const double G = 1.0, mass = 3.0, s = 2.0;
  Grid grid(3, 32, 1.0);
  const int c = grid.n / 2;
  Eigen::VectorXd rho(grid.size());
  std::int64_t idx = 0;
  for (int x = 0; x < grid.n; ++x)
    for (int y = 0; y < grid.n; ++y)
      for (int z = 0; z < grid.n; ++z, ++idx) {
        double dx = (x - c) * grid.spacing, dy = (y - c) * grid.spacing,
               dz = (z - c) * grid.spacing;
        double r2 = dx * dx + dy * dy + dz * dz;
        rho[idx] = mass * std::pow(2.0 * M_PI * s * s, -1.5) * std::exp(-r2 / (2.0 * s * s));
      }
  auto v = PoissonSolver(grid, PoissonBC::Isolated).solve(rho, G);
  // closed form -G m Erf(r/(s sqrt(2)))/r, itself spot-checked against the
  // quadrature oracle
  long double quad = smeared_kernel_quadrature(4.0L, (long double)s);
  CHECK(double(quad) == doctest::Approx(std::erf(4.0 / (s * std::sqrt(2.0))) / 4.0).epsilon(1e-9));
  for (int R : {3, 4, 6, 8}) {
    double got = v[(std::int64_t(c + R) * grid.n + c) * grid.n + c];
    double want = -G * mass * std::erf(R / (s * std::sqrt(2.0))) / R;
    CHECK(got == doctest::Approx(want).epsilon(0.01));
  }
}

TEST_CASE("poisson periodic: plane-wave density inverts exactly") {
  const double G = 0.7;
  Grid grid(1, 128, 0.25);
  const double k = grid.wavenumber(3);
  Eigen::VectorXd rho(grid.size());
  for (int i = 0; i < grid.n; ++i) rho[i] = std::sin(k * i * grid.spacing);
  auto v = poisson_solve(rho, grid, G, PoissonBC::PeriodicZeroMean);
  for (int i = 0; i < grid.n; ++i)
    CHECK(v[i] == doctest::Approx(-4.0 * M_PI * G / (k * k) * rho[i]).epsilon(1e-12));

  Grid grid3(3, 16, 0.5);
  const double k3 = grid3.wavenumber(2);
  Eigen::VectorXd rho3(grid3.size());
  std::int64_t idx = 0;
  for (int x = 0; x < grid3.n; ++x)
    for (int y = 0; y < grid3.n; ++y)
      for (int z = 0; z < grid3.n; ++z, ++idx) rho3[idx] = std::cos(k3 * z * grid3.spacing);
  auto v3 = poisson_solve(rho3, grid3, G, PoissonBC::PeriodicZeroMean);
  idx = 0;
  for (int x = 0; x < grid3.n; ++x)
    for (int y = 0; y < grid3.n; ++y)
      for (int z = 0; z < grid3.n; ++z, ++idx)
        CHECK(v3[idx] == doctest::Approx(-4.0 * M_PI * G / (k3 * k3) * rho3[idx]).epsilon(1e-12));
}

TEST_CASE("poisson is linear in the density") {
  Grid grid(3, 16, 1.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  Eigen::VectorXd r1(grid.size()), r2(grid.size());
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    r1[i] = dist(rng);
    r2[i] = dist(rng);
  }
  const double aa = 1.7, bb = -0.4;
  for (auto bc : {PoissonBC::Isolated, PoissonBC::PeriodicZeroMean}) {
    PoissonSolver solver(grid, bc);
    Eigen::VectorXd combined = solver.solve(aa * r1 + bb * r2, 1.0);
    Eigen::VectorXd split = aa * solver.solve(r1, 1.0) + bb * solver.solve(r2, 1.0);
    double scale = combined.cwiseAbs().maxCoeff();
    CHECK((combined - split).cwiseAbs().maxCoeff() < 1e-13 * scale);
  }
}

TEST_CASE("poisson isolated: non-negative density gives non-positive potential") {
  Grid grid(3, 16, 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd rho(grid.size());
  for (std::int64_t i = 0; i < grid.size(); ++i) rho[i] = dist(rng);
  auto v = PoissonSolver(grid, PoissonBC::Isolated).solve(rho, 1.0);
  CHECK(v.maxCoeff() < 1e-12 * v.cwiseAbs().maxCoeff());
}

TEST_CASE("poisson rejects bad input") {
  Grid grid(3, 8, 1.0);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(grid.size());
  rho[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)poisson_solve(rho, grid, 1.0, PoissonBC::PeriodicZeroMean),
                  std::invalid_argument);
  Grid line(1, 64, 1.0);
  CHECK_THROWS_AS(PoissonSolver(line, PoissonBC::Isolated), std::invalid_argument);
}

TEST_CASE("grid invariants") {
  Grid g(3, 16, 0.5);
  CHECK(g.k_max() == doctest::Approx(M_PI / 0.5));
  CHECK(g.cell_volume() == doctest::Approx(0.125));
  CHECK_THROWS_AS(Grid(2, 16, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Grid(3, 12, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Grid(3, 16, 0.0), std::invalid_argument);
  // wavenumber grid is symmetric and capped at k_max
  double kmax_seen = 0;
  for (int j = 0; j < g.n; ++j) kmax_seen = std::max(kmax_seen, std::abs(g.wavenumber(j)));
  CHECK(kmax_seen == doctest::Approx(g.k_max()));
}
