#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aodkit/addressing.hpp"
#include "aodkit/errors.hpp"
#include "aodkit/units.hpp"

using namespace aodkit;
using namespace aodkit::addressing;
using units::deg;
using units::um;

namespace {

// Far-field intensity of the clipped Gaussian at ion-plane offset x, by
// Simpson quadrature of the cosine transform over the aperture.
double fraunhofer_intensity(const ClippingGeometry& g, double ratio, double x) {
  const double wc = g.collimated_waist;
  const double a = std::min(ratio, 8.0) * wc;
  const double k = 2.0 * units::pi / g.wavelength;
  const double u = x / g.magnification;  // Fourier-plane coordinate
  const int n = 40000;
  const double h = 2.0 * a / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double xi = -a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(-xi * xi / (wc * wc)) * std::cos(k * xi * u / g.focal_length);
  }
  const double amp = s * h / 3.0;
  return amp * amp;
}

double fraunhofer_crosstalk(const ClippingGeometry& g, double ratio, double x) {
  return fraunhofer_intensity(g, ratio, x) / fraunhofer_intensity(g, ratio, 0.0);
}

ClippingGeometry paper_geometry() { return ClippingGeometry::for_ion_waist(um(1.5), 355e-9, 0.1, 0.25); }

}  // namespace

TEST_CASE("relative rate") {
  CHECK(relative_rate(um(1.5), 0.0) == 1.0);
  CHECK(relative_rate(um(1.5), um(3.8)) == doctest::Approx(2.664e-6).epsilon(1e-3));
  CHECK(relative_rate(um(1.5), um(3.8)) < 1e-4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> off(-um(10), um(10));
  for (int i = 0; i < 200; ++i) {
    const double x = off(rng);
    const double amp = relative_rate(um(1.5), x, CouplingMode::amplitude);
    CHECK(relative_rate(um(1.5), x, CouplingMode::intensity) == doctest::Approx(amp * amp).epsilon(1e-12));
    CHECK(amp == doctest::Approx(relative_rate(um(1.5), -x, CouplingMode::amplitude)));
  }
  CHECK_THROWS_AS(relative_rate(0.0, 1.0), InvalidElementError);
}

TEST_CASE("ion chains") {
  const auto c = IonChain::uniform(5, um(3.8));
  CHECK(c.size() == 5);
  CHECK(c[2] == doctest::Approx(0.0).scale(1e-6));
  CHECK(c.mean_spacing() == doctest::Approx(um(3.8)));
  CHECK(IonChain::uniform(1, um(3.8)).mean_spacing() == 0.0);
  CHECK_THROWS_AS(IonChain({0.0, 0.0}), InvalidElementError);
  CHECK_THROWS_AS(IonChain({1.0, 0.0}), InvalidElementError);
  CHECK_THROWS_AS(IonChain(std::vector<double>{}), InvalidElementError);
}

TEST_CASE("ideal crosstalk matrix") {
  const auto one = IonChain::uniform(1, um(3.8));
  const auto m1 = crosstalk_matrix(one, um(1.5), one.positions());
  CHECK(m1.size() == 1);
  CHECK(m1(0, 0) == 1.0);

  const auto chain = IonChain::uniform(5, um(3.8));
  const auto m = crosstalk_matrix(chain, um(1.5), chain.positions());
  CHECK(m.source() == "ideal_gaussian");
  CHECK(m.worst_off_diagonal() < 1e-4);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m(i, i) == 1.0);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(m(i, j) >= 0.0);
      CHECK(m(i, j) <= 1.0);
      CHECK(m(i, j) == doctest::Approx(m(4 - i, 4 - j)).epsilon(1e-12));
    }
  }
  const std::vector<double> wrong{0.0, 1.0};
  CHECK_THROWS_AS(crosstalk_matrix(chain, um(1.5), wrong), ConfigurationError);
}

TEST_CASE("non-uniform chain stays in range and mirrors") {
  const IonChain chain({-um(7.1), -um(3.2), 0.0, um(3.2), um(7.1)});
  const auto m = crosstalk_matrix(chain, um(1.5), chain.positions(), CouplingMode::amplitude);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m(i, i) == 1.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(m(i, j) == doctest::Approx(m(4 - i, 4 - j)).epsilon(1e-12));
  }
}

TEST_CASE("clipping geometry") {
  const auto g = paper_geometry();
  CHECK(units::to_um(g.ion_plane_waist()) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(g.collimated_waist * 1e3 == doctest::Approx(1.883).epsilon(1e-3));
}

TEST_CASE("clipped crosstalk follows the far-field quadrature") {
  const auto g = paper_geometry();
  const auto chain = IonChain::uniform(3, um(3.8));
  for (double r : {0.6, 0.9, 1.2, 1.5, 2.0}) {
    const auto m = clipped_crosstalk(chain, g, r);
    const double near = fraunhofer_crosstalk(g, r, um(3.8));
    const double far = fraunhofer_crosstalk(g, r, um(7.6));
    CAPTURE(r);
    CHECK(m(1, 0) == doctest::Approx(near).epsilon(0.03));
    CHECK(m(2, 0) == doctest::Approx(far).epsilon(0.03));
  }
}

TEST_CASE("negligible clipping reproduces the ideal matrix") {
  const auto g = paper_geometry();
  const auto chain = IonChain::uniform(5, um(3.8));
  const auto ideal = crosstalk_matrix(chain, g.ion_plane_waist(), chain.positions());
  for (double r : {3.0, 4.0}) {
    const auto m = clipped_crosstalk(chain, g, r);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(m(i, j) - ideal(i, j)) < 1e-5);
    }
  }
}

TEST_CASE("clipped crosstalk settles onto the unclipped limit") {
  // Edge diffraction rings, so the neighbour value oscillates about its limit;
  // the envelope of the deviation shrinks with the ratio.
  const auto g = paper_geometry();
  const auto chain = IonChain::uniform(3, um(3.8));
  const double limit = clipped_crosstalk(chain, g, 6.0)(1, 0);
  double env_2 = 0.0;
  double env_3 = 0.0;
  for (double r = 2.0; r <= 4.0; r += 0.1) {
    const double dev = std::abs(clipped_crosstalk(chain, g, r)(1, 0) - limit);
    env_2 = std::max(env_2, dev);
    if (r >= 3.0) env_3 = std::max(env_3, dev);
  }
  CHECK(env_2 < 1e-5);
  CHECK(env_3 < 1e-6);
  CHECK(env_3 < env_2);
}

TEST_CASE("moderate clipping brackets the measured crosstalk") {
  const auto g = paper_geometry();
  const auto chain = IonChain::uniform(5, um(3.8));
  bool found = false;
  for (double r = 0.85; r < 2.0; r += 0.05) {
    const double w = clipped_crosstalk(chain, g, r).worst_off_diagonal();
    if (w >= 1e-4 && w <= 1e-2) found = true;
  }
  CHECK(found);
  CHECK_THROWS_AS(clipped_crosstalk(chain, g, 0.5), InvalidElementError);
}

TEST_CASE("misalignment imbalance") {
  CHECK(misalignment_imbalance(0.0, um(75), um(8.5)) == 0.0);
  // offset = 75 sin(1 deg) = 1.309 um; 1 - exp(-2 (1.309 / 8.5)^2)
  CHECK(units::to_um(um(75) * std::sin(deg(1.0))) == doctest::Approx(1.309).epsilon(1e-3));
  CHECK(misalignment_imbalance(deg(1.0), um(75), um(8.5)) == doctest::Approx(0.04633).epsilon(1e-3));
  CHECK(misalignment_imbalance(deg(1.0), um(75), um(8.5)) < 0.10);
  double last = -1.0;
  for (double a = 0.0; a <= 5.0; a += 0.05) {
    const double v = misalignment_imbalance(deg(a), um(75), um(8.5));
    CHECK(v > last);
    CHECK(v == doctest::Approx(misalignment_imbalance(-deg(a), um(75), um(8.5))));
    last = v;
  }
  CHECK_THROWS_AS(misalignment_imbalance(0.1, um(75), 0.0), InvalidElementError);
}

namespace {

SteeringLine rotated_line(double angle, double span, int n, double sigma, std::mt19937_64* rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) {
    const double s = -span / 2 + span * i / (n - 1);
    Point2 p{s * std::cos(angle), s * std::sin(angle)};
    if (rng) {
      p.u += noise(*rng);
      p.v += noise(*rng);
    }
    pts.push_back(p);
  }
  return SteeringLine(pts);
}

}  // namespace

TEST_CASE("steering-line angle") {
  const auto a = rotated_line(0.2, um(600), 21, 0.0, nullptr);
  CHECK(relative_steering_error(a, a) == doctest::Approx(0.0).scale(1.0));
  const auto b = rotated_line(0.2 + deg(3.8), um(600), 21, 0.0, nullptr);
  CHECK(std::abs(units::to_deg(relative_steering_error(a, b)) - 3.8) < 1e-6);
  // Direction sign does not matter.
  const auto c = rotated_line(0.2 + deg(3.8) + units::pi, um(600), 21, 0.0, nullptr);
  CHECK(std::abs(units::to_deg(relative_steering_error(a, c)) - 3.8) < 1e-6);
  const auto perp = rotated_line(0.2 + units::pi / 2, um(600), 21, 0.0, nullptr);
  CHECK(units::to_deg(relative_steering_error(a, perp)) == doctest::Approx(90.0));
}

TEST_CASE("noisy steering lines") {
  // One point per MHz across the band, 1 um position noise.
  std::mt19937_64 rng(1234);
  const auto a = rotated_line(0.0, um(600), 101, um(1), &rng);
  const auto b = rotated_line(deg(0.7), um(600), 101, um(1), &rng);
  CHECK(std::abs(units::to_deg(relative_steering_error(a, b)) - 0.7) < 0.1);
  double mean_abs = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = rotated_line(0.3, um(600), 101, um(1), &rng);
    const auto d = rotated_line(0.3 + deg(3.8), um(600), 101, um(1), &rng);
    mean_abs += std::abs(units::to_deg(relative_steering_error(c, d)) - 3.8) / 50;
  }
  CHECK(mean_abs < 0.05);
}

TEST_CASE("degenerate steering lines") {
  CHECK_THROWS_AS(SteeringLine({{0.0, 0.0}}), InvalidElementError);
  const SteeringLine dot({{1.0, 1.0}, {1.0, 1.0}});
  CHECK_THROWS_AS(fit_direction(dot), InvalidElementError);
  CHECK_THROWS_AS(SteeringLine({{0.0, 0.0}, {NAN, 1.0}}), InvalidElementError);
}
