#include <doctest.h>

#include <random>

#include "mcflab/ambient.hpp"
#include "mcflab/error.hpp"
#include "test_support.hpp"

using namespace mcflab;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Two orthonormal vectors tangent to N at x, drawn at random.
Eigen::MatrixXd random_tangent_plane(const AmbientSpace& N, const Vec& x, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd approx(N.dim(), 2);
  for (int i = 0; i < approx.size(); ++i) approx.data()[i] = g(rng);
  return tangent_frame(N, x, approx);
}

Vec random_point_on(const AmbientSpace& N, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec x(N.dim());
  for (int i = 0; i < x.size(); ++i) x(i) = g(rng);
  return project_to_ambient(N, x);
}

}  // namespace

TEST_CASE("projection") {
  Vec x = vec({0.3, -2, 5});
  CHECK(project_to_ambient(AmbientSpace::euclidean(3), x) == x);
  CHECK((project_to_ambient(AmbientSpace::round_sphere(4, 1.0), vec({2, 0, 0, 0})) - vec({1, 0, 0, 0})).norm() <
        1e-15);
  Polynomial phi = Polynomial::parse("x1^2 + x2^2 + x3^2 + x4^2 - 1", 4);
  AmbientSpace implicit = AmbientSpace::implicit(phi, Box{Vec::Constant(4, -1.5), Vec::Constant(4, 1.5)});
  CHECK((project_to_ambient(implicit, vec({0, 1.1, 0, 0})) - vec({0, 1, 0, 0})).norm() < 1e-10);

  auto torus = AmbientSpace::clifford_torus(1.0, 0.5);
  Vec p = project_to_ambient(torus, vec({2, 0, 0, 0.2}));
  CHECK((p - vec({1, 0, 0, 0.5})).norm() < 1e-12);
}

TEST_CASE("forcing term") {
  std::mt19937_64 rng(7);
  SUBCASE("Euclidean forcing vanishes") {
    auto R3 = AmbientSpace::euclidean(3);
    Vec x = vec({1, 2, 3});
    CHECK(forcing_term(R3, x, random_tangent_plane(R3, x, rng)).norm() == 0.0);
  }
  SUBCASE("unit sphere in R^4: |P| = 2, radial") {
    auto S3 = AmbientSpace::round_sphere(4, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      Vec x = random_point_on(S3, rng);
      Vec P = forcing_term(S3, x, random_tangent_plane(S3, x, rng));
      CHECK(std::abs(P.norm() - 2.0) < 1e-12);
      CHECK(std::abs(std::abs(P.normalized().dot(x)) - 1.0) < 1e-12);
    }
  }
  SUBCASE("radius 10 sphere: |P| = 0.2") {
    auto S = AmbientSpace::round_sphere(4, 10.0);
    Vec x = random_point_on(S, rng);
    CHECK(std::abs(forcing_term(S, x, random_tangent_plane(S, x, rng)).norm() - 0.2) < 1e-12);
  }
  SUBCASE("independent of the tangent plane on round spheres") {
    auto S = AmbientSpace::round_sphere(4, 1.3);
    Vec x = random_point_on(S, rng);
    Vec a = forcing_term(S, x, random_tangent_plane(S, x, rng));
    Vec b = forcing_term(S, x, random_tangent_plane(S, x, rng));
    CHECK((a - b).norm() < 1e-10);
  }
  SUBCASE("orthogonal to the plane and to T_xN") {
    for (const AmbientSpace& N : {AmbientSpace::round_sphere(4, 1.0), AmbientSpace::clifford_torus(1.0, 0.6)}) {
      for (int trial = 0; trial < 10; ++trial) {
        Vec x = random_point_on(N, rng);
        Eigen::MatrixXd E = random_tangent_plane(N, x, rng);
        Vec P = forcing_term(N, x, E);
        CHECK((E.transpose() * P).norm() < 1e-8 * std::max(1.0, P.norm()));
        CHECK((N.tangent_projector(x) * P).norm() < 1e-8 * std::max(1.0, P.norm()));
      }
    }
  }
  SUBCASE("implicit sphere agrees with the analytic sphere") {
    Polynomial phi = Polynomial::parse("x^2 + y^2 + z^2 + w^2 - 4", 4);
    auto implicit = AmbientSpace::implicit(phi, Box{Vec::Constant(4, -2.5), Vec::Constant(4, 2.5)});
    auto analytic = AmbientSpace::round_sphere(4, 2.0);
    Vec x = random_point_on(analytic, rng);
    Eigen::MatrixXd E = random_tangent_plane(analytic, x, rng);
    CHECK((forcing_term(implicit, x, E) - forcing_term(analytic, x, E)).norm() < 1e-8);
  }
  SUBCASE("non-tangent basis is rejected") {
    auto S3 = AmbientSpace::round_sphere(4, 1.0);
    Vec x = vec({1, 0, 0, 0});
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(4, 2);
    E(0, 0) = 1;
    E(1, 1) = 1;
    try {
      forcing_term(S3, x, E);
      FAIL("expected BasisNotTangent");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BasisNotTangent);
    }
  }
}

TEST_CASE("curvature bound K") {
  Box big{Vec::Constant(4, -20), Vec::Constant(4, 20)};
  CHECK(curvature_bound_K(AmbientSpace::euclidean(4), big, 2) == 0.0);
  CHECK(curvature_bound_K(AmbientSpace::round_sphere(4, 1.0), big, 2) == doctest::Approx(2.0));
  CHECK(curvature_bound_K(AmbientSpace::round_sphere(4, 10.0), big, 2) == doctest::Approx(0.2));
  CHECK(curvature_bound_K(AmbientSpace::clifford_torus(1.0, 1.0), big, 2) == doctest::Approx(2.0));
  CHECK(AmbientSpace::round_sphere(4, 10.0).forcing_bound_K() == doctest::Approx(0.2));

  SUBCASE("scales as 1/S under dilation") {
    for (const AmbientSpace& N : {AmbientSpace::round_sphere(4, 1.5), AmbientSpace::clifford_torus(1.0, 0.5)}) {
      for (double S : {0.5, 3.0}) {
        AmbientSpace D = N.affine(S, Vec::Zero(4));
        CHECK(D.forcing_bound_K() == doctest::Approx(N.forcing_bound_K() / S).epsilon(1e-12));
      }
    }
  }
  SUBCASE("implicit bound covers the analytic value") {
    Polynomial phi = Polynomial::parse("x^2 + y^2 + z^2 + w^2 - 1", 4);
    auto implicit = AmbientSpace::implicit(phi, Box{Vec::Constant(4, -1.2), Vec::Constant(4, 1.2)});
    CHECK(implicit.forcing_bound_K() >= 2.0 - 1e-9);
    CHECK(implicit.forcing_bound_K() <= 1.5 * 2.0 + 1e-9);  // sampled sup times the safety factor
  }
  SUBCASE("region missing the sphere") {
    try {
      curvature_bound_K(AmbientSpace::round_sphere(4, 1.0), Box{Vec::Constant(4, 5), Vec::Constant(4, 6)}, 2);
      FAIL("expected EmptyRegion");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyRegion);
    }
  }
}

TEST_CASE("rescaled flatness") {
  Vec x = vec({1, 0, 0, 0});
  CHECK(rescaled_flatness(AmbientSpace::euclidean(4), x, 10, 1) == 0.0);
  auto S3 = AmbientSpace::round_sphere(4, 1.0);
  double base = rescaled_flatness(S3, x, 1, 1);
  double fine = rescaled_flatness(S3, x, 10, 1);
  MESSAGE("flatness xi=1: " << base << ", xi=10: " << fine);
  CHECK(base > 0);
  CHECK(fine <= 0.1 * base * 1.2);
}
