#include "doctest.h"
#include "hq/frames.hpp"
#include "test_util.hpp"

using namespace hq;

TEST_CASE("canonical frame is valid with zero residuals") {
  LagrangianFrame z = standard_frame(1);
  CHECK(z.isotropy_residual() == 0.0);
  CHECK(z.normalization_residual() == 0.0);
  FrameGeometry g = geometry_of(z);
  CHECK((g.G - Mat::Identity(2, 2)).norm() < 1e-15);
  CHECK((g.J + omega(1)).norm() < 1e-15);
}

TEST_CASE("real frame is rejected as not normalized") {
  CMat one = CMat::Identity(1, 1);
  CHECK_THROWS_AS(make_frame(one, one), Error);
  try {
    make_frame(one, one);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotNormalized);
    CHECK(e.value() == doctest::Approx(2.0));
  }
}

TEST_CASE("doubled momentum block reports its normalization residual") {
  CMat P = 2.0 * I_unit * CMat::Identity(1, 1), Q = CMat::Identity(1, 1);
  try {
    make_frame(P, Q);
    FAIL("expected NotNormalized");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotNormalized);
    // Z* Omega Z = 4i, residual |4i - 2i| = 2
    CHECK(e.value() == doctest::Approx(2.0));
  }
}

TEST_CASE("frame_from_symplectic: identity and quarter rotation") {
  LagrangianFrame z = frame_from_symplectic(Mat::Identity(2, 2));
  CHECK(std::abs(z.P()(0, 0) - I_unit) < 1e-15);
  CHECK(std::abs(z.Q()(0, 0) - 1.0) < 1e-15);
  Mat R(2, 2);
  R << 0, -1, 1, 0;
  FrameGeometry g = geometry_of(frame_from_symplectic(R));
  CHECK((g.G - Mat::Identity(2, 2)).norm() < 1e-14);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 0) = 1.001;
  CHECK_THROWS_AS(frame_from_symplectic(bad), Error);
}

TEST_CASE("normalize_frame") {
  LagrangianFrame z0 = standard_frame(1);
  Normalized n = normalize_frame(z0.Z());
  CHECK((n.N - CMat::Identity(1, 1)).norm() < 1e-15);
  Normalized n2 = normalize_frame(2.0 * z0.Z());
  CHECK(std::abs(n2.N(0, 0) - 0.5) < 1e-15);
  CHECK((n2.frame.Z() - z0.Z()).norm() < 1e-15);
  try {
    normalize_frame(z0.Z().conjugate());
    FAIL("expected NotPositive");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositive);
  }
}

TEST_CASE("squeezed frame metric") {
  CMat P(1, 1), Q(1, 1);
  P(0, 0) = 4.0 * I_unit;
  Q(0, 0) = 0.25;
  FrameGeometry g = geometry_of(make_frame(P, Q));
  // (p, q) order: G = diag(1/16, 16); in (x, xi) this is diag(16, 1/16)
  Mat pub = to_public_matrix(g.G);
  CHECK(pub(0, 0) == doctest::Approx(16.0));
  CHECK(pub(1, 1) == doctest::Approx(1.0 / 16.0));
  CHECK(std::abs(pub(0, 1)) < 1e-14);
}

TEST_CASE("frame and geometry invariants over random symplectic matrices") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 2;
    Mat F = hqt::random_symplectic(d, rng);
    LagrangianFrame z = frame_from_symplectic(F, 1e-9);
    CHECK(z.isotropy_residual() <= 1e-9);
    CHECK(z.normalization_residual() <= 1e-9);
    CHECK((symplectic_of(z) - F).cwiseAbs().maxCoeff() <= 1e-12);
    FrameGeometry g = geometry_of(z);
    const Mat W = omega(d);
    const Mat Id = Mat::Identity(2 * d, 2 * d);
    CHECK((g.G.transpose() * W * g.G - W).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((g.J * g.J + Id).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((g.pi_L + g.pi_Lbar - Id.cast<cplx>()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((g.pi_L * g.pi_L - g.pi_L).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((g.pi_L - 0.5 * (Id.cast<cplx>() + I_unit * g.J.cast<cplx>())).cwiseAbs().maxCoeff() <= 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat> es(g.G);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    // unitary change of frame leaves G unchanged
    CMat U = CMat::Identity(d, d);
    if (d == 2) {
      const double th = 0.3 * trial;
      U << std::cos(th), -std::sin(th) * I_unit, -std::sin(th) * I_unit, std::cos(th);
    } else {
      U(0, 0) = std::exp(I_unit * (0.1 * trial));
    }
    FrameGeometry g2 = geometry_of(make_frame(CMat(z.Z() * U), 1e-9));
    CHECK((g2.G - g.G).cwiseAbs().maxCoeff() <= 1e-9);
  }
}
