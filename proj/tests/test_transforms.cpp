#include <doctest.h>

#include "test_support.hpp"
#include "vcsp/transforms.hpp"

using namespace vcsp;
using testsupport::random_image;

namespace {

Real max_abs_diff(const Image& a, const Image& b) {
  return (a.pixels - b.pixels).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("base intervals carry the documented defaults") {
  CHECK(base_interval(AttackKind::Hue).lo == -kPi);
  CHECK(base_interval(AttackKind::Hue).hi == kPi);
  CHECK(base_interval(AttackKind::Saturation).lo == 0.7);
  CHECK(base_interval(AttackKind::Saturation).hi == 1.3);
  CHECK(base_interval(AttackKind::Rotation).lo == doctest::Approx(-10.0 * kPi / 180.0));
  CHECK(base_interval(AttackKind::Rotation).hi == doctest::Approx(10.0 * kPi / 180.0));
  CHECK(base_interval(AttackKind::Brightness).lo == -0.2);
  CHECK(base_interval(AttackKind::Brightness).hi == 0.2);
  CHECK(base_interval(AttackKind::Contrast).lo == 0.7);
  CHECK(base_interval(AttackKind::Contrast).hi == 1.3);
}

TEST_CASE("adapted intervals split additively and by roots") {
  const Interval rot2 = adapted_interval(AttackKind::Rotation, 2);
  CHECK(rot2.lo == -5.0 * kPi / 180.0);
  CHECK(rot2.hi == 5.0 * kPi / 180.0);

  const Interval hue2 = adapted_interval(AttackKind::Hue, 2);
  CHECK(hue2.lo == -kPi / 2.0);
  CHECK(hue2.hi == kPi / 2.0);

  const Interval sat2 = adapted_interval(AttackKind::Saturation, 2);
  CHECK(sat2.lo == doctest::Approx(0.8366600265340756).epsilon(1e-12));
  CHECK(sat2.hi == doctest::Approx(1.140175425099138).epsilon(1e-12));

  for (int k = 0; k < kNumAttackKinds; ++k) {
    const AttackKind kind = static_cast<AttackKind>(k);
    const Interval one = adapted_interval(kind, 1);
    CHECK(one.lo == base_interval(kind).lo);
    CHECK(one.hi == base_interval(kind).hi);
  }
}

TEST_CASE("composing n in-bound draws stays inside the base interval") {
  Rng rng(31);
  for (int k = 0; k < kNumAttackKinds; ++k) {
    const AttackKind kind = static_cast<AttackKind>(k);
    const Interval base = base_interval(kind);
    for (int n = 1; n <= 4; ++n) {
      const Interval iv = adapted_interval(kind, n);
      for (int trial = 0; trial < 500; ++trial) {
        Real total = is_multiplicative(kind) ? 1.0 : 0.0;
        for (int i = 0; i < n; ++i) {
          const Real d = rng.uniform(iv.lo, iv.hi);
          total = is_multiplicative(kind) ? total * d : total + d;
        }
        CHECK(total >= base.lo - 1e-12);
        CHECK(total <= base.hi + 1e-12);
      }
    }
  }
}

TEST_CASE("identity parameters leave images unchanged") {
  Rng rng(41);
  const Image img = random_image(8, 8, rng);
  CHECK(max_abs_diff(apply_hue(img, 0.0), img) < 1e-6);
  CHECK(max_abs_diff(apply_saturation(img, 1.0), img) < 1e-6);
  CHECK(max_abs_diff(apply_brightness(img, 0.0), img) == 0.0);
  CHECK(max_abs_diff(apply_contrast(img, 1.0), img) == 0.0);
  CHECK(max_abs_diff(apply_rotation(img, 0.0), img) == 0.0);
  CHECK(max_abs_diff(apply_rotation(img, kTwoPi), img) < 1e-6);

  CHECK(max_abs_diff(apply(AttackKind::Brightness, img, 0.0), img) == 0.0);
  CHECK(max_abs_diff(apply(AttackKind::Contrast, img, 1.0), img) == 0.0);
  CHECK(max_abs_diff(apply(AttackKind::Rotation, img, 0.0), img) == 0.0);
}

TEST_CASE("gray images are hue and saturation fixed points") {
  const Image gray = Image::constant(6, 6, 0.42);
  CHECK(max_abs_diff(apply_hue(gray, 1.7), gray) == 0.0);
  CHECK(max_abs_diff(apply_saturation(gray, 1.3), gray) == 0.0);
}

TEST_CASE("hue shift moves red to green") {
  Image red = Image::zero(4, 4);
  red.pixels.col(0).setConstant(1.0);
  const Image out = apply_hue(red, 2.0 * kPi / 3.0);
  for (Eigen::Index p = 0; p < out.pixels.rows(); ++p) {
    CHECK(std::abs(out.pixels(p, 0) - 0.0) < 1e-6);
    CHECK(std::abs(out.pixels(p, 1) - 1.0) < 1e-6);
    CHECK(std::abs(out.pixels(p, 2) - 0.0) < 1e-6);
  }
}

TEST_CASE("saturation scale turns pure red pale") {
  Image red = Image::zero(4, 4);
  red.pixels.col(0).setConstant(1.0);
  const Image out = apply_saturation(red, 0.7);
  for (Eigen::Index p = 0; p < out.pixels.rows(); ++p) {
    CHECK(std::abs(out.pixels(p, 0) - 1.0) < 1e-6);
    CHECK(std::abs(out.pixels(p, 1) - 0.3) < 1e-6);
    CHECK(std::abs(out.pixels(p, 2) - 0.3) < 1e-6);
  }
}

TEST_CASE("brightness and contrast arithmetic") {
  const Image img = Image::constant(4, 4, 0.5);
  CHECK(apply_brightness(img, 0.2)(0, 0, 0) == doctest::Approx(0.7));
  CHECK(apply_contrast(img, 1.3)(0, 0, 0) == doctest::Approx(0.65));

  const Image bright = Image::constant(4, 4, 0.9);
  CHECK(apply_brightness(bright, 0.2)(0, 0, 0) == 1.0);
  CHECK(apply_contrast(bright, 1.3)(0, 0, 0) == 1.0);
}

TEST_CASE("rotation moves mass per the coordinate map") {
  Image img = Image::zero(3, 3);
  img(0, 1, 0) = 1.0;
  const Image out = apply_rotation(img, 90.0 * kPi / 180.0);
  CHECK(out(1, 2, 0) == doctest::Approx(1.0).epsilon(1e-9));
  Real total = out.pixels.col(0).sum();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  Image rect = Image::zero(3, 4);
  CHECK_THROWS_AS(apply_rotation(rect, 0.1), std::invalid_argument);
}

TEST_CASE("transform outputs are valid images for in-interval parameters") {
  Rng rng(59);
  for (int k = 0; k < kNumAttackKinds; ++k) {
    const AttackKind kind = static_cast<AttackKind>(k);
    const Interval iv = base_interval(kind);
    for (int t = 0; t < 20; ++t) {
      const Image img = random_image(8, 8, rng);
      const Image out = apply(kind, img, rng.uniform(iv.lo, iv.hi));
      CHECK((out.pixels.array() >= 0.0).all());
      CHECK((out.pixels.array() <= 1.0).all());
    }
  }
}

TEST_CASE("brightness and contrast jacobian spot values") {
  const Image img = Image::constant(4, 4, 0.4);
  const auto jb = param_jacobian(AttackKind::Brightness, img, 0.1);
  CHECK(jb(0, 0) == 1.0);
  const auto jc = param_jacobian(AttackKind::Contrast, img, 1.1);
  CHECK(jc(0, 0) == doctest::Approx(0.4));

  const Image bright = Image::constant(4, 4, 0.95);
  const auto jb2 = param_jacobian(AttackKind::Brightness, bright, 0.1);
  CHECK(jb2(0, 0) == 0.0);  // clipped at 1
}

TEST_CASE("param_jacobian matches central finite differences") {
  Rng rng(67);
  const Real h = 1e-4;
  for (int k = 0; k < kNumAttackKinds; ++k) {
    const AttackKind kind = static_cast<AttackKind>(k);
    const Interval iv = base_interval(kind);
    int accepted = 0;
    int guard = 0;
    while (accepted < 25 && guard < 1000) {
      ++guard;
      const Image img = random_image(12, 12, rng);
      const Real delta = rng.uniform(iv.lo + 2 * h, iv.hi - 2 * h);
      const auto fd = testsupport::fd_param_jacobian(kind, img, delta, h);
      if (!fd) continue;               // degenerate probe
      if (fd->norm() < 1e-6) continue;  // no signal to compare against
      const auto analytic = param_jacobian(kind, img, delta);
      CHECK(testsupport::relative_error(analytic, *fd) < 1e-3);
      ++accepted;
    }
    CHECK(accepted == 25);
  }
}
