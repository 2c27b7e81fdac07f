#include <doctest.h>

#include <limits>

#include "test_support.hpp"
#include "vcsp/image.hpp"

using namespace vcsp;

TEST_CASE("clip_interval branches") {
  CHECK(clip_interval(1.5, {0.7, 1.3}) == 1.3);
  CHECK(clip_interval(1.0, {0.7, 1.3}) == 1.0);
  CHECK(clip_interval(-4.0, {-kPi, kPi}) == -kPi);
}

TEST_CASE("clip_interval is idempotent and monotone") {
  Rng rng(11);
  Real prev_in = -1e9, prev_out = 0.0;
  bool first = true;
  for (int t = 0; t < 10000; ++t) {
    const Interval iv{-0.4, 0.9};
    const Real z = rng.uniform(-2.0, 2.0);
    const Real c = clip_interval(z, iv);
    CHECK(clip_interval(c, iv) == c);
    if (!first && z >= prev_in) CHECK(c >= prev_out);
    // monotonicity over sorted pairs: compare against a second draw
    const Real z2 = rng.uniform(-2.0, 2.0);
    const Real c2 = clip_interval(z2, iv);
    if (z2 >= z) {
      CHECK(c2 >= c);
    } else {
      CHECK(c2 <= c);
    }
    prev_in = z;
    prev_out = c;
    first = false;
  }
}

TEST_CASE("clip_image clamps and validates") {
  PixelMatrix<Real> raw = PixelMatrix<Real>::Constant(4, 3, 0.5);
  const Image mid = clip_image(2, 2, raw);
  CHECK(mid.pixels == raw);

  raw(1, 0) = 1.2;
  raw(2, 1) = -0.1;
  const Image clamped = clip_image(2, 2, raw);
  CHECK(clamped.pixels(1, 0) == 1.0);
  CHECK(clamped.pixels(2, 1) == 0.0);
  CHECK(clamped.pixels(0, 0) == 0.5);

  raw(0, 0) = std::numeric_limits<Real>::quiet_NaN();
  CHECK_THROWS_AS(clip_image(2, 2, raw), NumericError);
}

TEST_CASE("rgb_to_hsv reference pixels") {
  const auto red = rgb_to_hsv_pixel(1.0, 0.0, 0.0);
  CHECK(red[0] == doctest::Approx(0.0));
  CHECK(red[1] == doctest::Approx(1.0));
  CHECK(red[2] == doctest::Approx(1.0));

  const auto gray = rgb_to_hsv_pixel(0.5, 0.5, 0.5);
  CHECK(gray[0] == 0.0);
  CHECK(gray[1] == 0.0);
  CHECK(gray[2] == doctest::Approx(0.5));

  const auto green = rgb_to_hsv_pixel(0.0, 1.0, 0.0);
  CHECK(green[0] == doctest::Approx(2.0 * kPi / 3.0));
  CHECK(green[1] == doctest::Approx(1.0));
  CHECK(green[2] == doctest::Approx(1.0));
}

TEST_CASE("hsv_to_rgb reference pixels") {
  const auto red = hsv_to_rgb_pixel(0.0, 1.0, 1.0);
  CHECK(red[0] == doctest::Approx(1.0));
  CHECK(red[1] == doctest::Approx(0.0));
  CHECK(red[2] == doctest::Approx(0.0));

  for (Real h : {0.3, 2.0, 4.5, 6.0}) {
    const auto gray = hsv_to_rgb_pixel(h, 0.0, 0.7);
    CHECK(gray[0] == doctest::Approx(0.7));
    CHECK(gray[1] == doctest::Approx(0.7));
    CHECK(gray[2] == doctest::Approx(0.7));
  }
}

TEST_CASE("hsv round trip on chromatic pixels") {
  Rng rng(23);
  for (int t = 0; t < 1000; ++t) {
    const Real r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    const auto hsv = rgb_to_hsv_pixel(r, g, b);
    if (hsv[1] <= 0.05 || hsv[2] <= 0.05) continue;
    const auto rgb = hsv_to_rgb_pixel(hsv[0], hsv[1], hsv[2]);
    CHECK(std::abs(rgb[0] - r) < 1e-6);
    CHECK(std::abs(rgb[1] - g) < 1e-6);
    CHECK(std::abs(rgb[2] - b) < 1e-6);

    // and the opposite direction, starting from HSV
    const Real h2 = rng.uniform(0.0, kTwoPi);
    const Real s2 = rng.uniform(0.06, 1.0);
    const Real v2 = rng.uniform(0.06, 1.0);
    const auto rgb2 = hsv_to_rgb_pixel(h2, s2, v2);
    const auto hsv2 = rgb_to_hsv_pixel(rgb2[0], rgb2[1], rgb2[2]);
    const Real dh = std::min(std::abs(hsv2[0] - h2), kTwoPi - std::abs(hsv2[0] - h2));
    CHECK(dh < 1e-6);
    CHECK(std::abs(hsv2[1] - s2) < 1e-6);
    CHECK(std::abs(hsv2[2] - v2) < 1e-6);
  }
}

TEST_CASE("whole-image conversions match pixel helpers") {
  Rng rng(5);
  const Image img = testsupport::random_image(6, 5, rng);
  const HsvImage hsv = rgb_to_hsv(img);
  const Image back = hsv_to_rgb(hsv);
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(back.pixels(p, c) - img.pixels(p, c)) < 1e-9);
    }
  }
  CHECK((hsv.pixels.col(0).array() >= 0.0).all());
  CHECK((hsv.pixels.col(0).array() <= kTwoPi).all());
}

TEST_CASE("mse values and symmetry") {
  Rng rng(7);
  const Image a = testsupport::random_image(4, 4, rng);
  CHECK(mse(a, a) == 0.0);

  Image b = a;
  b.pixels.array() += 0.1;
  b.pixels = b.pixels.cwiseMin(1.0);
  // keep away from the clamp so the offset is exact
  Image a2 = Image::constant(4, 4, 0.3);
  Image b2 = Image::constant(4, 4, 0.4);
  CHECK(mse(a2, b2) == doctest::Approx(0.01).epsilon(1e-12));

  // brute-force double-loop oracle
  const Image c = testsupport::random_image(4, 4, rng);
  Real acc = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      for (int ch = 0; ch < 3; ++ch) {
        const Real d = a(i, j, ch) - c(i, j, ch);
        acc += d * d;
      }
    }
  }
  acc /= 4 * 4 * 3;
  CHECK(mse(a, c) == doctest::Approx(acc).epsilon(1e-12));
  CHECK(mse(a, c) == mse(c, a));

  Image wrong = Image::zero(4, 5);
  CHECK_THROWS_AS(mse(a, wrong), std::invalid_argument);
}
