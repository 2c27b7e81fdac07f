#pragma once

#include <cmath>
#include <stdexcept>

#include "vcsp/image.hpp"

namespace vcsp {

/// The five semantic perturbation kinds, encoded 0..4.
enum class AttackKind : int {
  Hue = 0,
  Saturation = 1,
  Rotation = 2,
  Brightness = 3,
  Contrast = 4,
};

inline constexpr int kNumAttackKinds = 5;

inline AttackKind attack_kind_from_code(int code) {
  if (code < 0 || code >= kNumAttackKinds) {
    throw std::invalid_argument("attack kind code must be in {0,...,4}");
  }
  return static_cast<AttackKind>(code);
}

inline const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::Hue: return "hue";
    case AttackKind::Saturation: return "saturation";
    case AttackKind::Rotation: return "rotation";
    case AttackKind::Brightness: return "brightness";
    default: return "contrast";
  }
}

/// Saturation and contrast scale the image; the rest shift it.
inline bool is_multiplicative(AttackKind k) {
  return k == AttackKind::Saturation || k == AttackKind::Contrast;
}

/// Per-kind base parameter bound. Rotation is stored in radians.
inline Interval base_interval(AttackKind k) {
  switch (k) {
    case AttackKind::Hue: return {-kPi, kPi};
    case AttackKind::Saturation: return {0.7, 1.3};
    case AttackKind::Rotation: return {-10.0 * kPi / 180.0, 10.0 * kPi / 180.0};
    case AttackKind::Brightness: return {-0.2, 0.2};
    default: return {0.7, 1.3};
  }
}

/// Per-occurrence bound when a kind appears `count` times in a sequence:
/// additive kinds split the interval by count, multiplicative kinds take the
/// count-th root, so the composition of count in-bound parameters stays inside
/// the base interval.
inline Interval adapted_interval(AttackKind k, int count) {
  if (count < 1) throw std::invalid_argument("adapted_interval: count must be >= 1");
  const Interval base = base_interval(k);
  if (count == 1) return base;
  if (is_multiplicative(k)) {
    const Real e = 1.0 / static_cast<Real>(count);
    return {std::pow(base.lo, e), std::pow(base.hi, e)};
  }
  return {base.lo / count, base.hi / count};
}

/// One occurrence bound of a kind that appears `count` times.
struct ComponentInterval {
  AttackKind kind;
  int count = 1;
  Interval iv;
};

template <typename Scalar>
ImageT<Scalar> apply_hue(const ImageT<Scalar>& img, Scalar delta) {
  HsvImageT<Scalar> hsv = rgb_to_hsv(img);
  hsv.pixels.col(0) = (hsv.pixels.col(0).array() + delta).max(Scalar(0)).min(Scalar(kTwoPi));
  ImageT<Scalar> out = hsv_to_rgb(hsv);
  out.pixels = out.pixels.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return out;
}

template <typename Scalar>
ImageT<Scalar> apply_saturation(const ImageT<Scalar>& img, Scalar delta) {
  HsvImageT<Scalar> hsv = rgb_to_hsv(img);
  hsv.pixels.col(1) = (hsv.pixels.col(1).array() * delta).max(Scalar(0)).min(Scalar(1));
  ImageT<Scalar> out = hsv_to_rgb(hsv);
  out.pixels = out.pixels.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return out;
}

template <typename Scalar>
ImageT<Scalar> apply_brightness(const ImageT<Scalar>& img, Scalar delta) {
  ImageT<Scalar> out = img;
  out.pixels = (img.pixels.array() + delta).max(Scalar(0)).min(Scalar(1));
  return out;
}

template <typename Scalar>
ImageT<Scalar> apply_contrast(const ImageT<Scalar>& img, Scalar delta) {
  ImageT<Scalar> out = img;
  out.pixels = (img.pixels.array() * delta).max(Scalar(0)).min(Scalar(1));
  return out;
}

namespace detail {

template <typename Scalar>
Scalar tap(const ImageT<Scalar>& img, Eigen::Index i, Eigen::Index j, int c) {
  if (i < 0 || j < 0 || i >= img.height || j >= img.width) return Scalar(0);
  return img(i, j, c);
}

}  // namespace detail

/// Rotation about the image center c = (H-1)/2 with bilinear sampling and
/// zero padding. Output pixel (i, j) reads the input at the point that maps
/// onto it, so content at (i, j) lands at (cos t * i + sin t * j + (1-cos t)c
/// - sin t * c, -sin t * i + cos t * j + sin t * c + (1-cos t)c).
template <typename Scalar>
ImageT<Scalar> apply_rotation(const ImageT<Scalar>& img, Scalar theta) {
  if (img.height != img.width) {
    throw std::invalid_argument("apply_rotation: image must be square");
  }
  const Eigen::Index n = img.height;
  const Scalar c = Scalar(n - 1) / Scalar(2);
  const Scalar ct = std::cos(theta);
  const Scalar st = std::sin(theta);
  ImageT<Scalar> out = ImageT<Scalar>::zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar di = Scalar(i) - c;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar dj = Scalar(j) - c;
      const Scalar si = ct * di - st * dj + c;
      const Scalar sj = st * di + ct * dj + c;
      const Scalar fi0 = std::floor(si);
      const Scalar fj0 = std::floor(sj);
      const auto i0 = static_cast<Eigen::Index>(fi0);
      const auto j0 = static_cast<Eigen::Index>(fj0);
      const Scalar fi = si - fi0;
      const Scalar fj = sj - fj0;
      for (int ch = 0; ch < 3; ++ch) {
        const Scalar t00 = detail::tap(img, i0, j0, ch);
        const Scalar t01 = detail::tap(img, i0, j0 + 1, ch);
        const Scalar t10 = detail::tap(img, i0 + 1, j0, ch);
        const Scalar t11 = detail::tap(img, i0 + 1, j0 + 1, ch);
        out(i, j, ch) = (1 - fi) * ((1 - fj) * t00 + fj * t01) +
                        fi * ((1 - fj) * t10 + fj * t11);
      }
    }
  }
  return out;
}

template <typename Scalar>
ImageT<Scalar> apply(AttackKind k, const ImageT<Scalar>& img, Scalar delta) {
  switch (k) {
    case AttackKind::Hue: return apply_hue(img, delta);
    case AttackKind::Saturation: return apply_saturation(img, delta);
    case AttackKind::Rotation: return apply_rotation(img, delta);
    case AttackKind::Brightness: return apply_brightness(img, delta);
    default: return apply_contrast(img, delta);
  }
}

namespace detail {

template <typename Scalar>
PixelMatrix<Scalar> hue_jacobian(const ImageT<Scalar>& img, Scalar delta) {
  PixelMatrix<Scalar> jac = PixelMatrix<Scalar>::Zero(img.pixels.rows(), 3);
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    const auto hsv = rgb_to_hsv_pixel(img.pixels(p, 0), img.pixels(p, 1), img.pixels(p, 2));
    const Scalar h2 = hsv[0] + delta;
    if (h2 <= Scalar(0) || h2 >= Scalar(kTwoPi)) continue;  // clip: subgradient 0
    const auto d = hsv_to_rgb_pixel_dh(h2, hsv[1], hsv[2]);
    jac(p, 0) = d[0];
    jac(p, 1) = d[1];
    jac(p, 2) = d[2];
  }
  return jac;
}

template <typename Scalar>
PixelMatrix<Scalar> saturation_jacobian(const ImageT<Scalar>& img, Scalar delta) {
  PixelMatrix<Scalar> jac = PixelMatrix<Scalar>::Zero(img.pixels.rows(), 3);
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    const auto hsv = rgb_to_hsv_pixel(img.pixels(p, 0), img.pixels(p, 1), img.pixels(p, 2));
    const Scalar s2 = hsv[1] * delta;
    if (s2 <= Scalar(0) || s2 >= Scalar(1)) continue;  // clip: subgradient 0
    const auto d = hsv_to_rgb_pixel_ds(hsv[0], s2, hsv[2]);
    jac(p, 0) = d[0] * hsv[1];  // chain through s2 = s * delta
    jac(p, 1) = d[1] * hsv[1];
    jac(p, 2) = d[2] * hsv[1];
  }
  return jac;
}

template <typename Scalar>
PixelMatrix<Scalar> rotation_jacobian(const ImageT<Scalar>& img, Scalar theta) {
  if (img.height != img.width) {
    throw std::invalid_argument("param_jacobian: rotation needs a square image");
  }
  const Eigen::Index n = img.height;
  const Scalar c = Scalar(n - 1) / Scalar(2);
  const Scalar ct = std::cos(theta);
  const Scalar st = std::sin(theta);
  PixelMatrix<Scalar> jac = PixelMatrix<Scalar>::Zero(img.pixels.rows(), 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar di = Scalar(i) - c;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar dj = Scalar(j) - c;
      const Scalar si = ct * di - st * dj + c;
      const Scalar sj = st * di + ct * dj + c;
      const Scalar dsi = -st * di - ct * dj;
      const Scalar dsj = ct * di - st * dj;
      const Scalar fi0 = std::floor(si);
      const Scalar fj0 = std::floor(sj);
      const auto i0 = static_cast<Eigen::Index>(fi0);
      const auto j0 = static_cast<Eigen::Index>(fj0);
      const Scalar fi = si - fi0;
      const Scalar fj = sj - fj0;
      for (int ch = 0; ch < 3; ++ch) {
        const Scalar t00 = tap(img, i0, j0, ch);
        const Scalar t01 = tap(img, i0, j0 + 1, ch);
        const Scalar t10 = tap(img, i0 + 1, j0, ch);
        const Scalar t11 = tap(img, i0 + 1, j0 + 1, ch);
        const Scalar dval_dsi = (1 - fj) * (t10 - t00) + fj * (t11 - t01);
        const Scalar dval_dsj = (1 - fi) * (t01 - t00) + fi * (t11 - t10);
        jac(i * n + j, ch) = dval_dsi * dsi + dval_dsj * dsj;
      }
    }
  }
  return jac;
}

}  // namespace detail

/// Componentwise derivative of apply(k, img, delta) with respect to delta.
/// Subgradient 0 at clip boundaries, HSV sector edges, and bilinear cell
/// edges.
template <typename Scalar>
PixelMatrix<Scalar> param_jacobian(AttackKind k, const ImageT<Scalar>& img, Scalar delta) {
  switch (k) {
    case AttackKind::Hue:
      return detail::hue_jacobian(img, delta);
    case AttackKind::Saturation:
      return detail::saturation_jacobian(img, delta);
    case AttackKind::Rotation:
      return detail::rotation_jacobian(img, delta);
    case AttackKind::Brightness: {
      const auto shifted = (img.pixels.array() + delta).eval();
      return (shifted > Scalar(0) && shifted < Scalar(1))
          .select(PixelMatrix<Scalar>::Constant(img.pixels.rows(), 3, Scalar(1)),
                  PixelMatrix<Scalar>::Zero(img.pixels.rows(), 3));
    }
    default: {  // contrast
      const auto scaled = (img.pixels.array() * delta).eval();
      return (scaled > Scalar(0) && scaled < Scalar(1))
          .select(img.pixels, PixelMatrix<Scalar>::Zero(img.pixels.rows(), 3));
    }
  }
}

}  // namespace vcsp
