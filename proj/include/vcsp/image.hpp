#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "vcsp/errors.hpp"

namespace vcsp {

using Real = double;

inline constexpr Real kPi = 3.14159265358979323846;
inline constexpr Real kTwoPi = 2.0 * kPi;

/// Closed interval [lo, hi].
struct Interval {
  Real lo = 0.0;
  Real hi = 0.0;

  bool contains(Real z) const { return lo <= z && z <= hi; }
  Real width() const { return hi - lo; }
  Real mid() const { return 0.5 * (lo + hi); }
};

/// Element-wise clamp of z into [iv.lo, iv.hi].
inline Real clip_interval(Real z, const Interval& iv) {
  if (z < iv.lo) return iv.lo;
  if (z > iv.hi) return iv.hi;
  return z;
}

/// Pixel block: one row per pixel (row-major, row = i * width + j), one column
/// per channel. Dense storage shared by RGB and HSV images.
template <typename Scalar>
using PixelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

/// H x W x 3 image, intensities in [0, 1].
template <typename Scalar = Real>
struct ImageT {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  PixelMatrix<Scalar> pixels;

  static ImageT zero(Eigen::Index h, Eigen::Index w) {
    return {h, w, PixelMatrix<Scalar>::Zero(h * w, 3)};
  }
  static ImageT constant(Eigen::Index h, Eigen::Index w, Scalar v) {
    return {h, w, PixelMatrix<Scalar>::Constant(h * w, 3, v)};
  }

  Eigen::Index pixel_count() const { return height * width; }
  Scalar operator()(Eigen::Index i, Eigen::Index j, int c) const {
    return pixels(i * width + j, c);
  }
  Scalar& operator()(Eigen::Index i, Eigen::Index j, int c) {
    return pixels(i * width + j, c);
  }
};

/// Same layout as ImageT; channel 0 = hue in [0, 2pi], 1 = saturation, 2 = value.
template <typename Scalar = Real>
struct HsvImageT {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  PixelMatrix<Scalar> pixels;
};

using Image = ImageT<Real>;
using HsvImage = HsvImageT<Real>;

/// Hexcone RGB -> HSV for one pixel. Achromatic pixels get hue 0 and
/// saturation 0; hue precedence at channel ties is R, then G, then B.
template <typename Scalar>
std::array<Scalar, 3> rgb_to_hsv_pixel(Scalar r, Scalar g, Scalar b) {
  const Scalar v = std::max(r, std::max(g, b));
  const Scalar lo = std::min(r, std::min(g, b));
  const Scalar delta = v - lo;
  if (!(delta > Scalar(0)) || !(v > Scalar(0))) {
    return {Scalar(0), Scalar(0), v};
  }
  Scalar hp;
  if (v == r) {
    hp = (g - b) / delta;
    if (hp < Scalar(0)) hp += Scalar(6);
  } else if (v == g) {
    hp = (b - r) / delta + Scalar(2);
  } else {
    hp = (r - g) / delta + Scalar(4);
  }
  return {hp * Scalar(kPi / 3.0), delta / v, v};
}

/// Hexcone HSV -> RGB for one pixel. h in [0, 2pi] (2pi maps to red).
template <typename Scalar>
std::array<Scalar, 3> hsv_to_rgb_pixel(Scalar h, Scalar s, Scalar v) {
  Scalar hp = h * Scalar(3.0 / kPi);
  if (hp >= Scalar(6)) hp -= Scalar(6);
  if (hp < Scalar(0)) hp = Scalar(0);
  const int sector = std::min(5, static_cast<int>(hp));
  const Scalar c = v * s;
  const Scalar u = hp - Scalar(2 * (sector / 2));
  const Scalar x = c * (Scalar(1) - std::abs(u - Scalar(1)));
  const Scalar m = v - c;
  switch (sector) {
    case 0: return {c + m, x + m, m};
    case 1: return {x + m, c + m, m};
    case 2: return {m, c + m, x + m};
    case 3: return {m, x + m, c + m};
    case 4: return {x + m, m, c + m};
    default: return {c + m, m, x + m};
  }
}

/// d(rgb)/dh at fixed s, v. Subgradient 0 on sector edges; only the ramp
/// channel of the active sector moves.
template <typename Scalar>
std::array<Scalar, 3> hsv_to_rgb_pixel_dh(Scalar h, Scalar s, Scalar v) {
  Scalar hp = h * Scalar(3.0 / kPi);
  if (hp >= Scalar(6)) hp -= Scalar(6);
  if (hp < Scalar(0)) hp = Scalar(0);
  const int sector = std::min(5, static_cast<int>(hp));
  const Scalar c = v * s;
  const Scalar u = hp - Scalar(2 * (sector / 2));
  const Scalar dx = (u < Scalar(1) ? c : -c) * Scalar(3.0 / kPi);
  switch (sector) {
    case 0: return {Scalar(0), dx, Scalar(0)};
    case 1: return {dx, Scalar(0), Scalar(0)};
    case 2: return {Scalar(0), Scalar(0), dx};
    case 3: return {Scalar(0), dx, Scalar(0)};
    case 4: return {dx, Scalar(0), Scalar(0)};
    default: return {Scalar(0), Scalar(0), dx};
  }
}

/// d(rgb)/ds at fixed h, v. The max channel stays at v, the floor channel
/// falls at rate v, the ramp channel at rate v*(1 - ramp).
template <typename Scalar>
std::array<Scalar, 3> hsv_to_rgb_pixel_ds(Scalar h, Scalar s, Scalar v) {
  Scalar hp = h * Scalar(3.0 / kPi);
  if (hp >= Scalar(6)) hp -= Scalar(6);
  if (hp < Scalar(0)) hp = Scalar(0);
  const int sector = std::min(5, static_cast<int>(hp));
  const Scalar u = hp - Scalar(2 * (sector / 2));
  const Scalar k = Scalar(1) - std::abs(u - Scalar(1));
  const Scalar dxm = v * (k - Scalar(1));  // ramp channel: d(x + m)/ds
  const Scalar dm = -v;                    // floor channel: d(m)/ds
  switch (sector) {
    case 0: return {Scalar(0), dxm, dm};
    case 1: return {dxm, Scalar(0), dm};
    case 2: return {dm, Scalar(0), dxm};
    case 3: return {dm, dxm, Scalar(0)};
    case 4: return {dxm, dm, Scalar(0)};
    default: return {Scalar(0), dm, dxm};
  }
}

template <typename Scalar>
HsvImageT<Scalar> rgb_to_hsv(const ImageT<Scalar>& img) {
  HsvImageT<Scalar> out{img.height, img.width, PixelMatrix<Scalar>(img.pixels.rows(), 3)};
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    const auto hsv = rgb_to_hsv_pixel(img.pixels(p, 0), img.pixels(p, 1), img.pixels(p, 2));
    out.pixels(p, 0) = hsv[0];
    out.pixels(p, 1) = hsv[1];
    out.pixels(p, 2) = hsv[2];
  }
  return out;
}

template <typename Scalar>
ImageT<Scalar> hsv_to_rgb(const HsvImageT<Scalar>& img) {
  ImageT<Scalar> out{img.height, img.width, PixelMatrix<Scalar>(img.pixels.rows(), 3)};
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    const auto rgb = hsv_to_rgb_pixel(img.pixels(p, 0), img.pixels(p, 1), img.pixels(p, 2));
    out.pixels(p, 0) = rgb[0];
    out.pixels(p, 1) = rgb[1];
    out.pixels(p, 2) = rgb[2];
  }
  return out;
}

/// Clamps an unconstrained (h*w) x 3 pixel block into a valid Image.
template <typename Derived>
ImageT<typename Derived::Scalar> clip_image(Eigen::Index h, Eigen::Index w,
                                            const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  if (raw.rows() != h * w || raw.cols() != 3) {
    throw std::invalid_argument("clip_image: pixel block must be (h*w) x 3");
  }
  if (!raw.allFinite()) {
    throw NumericError("clip_image: non-finite pixel value");
  }
  ImageT<Scalar> out{h, w, raw.cwiseMax(Scalar(0)).cwiseMin(Scalar(1))};
  return out;
}

/// Mean squared difference over all H*W*3 components.
template <typename Scalar>
Scalar mse(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("mse: image shapes differ");
  }
  return (a.pixels - b.pixels).squaredNorm() / static_cast<Scalar>(a.pixels.size());
}

}  // namespace vcsp
