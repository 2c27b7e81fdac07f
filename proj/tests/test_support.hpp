#pragma once

// Shared oracles for the unit and acceptance suites. Everything here is
// independent of the library code paths it checks: finite differences for
// gradients, brute-force Pareto peeling for the non-dominated sort, and
// degeneracy detection so FD probes never straddle a kink.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "vcsp/attack.hpp"
#include "vcsp/evaluation.hpp"
#include "vcsp/model.hpp"
#include "vcsp/rng.hpp"
#include "vcsp/search.hpp"
#include "vcsp/transforms.hpp"

namespace testsupport {

using vcsp::AttackKind;
using vcsp::Image;
using vcsp::Real;

inline Image random_image(Eigen::Index h, Eigen::Index w, vcsp::Rng& rng) {
  Image img = Image::zero(h, w);
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    for (int c = 0; c < 3; ++c) img.pixels(p, c) = rng.uniform();
  }
  return img;
}

// ---------------------------------------------------------------------------
// Transform non-smoothness signatures. A finite-difference probe at delta with
// step h is valid only if the signature is identical at delta-h, delta, and
// delta+h; otherwise the probe straddles a clip boundary, HSV sector edge, or
// bilinear cell edge and the point counts as degenerate.

inline std::vector<std::int64_t> transform_signature(AttackKind kind, const Image& img,
                                                     Real delta) {
  std::vector<std::int64_t> sig;
  sig.reserve(img.pixels.rows());
  switch (kind) {
    case AttackKind::Hue: {
      for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
        const auto hsv =
            vcsp::rgb_to_hsv_pixel(img.pixels(p, 0), img.pixels(p, 1), img.pixels(p, 2));
        const Real h2 = hsv[0] + delta;
        std::int64_t s;
        if (h2 <= 0.0) {
          s = -1;
        } else if (h2 >= vcsp::kTwoPi) {
          s = -2;
        } else {
          s = static_cast<std::int64_t>(std::floor(h2 * 3.0 / vcsp::kPi));
        }
        sig.push_back(s);
      }
      break;
    }
    case AttackKind::Saturation: {
      for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
        const auto hsv =
            vcsp::rgb_to_hsv_pixel(img.pixels(p, 0), img.pixels(p, 1), img.pixels(p, 2));
        const Real s2 = hsv[1] * delta;
        sig.push_back(s2 <= 0.0 ? -1 : (s2 >= 1.0 ? -2 : 0));
      }
      break;
    }
    case AttackKind::Rotation: {
      const Eigen::Index n = img.height;
      const Real c = Real(n - 1) / 2.0;
      const Real ct = std::cos(delta), st = std::sin(delta);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const Real di = Real(i) - c, dj = Real(j) - c;
          const Real si = ct * di - st * dj + c;
          const Real sj = st * di + ct * dj + c;
          sig.push_back(static_cast<std::int64_t>(std::floor(si)) * 4096 +
                        static_cast<std::int64_t>(std::floor(sj)));
        }
      }
      break;
    }
    case AttackKind::Brightness: {
      for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
        std::int64_t s = 0;
        for (int c = 0; c < 3; ++c) {
          const Real v = img.pixels(p, c) + delta;
          s = s * 4 + (v <= 0.0 ? 1 : (v >= 1.0 ? 2 : 3));
        }
        sig.push_back(s);
      }
      break;
    }
    default: {  // contrast
      for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
        std::int64_t s = 0;
        for (int c = 0; c < 3; ++c) {
          const Real v = img.pixels(p, c) * delta;
          s = s * 4 + (v <= 0.0 ? 1 : (v >= 1.0 ? 2 : 3));
        }
        sig.push_back(s);
      }
      break;
    }
  }
  return sig;
}

inline bool transform_probe_ok(AttackKind kind, const Image& img, Real delta, Real h) {
  const auto a = transform_signature(kind, img, delta - h);
  const auto b = transform_signature(kind, img, delta);
  const auto c = transform_signature(kind, img, delta + h);
  return a == b && b == c;
}

// ReLU mask plus pool winners: constant signature on [x-h, x+h] means the
// network is affine there and central differences only see the smooth loss.
inline std::vector<std::int64_t> model_signature(const vcsp::ModelParams& params,
                                                 const Image& img) {
  const vcsp::ForwardTrace t = vcsp::forward_trace(params, img);
  std::vector<std::int64_t> sig;
  for (const auto& planes : t.conv_pre) {
    for (const auto& m : planes.ch) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) sig.push_back(m(i, j) > 0.0 ? 1 : 0);
      }
    }
  }
  for (const auto& per_conv : t.pool_argmax) {
    for (const auto& m : per_conv) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) sig.push_back(m(i, j));
      }
    }
  }
  for (std::size_t d = 0; d + 1 < t.dense_pre.size(); ++d) {
    for (Eigen::Index i = 0; i < t.dense_pre[d].size(); ++i) {
      sig.push_back(t.dense_pre[d](i) > 0.0 ? 1 : 0);
    }
  }
  return sig;
}

// ---------------------------------------------------------------------------
// Finite-difference oracles.

/// Central difference of the whole transform output w.r.t. delta. Returns
/// nothing when the probe is degenerate.
inline std::optional<vcsp::PixelMatrix<Real>> fd_param_jacobian(AttackKind kind,
                                                                const Image& img,
                                                                Real delta, Real h) {
  if (!transform_probe_ok(kind, img, delta, h)) return std::nullopt;
  const Image plus = vcsp::apply(kind, img, delta + h);
  const Image minus = vcsp::apply(kind, img, delta - h);
  return ((plus.pixels - minus.pixels) / (2.0 * h)).eval();
}

/// Central difference of the loss w.r.t. delta, with both the transform and
/// the network checked for kink crossings.
inline std::optional<Real> fd_grad_wrt_delta(const vcsp::ModelParams& params,
                                             AttackKind kind, const Image& img,
                                             Real delta, int label, Real h) {
  if (!transform_probe_ok(kind, img, delta, h)) return std::nullopt;
  const Image plus = vcsp::apply(kind, img, delta + h);
  const Image minus = vcsp::apply(kind, img, delta - h);
  const Image mid = vcsp::apply(kind, img, delta);
  const auto sig_mid = model_signature(params, mid);
  if (model_signature(params, plus) != sig_mid || model_signature(params, minus) != sig_mid) {
    return std::nullopt;
  }
  const Real lp = vcsp::cross_entropy(vcsp::forward_one(params, plus), label);
  const Real lm = vcsp::cross_entropy(vcsp::forward_one(params, minus), label);
  return (lp - lm) / (2.0 * h);
}

/// Central difference of the loss w.r.t. one input pixel component.
inline std::optional<Real> fd_input_gradient(const vcsp::ModelParams& params,
                                             const Image& img, int label,
                                             Eigen::Index pixel, int channel, Real h) {
  Image plus = img;
  plus.pixels(pixel, channel) += h;
  Image minus = img;
  minus.pixels(pixel, channel) -= h;
  const auto sig = model_signature(params, img);
  if (model_signature(params, plus) != sig || model_signature(params, minus) != sig) {
    return std::nullopt;
  }
  const Real lp = vcsp::cross_entropy(vcsp::forward_one(params, plus), label);
  const Real lm = vcsp::cross_entropy(vcsp::forward_one(params, minus), label);
  return (lp - lm) / (2.0 * h);
}

inline Real relative_error(Real got, Real want) {
  const Real denom = std::max(std::abs(want), Real(1e-8));
  return std::abs(got - want) / denom;
}

inline Real relative_error(const vcsp::PixelMatrix<Real>& got,
                           const vcsp::PixelMatrix<Real>& want) {
  const Real denom = std::max(want.norm(), Real(1e-8));
  return (got - want).norm() / denom;
}

// ---------------------------------------------------------------------------
// Brute-force Pareto peeling: repeatedly extract the non-dominated subset.

inline std::vector<std::vector<int>> brute_force_fronts(
    const std::vector<vcsp::Individual>& pop) {
  std::vector<int> alive(pop.size());
  std::iota(alive.begin(), alive.end(), 0);
  std::vector<std::vector<int>> fronts;
  while (!alive.empty()) {
    std::vector<int> front, rest;
    for (int p : alive) {
      bool dominated = false;
      for (int q : alive) {
        if (p != q && vcsp::dominates(*pop[q].objectives, *pop[p].objectives)) {
          dominated = true;
          break;
        }
      }
      (dominated ? rest : front).push_back(p);
    }
    fronts.push_back(std::move(front));
    alive = std::move(rest);
  }
  return fronts;
}

inline bool fronts_equal(const std::vector<std::vector<int>>& a,
                         const std::vector<std::vector<int>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<int> x = a[i], y = b[i];
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    if (x != y) return false;
  }
  return true;
}

}  // namespace testsupport
