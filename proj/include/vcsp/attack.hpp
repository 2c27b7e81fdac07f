#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcsp/model.hpp"
#include "vcsp/rng.hpp"
#include "vcsp/transforms.hpp"

namespace vcsp {

/// Variable-length genome of attack-kind codes.
struct AttackSequence {
  std::vector<int> genes;

  int length() const { return static_cast<int>(genes.size()); }
  bool operator==(const AttackSequence&) const = default;

  /// "2;1;0" (also accepts "[2,1,0]" and comma separators).
  static AttackSequence parse(const std::string& text);
  std::string str() const;
};

enum class DeltaInit {
  Uniform,   // uniform draw from the occurrence interval
  Midpoint,  // interval midpoint; diagnostic mode with no randomness
};

struct AttackStepConfig {
  int steps = 1;                 // sign-update iterations per component
  Real step_fraction = 0.5;      // step size as a fraction of the interval half-width
  bool early_stop = false;
  std::uint64_t seed = 0;
  DeltaInit init = DeltaInit::Uniform;
};

struct CompositeResult {
  std::vector<Image> adv_images;
  std::vector<int> predicted;
  std::vector<std::uint8_t> success;          // prediction != label
  std::vector<std::vector<Real>> deltas;      // per image, indexed by genome position;
                                              // NaN where a position was skipped
  std::vector<int> realized_order;            // positions in application order
};

/// Per-position bound: each position of kind g gets adapted_interval(g, count
/// of g in the sequence).
std::vector<ComponentInterval> occurrence_intervals(const AttackSequence& seq);

/// Uniform draw from [iv.lo, iv.hi].
Real init_delta(const Interval& iv, Rng& rng);

/// d(cross_entropy)/d(delta) via the chain rule: input gradient at the
/// transformed image dotted with the transform's parameter Jacobian.
Real grad_wrt_delta(const ModelParams& params, AttackKind kind, const Image& img,
                    Real delta, int label);

/// One ascent step: clip(delta + alpha * sign(grad)); sign(0) = 0.
Real sign_step(Real delta, Real grad, Real alpha, const Interval& iv);

/// T sign steps from a fresh init; returns the final delta and transformed image.
std::pair<Real, Image> attack_component(const ModelParams& params, AttackKind kind,
                                        const Image& img, int label, const Interval& iv,
                                        const AttackStepConfig& cfg, Rng& rng);

/// Applies the sequence in genome order, each component optimizing its delta
/// on the already-perturbed image.
CompositeResult run_fixed(const ModelParams& params, const AttackSequence& seq,
                          std::span<const Image> images, std::span<const int> labels,
                          const AttackStepConfig& cfg, int workers = 1);

/// Greedy batch ordering: at each step every unapplied position is tentatively
/// optimized on the current batch; the committed one leaves the fewest images
/// still classified correctly, with the greatest mean loss breaking ties.
/// Remaining ties commit the lowest position.
CompositeResult run_scheduled(const ModelParams& params, const AttackSequence& seq,
                              std::span<const Image> images, std::span<const int> labels,
                              const AttackStepConfig& cfg, int workers = 1);

}  // namespace vcsp
