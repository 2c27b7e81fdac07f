#pragma once

#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vcsp/attack.hpp"

namespace vcsp {

/// Metrics of one sequence on one dataset slice.
struct EvalReport {
  int n_total = 0;
  int n_adv_correct = 0;
  int n_clean_correct = 0;
  Real robust_accuracy = 0.0;
  Real asr = 0.0;
  Real l2 = 0.0;
  Real wall_time = 0.0;  // seconds; excluded from determinism contracts
  std::string mode = "fixed";
  AttackSequence sequence;
};

struct Objectives {
  Real f1 = 0.0;  // robust accuracy
  Real f2 = 0.0;  // mean per-image MSE
};

/// Fraction of images predicted correctly after attack, over all images.
Real robust_accuracy(std::span<const int> adv_predictions, std::span<const int> labels);

/// Mean over images of per-image MSE.
Real l2_distance(std::span<const Image> originals, std::span<const Image> adversarials);

/// Fraction of originally-correct images that are misclassified after attack.
/// Throws if no image is clean-correct.
Real attack_success_rate(std::span<const int> clean_predictions,
                         std::span<const int> adv_predictions,
                         std::span<const int> labels);

struct EvalConfig {
  std::string mode = "fixed";  // "fixed" | "scheduled"
  AttackStepConfig step;
  int workers = 1;
};

/// Memoizing evaluator over a fixed (model, slice, config). Objectives are
/// cached by genome; the cache never exposes partially computed entries.
class Evaluator {
 public:
  Evaluator(ModelParams params, std::vector<Image> images, std::vector<int> labels,
            EvalConfig cfg, std::string slice_id = "slice");

  Objectives evaluate(const AttackSequence& seq);
  EvalReport report(const AttackSequence& seq);

  const std::vector<int>& clean_predictions();
  Real clean_accuracy();

  std::size_t evaluation_count() const;  // distinct genomes computed
  std::size_t hit_count() const;
  const std::string& slice_id() const { return slice_id_; }
  const ModelParams& params() const { return params_; }
  std::span<const Image> images() const { return images_; }
  std::span<const int> labels() const { return labels_; }
  const EvalConfig& config() const { return cfg_; }

 private:
  EvalReport compute(const AttackSequence& seq) const;

  ModelParams params_;
  std::vector<Image> images_;
  std::vector<int> labels_;
  EvalConfig cfg_;
  std::string slice_id_;
  std::vector<int> clean_preds_;
  std::unordered_map<std::string, EvalReport> cache_;
  std::size_t evaluations_ = 0;
  std::size_t hits_ = 0;
  mutable std::mutex mutex_;
};

/// One-shot evaluation without a persistent cache.
std::pair<EvalReport, Objectives> evaluate_sequence(const ModelParams& params,
                                                    const AttackSequence& seq,
                                                    std::span<const Image> images,
                                                    std::span<const int> labels,
                                                    const EvalConfig& cfg);

}  // namespace vcsp
