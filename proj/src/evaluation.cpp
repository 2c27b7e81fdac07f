#include "vcsp/evaluation.hpp"

#include <chrono>
#include <stdexcept>

namespace vcsp {

Real robust_accuracy(std::span<const int> adv_predictions, std::span<const int> labels) {
  if (adv_predictions.empty() || adv_predictions.size() != labels.size()) {
    throw std::invalid_argument("robust_accuracy: empty or misaligned inputs");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (adv_predictions[i] == labels[i]) ++correct;
  }
  return static_cast<Real>(correct) / static_cast<Real>(labels.size());
}

Real l2_distance(std::span<const Image> originals, std::span<const Image> adversarials) {
  if (originals.size() != adversarials.size()) {
    throw std::invalid_argument("l2_distance: misaligned inputs");
  }
  if (originals.empty()) throw std::invalid_argument("l2_distance: empty inputs");
  Real sum = 0.0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    sum += mse(originals[i], adversarials[i]);
  }
  return sum / static_cast<Real>(originals.size());
}

Real attack_success_rate(std::span<const int> clean_predictions,
                         std::span<const int> adv_predictions,
                         std::span<const int> labels) {
  if (clean_predictions.size() != labels.size() || adv_predictions.size() != labels.size()) {
    throw std::invalid_argument("attack_success_rate: misaligned inputs");
  }
  std::size_t clean_correct = 0, flipped = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (clean_predictions[i] == labels[i]) {
      ++clean_correct;
      if (adv_predictions[i] != labels[i]) ++flipped;
    }
  }
  if (clean_correct == 0) {
    throw std::domain_error("attack_success_rate: no clean-correct images");
  }
  return static_cast<Real>(flipped) / static_cast<Real>(clean_correct);
}

Evaluator::Evaluator(ModelParams params, std::vector<Image> images, std::vector<int> labels,
                     EvalConfig cfg, std::string slice_id)
    : params_(std::move(params)),
      images_(std::move(images)),
      labels_(std::move(labels)),
      cfg_(std::move(cfg)),
      slice_id_(std::move(slice_id)) {
  if (images_.empty() || images_.size() != labels_.size()) {
    throw std::invalid_argument("Evaluator: empty or misaligned slice");
  }
  clean_preds_.resize(images_.size());
  for (std::size_t i = 0; i < images_.size(); ++i) {
    clean_preds_[i] = predict(params_, images_[i]);
  }
}

const std::vector<int>& Evaluator::clean_predictions() { return clean_preds_; }

Real Evaluator::clean_accuracy() {
  const auto& preds = clean_predictions();
  return robust_accuracy(preds, labels_);
}

EvalReport Evaluator::compute(const AttackSequence& seq) const {
  const auto t0 = std::chrono::steady_clock::now();
  CompositeResult res;
  if (seq.genes.empty()) {
    res.adv_images.assign(images_.begin(), images_.end());
    res.predicted = clean_preds_;
  } else if (cfg_.mode == "scheduled") {
    res = run_scheduled(params_, seq, images_, labels_, cfg_.step, cfg_.workers);
  } else {
    res = run_fixed(params_, seq, images_, labels_, cfg_.step, cfg_.workers);
  }

  EvalReport rep;
  rep.sequence = seq;
  rep.mode = cfg_.mode;
  rep.n_total = static_cast<int>(images_.size());
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (clean_preds_[i] == labels_[i]) ++rep.n_clean_correct;
    if (res.predicted[i] == labels_[i]) ++rep.n_adv_correct;
  }
  rep.robust_accuracy = robust_accuracy(res.predicted, labels_);
  // A slice with no clean-correct image leaves the rate undefined; report 0.
  rep.asr = rep.n_clean_correct > 0
                ? attack_success_rate(clean_preds_, res.predicted, labels_)
                : 0.0;
  rep.l2 = l2_distance(images_, res.adv_images);
  rep.wall_time =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

Objectives Evaluator::evaluate(const AttackSequence& seq) {
  const EvalReport rep = report(seq);
  return {rep.robust_accuracy, rep.l2};
}

EvalReport Evaluator::report(const AttackSequence& seq) {
  const std::string key = seq.str();
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  EvalReport rep = compute(seq);
  {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(rep));
    if (inserted) ++evaluations_;
    return it->second;
  }
}

std::size_t Evaluator::evaluation_count() const {
  std::lock_guard lock(mutex_);
  return evaluations_;
}

std::size_t Evaluator::hit_count() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::pair<EvalReport, Objectives> evaluate_sequence(const ModelParams& params,
                                                    const AttackSequence& seq,
                                                    std::span<const Image> images,
                                                    std::span<const int> labels,
                                                    const EvalConfig& cfg) {
  Evaluator ev(params, std::vector<Image>(images.begin(), images.end()),
               std::vector<int>(labels.begin(), labels.end()), cfg);
  EvalReport rep = ev.report(seq);
  Objectives obj{rep.robust_accuracy, rep.l2};
  return {std::move(rep), obj};
}

}  // namespace vcsp
