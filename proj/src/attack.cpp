#include "vcsp/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vcsp/parallel.hpp"

namespace vcsp {

AttackSequence AttackSequence::parse(const std::string& text) {
  AttackSequence seq;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::size_t pos = 0;
    int v;
    try {
      v = std::stoi(cur, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad attack sequence token: '" + cur + "'");
    }
    if (pos != cur.size() || v < 0) {
      throw std::invalid_argument("bad attack sequence token: '" + cur + "'");
    }
    seq.genes.push_back(v);
    cur.clear();
  };
  for (char ch : text) {
    if (ch == '[' || ch == ']' || ch == ' ') continue;
    if (ch == ';' || ch == ',') {
      flush();
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return seq;
}

std::string AttackSequence::str() const {
  std::string out;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (i) out.push_back(';');
    out += std::to_string(genes[i]);
  }
  return out;
}

std::vector<ComponentInterval> occurrence_intervals(const AttackSequence& seq) {
  int counts[kNumAttackKinds] = {};
  for (int g : seq.genes) {
    attack_kind_from_code(g);
    ++counts[g];
  }
  std::vector<ComponentInterval> out;
  out.reserve(seq.genes.size());
  for (int g : seq.genes) {
    const AttackKind k = static_cast<AttackKind>(g);
    out.push_back({k, counts[g], adapted_interval(k, counts[g])});
  }
  return out;
}

Real init_delta(const Interval& iv, Rng& rng) { return rng.uniform(iv.lo, iv.hi); }

Real grad_wrt_delta(const ModelParams& params, AttackKind kind, const Image& img,
                    Real delta, int label) {
  const Image transformed = apply(kind, img, delta);
  const PixelMatrix<Real> g = input_gradient(params, transformed, label);
  const PixelMatrix<Real> jac = param_jacobian(kind, img, delta);
  return (g.array() * jac.array()).sum();
}

Real sign_step(Real delta, Real grad, Real alpha, const Interval& iv) {
  const Real s = grad > 0.0 ? 1.0 : (grad < 0.0 ? -1.0 : 0.0);
  return clip_interval(delta + alpha * s, iv);
}

std::pair<Real, Image> attack_component(const ModelParams& params, AttackKind kind,
                                        const Image& img, int label, const Interval& iv,
                                        const AttackStepConfig& cfg, Rng& rng) {
  Real delta = cfg.init == DeltaInit::Midpoint ? iv.mid() : init_delta(iv, rng);
  const Real alpha = cfg.step_fraction * 0.5 * iv.width();
  for (int t = 0; t < cfg.steps; ++t) {
    const Real g = grad_wrt_delta(params, kind, img, delta, label);
    delta = sign_step(delta, g, alpha, iv);
  }
  return {delta, apply(kind, img, delta)};
}

namespace {

CompositeResult make_result(std::size_t n, int k) {
  CompositeResult r;
  r.adv_images.resize(n);
  r.predicted.assign(n, -1);
  r.success.assign(n, 0);
  r.deltas.assign(n, std::vector<Real>(k, std::numeric_limits<Real>::quiet_NaN()));
  return r;
}

}  // namespace

CompositeResult run_fixed(const ModelParams& params, const AttackSequence& seq,
                          std::span<const Image> images, std::span<const int> labels,
                          const AttackStepConfig& cfg, int workers) {
  if (images.size() != labels.size()) {
    throw std::invalid_argument("run_fixed: images/labels misaligned");
  }
  const auto ivs = occurrence_intervals(seq);
  const int k = seq.length();
  CompositeResult result = make_result(images.size(), k);
  result.realized_order.resize(k);
  for (int p = 0; p < k; ++p) result.realized_order[p] = p;

  parallel_for(images.size(), workers, [&](std::size_t i) {
    Image cur = images[i];
    for (int p = 0; p < k; ++p) {
      Rng rng(stream_seed(cfg.seed, i, static_cast<std::uint64_t>(p)));
      auto [delta, out] =
          attack_component(params, ivs[p].kind, cur, labels[i], ivs[p].iv, cfg, rng);
      cur = std::move(out);
      result.deltas[i][p] = delta;
      if (cfg.early_stop && predict(params, cur) != labels[i]) break;
    }
    result.adv_images[i] = std::move(cur);
    result.predicted[i] = predict(params, result.adv_images[i]);
    result.success[i] = result.predicted[i] != labels[i] ? 1 : 0;
  });
  return result;
}

CompositeResult run_scheduled(const ModelParams& params, const AttackSequence& seq,
                              std::span<const Image> images, std::span<const int> labels,
                              const AttackStepConfig& cfg, int workers) {
  if (images.size() != labels.size()) {
    throw std::invalid_argument("run_scheduled: images/labels misaligned");
  }
  const auto ivs = occurrence_intervals(seq);
  const int k = seq.length();
  const std::size_t n = images.size();
  CompositeResult result = make_result(n, k);

  std::vector<Image> current(images.begin(), images.end());
  std::vector<std::uint8_t> active(n, 1);
  if (cfg.early_stop) {
    for (std::size_t i = 0; i < n; ++i) {
      if (predict(params, current[i]) != labels[i]) active[i] = 0;
    }
  }

  std::vector<int> remaining(k);
  for (int p = 0; p < k; ++p) remaining[p] = p;

  while (!remaining.empty()) {
    int best_pos = -1;
    std::size_t best_correct = n + 1;
    double best_loss = -std::numeric_limits<double>::infinity();
    std::vector<Image> best_images;
    std::vector<Real> best_deltas;

    for (int p : remaining) {
      std::vector<Image> cand(n);
      std::vector<Real> cand_deltas(n, std::numeric_limits<Real>::quiet_NaN());
      std::vector<double> losses(n, 0.0);
      std::vector<std::uint8_t> correct(n, 0);
      parallel_for(n, workers, [&](std::size_t i) {
        if (!active[i]) {
          cand[i] = current[i];
          return;
        }
        // The stream depends only on (seed, image, position), so a tentative
        // run and the eventual commit see the same init regardless of order.
        Rng rng(stream_seed(cfg.seed, i, static_cast<std::uint64_t>(p)));
        auto [delta, out] =
            attack_component(params, ivs[p].kind, current[i], labels[i], ivs[p].iv, cfg, rng);
        const Logits logits = forward_one(params, out);
        losses[i] = cross_entropy(logits, labels[i]);
        int arg = 0;
        for (int c = 1; c < logits.size(); ++c) {
          if (logits(c) > logits(arg)) arg = c;
        }
        correct[i] = arg == labels[i] ? 1 : 0;
        cand[i] = std::move(out);
        cand_deltas[i] = delta;
      });
      // strongest batch effect first: fewest still-correct images, then the
      // greatest mean loss as a continuous tiebreak
      double mean_loss = 0.0;
      std::size_t n_active = 0, n_correct = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) {
          mean_loss += losses[i];
          n_correct += correct[i];
          ++n_active;
        }
      }
      mean_loss = n_active ? mean_loss / static_cast<double>(n_active) : 0.0;
      if (n_correct < best_correct ||
          (n_correct == best_correct && mean_loss > best_loss)) {
        best_correct = n_correct;
        best_loss = mean_loss;
        best_pos = p;
        best_images = std::move(cand);
        best_deltas = std::move(cand_deltas);
      }
    }

    current = std::move(best_images);
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) result.deltas[i][best_pos] = best_deltas[i];
    }
    result.realized_order.push_back(best_pos);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best_pos));

    if (cfg.early_stop) {
      parallel_for(n, workers, [&](std::size_t i) {
        if (active[i] && predict(params, current[i]) != labels[i]) active[i] = 0;
      });
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    result.adv_images[i] = std::move(current[i]);
    result.predicted[i] = predict(params, result.adv_images[i]);
    result.success[i] = result.predicted[i] != labels[i] ? 1 : 0;
  }
  return result;
}

}  // namespace vcsp
