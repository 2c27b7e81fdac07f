#include <doctest.h>

#include "test_support.hpp"
#include "vcsp/dataio.hpp"
#include "vcsp/evaluation.hpp"

using namespace vcsp;

TEST_CASE("robust accuracy arithmetic") {
  std::vector<int> labels(10, 0);
  std::vector<int> preds(10, 1);
  for (int i = 0; i < 4; ++i) preds[i] = 0;
  CHECK(robust_accuracy(preds, labels) == doctest::Approx(0.4));

  std::vector<int> all_wrong(10, 2);
  CHECK(robust_accuracy(all_wrong, labels) == 0.0);
  CHECK(robust_accuracy(labels, labels) == 1.0);

  CHECK_THROWS_AS(robust_accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("l2 distance against a brute-force oracle") {
  Rng rng(3);
  std::vector<Image> a, b;
  for (int i = 0; i < 5; ++i) {
    a.push_back(testsupport::random_image(6, 6, rng));
    b.push_back(testsupport::random_image(6, 6, rng));
  }
  CHECK(l2_distance(a, a) == 0.0);

  Real acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    Real s = 0.0;
    for (Eigen::Index p = 0; p < a[i].pixels.rows(); ++p) {
      for (int c = 0; c < 3; ++c) {
        const Real d = a[i].pixels(p, c) - b[i].pixels(p, c);
        s += d * d;
      }
    }
    acc += s / (6 * 6 * 3);
  }
  acc /= 5;
  CHECK(l2_distance(a, b) == doctest::Approx(acc).epsilon(1e-12));

  std::vector<Image> uniform{Image::constant(4, 4, 0.5)};
  std::vector<Image> offset{Image::constant(4, 4, 0.6)};
  CHECK(l2_distance(uniform, offset) == doctest::Approx(0.01).epsilon(1e-9));

  std::vector<Image> wrong{Image::zero(4, 5)};
  CHECK_THROWS_AS(l2_distance(uniform, wrong), std::invalid_argument);
}

TEST_CASE("attack success rate over the clean-correct subset") {
  // 100 images: 80 clean-correct, 40 of those stay correct
  std::vector<int> labels(100, 0);
  std::vector<int> clean(100, 0);
  for (int i = 80; i < 100; ++i) clean[i] = 1;
  std::vector<int> adv(100, 1);
  for (int i = 0; i < 40; ++i) adv[i] = 0;
  CHECK(attack_success_rate(clean, adv, labels) == doctest::Approx(0.5));

  CHECK(attack_success_rate(clean, clean, labels) == 0.0);  // identity attack

  std::vector<int> none_correct(100, 1);
  CHECK_THROWS_AS(attack_success_rate(none_correct, adv, labels), std::domain_error);
}

TEST_CASE("asr definition is consistent on aggregate rates") {
  // clean 92.34%, RA 43.3% on 10000 images
  const int n = 10000, clean_correct = 9234, adv_correct = 4330;
  std::vector<int> labels(n, 0), clean(n, 1), adv(n, 1);
  for (int i = 0; i < clean_correct; ++i) clean[i] = 0;
  for (int i = 0; i < adv_correct; ++i) adv[i] = 0;

  CHECK(robust_accuracy(adv, labels) == doctest::Approx(0.433));
  const Real asr = attack_success_rate(clean, adv, labels);
  CHECK(std::abs(asr * 100.0 - 53.4) < 0.5);
}

TEST_CASE("evaluate_sequence metrics, determinism, and cache") {
  const Dataset ds = gen_synthetic(48, 4, 16, 71);
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 71;
  const ModelParams params = train(ds.images, ds.labels, 4, tc);

  EvalConfig cfg;
  cfg.step.seed = 5;

  Evaluator ev(params, ds.images, ds.labels, cfg);

  // empty sequence: f1 = clean accuracy, f2 = 0
  const Objectives id = ev.evaluate(AttackSequence{});
  CHECK(id.f1 == doctest::Approx(ev.clean_accuracy()).epsilon(1e-12));
  CHECK(id.f2 == 0.0);

  const AttackSequence seq = AttackSequence::parse("0;3;4");
  const EvalReport rep = ev.report(seq);
  CHECK(rep.n_total == 48);
  CHECK(rep.robust_accuracy == doctest::Approx(rep.n_adv_correct / 48.0));
  CHECK(rep.robust_accuracy >= 0.0);
  CHECK(rep.robust_accuracy <= 1.0);
  CHECK(rep.asr >= 0.0);
  CHECK(rep.asr <= 1.0);
  CHECK(rep.l2 >= 0.0);
  CHECK(rep.mode == "fixed");
  CHECK(rep.sequence == seq);

  // identical second call is a cache hit, not a recomputation
  const std::size_t evals_before = ev.evaluation_count();
  const std::size_t hits_before = ev.hit_count();
  const EvalReport rep2 = ev.report(seq);
  CHECK(ev.evaluation_count() == evals_before);
  CHECK(ev.hit_count() == hits_before + 1);
  CHECK(rep2.robust_accuracy == rep.robust_accuracy);
  CHECK(rep2.l2 == rep.l2);
  CHECK(rep2.wall_time == rep.wall_time);  // cached entry is returned as-is

  // a fresh evaluator with the same seed reproduces the metrics
  Evaluator ev2(params, ds.images, ds.labels, cfg);
  const Objectives again = ev2.evaluate(seq);
  CHECK(again.f1 == rep.robust_accuracy);
  CHECK(again.f2 == rep.l2);

  // identity minimizes f2
  CHECK(id.f2 <= again.f2);
}

TEST_CASE("random_search with budget 1 evaluates exactly one genome") {
  const Dataset ds = gen_synthetic(24, 4, 16, 87);
  TrainConfig tc;
  tc.epochs = 1;
  tc.seed = 87;
  const ModelParams params = train(ds.images, ds.labels, 4, tc);

  EvalConfig cfg;
  cfg.step.seed = 4;
  Evaluator ev(params, ds.images, ds.labels, cfg);
  SearchConfig sc;
  sc.seed = 4;
  random_search([&](const AttackSequence& s) { return ev.evaluate(s); }, 1, sc);
  CHECK(ev.evaluation_count() == 1);
}

TEST_CASE("metrics are worker-count independent") {
  const Dataset ds = gen_synthetic(32, 4, 16, 83);
  TrainConfig tc;
  tc.epochs = 1;
  tc.seed = 83;
  const ModelParams params = train(ds.images, ds.labels, 4, tc);

  const AttackSequence seq = AttackSequence::parse("2;1;0;1;4");
  for (const char* mode : {"fixed", "scheduled"}) {
    EvalConfig c1, c4;
    c1.mode = c4.mode = mode;
    c1.step.seed = c4.step.seed = 9;
    c1.workers = 1;
    c4.workers = 4;
    Evaluator e1(params, ds.images, ds.labels, c1);
    Evaluator e4(params, ds.images, ds.labels, c4);
    const Objectives o1 = e1.evaluate(seq);
    const Objectives o4 = e4.evaluate(seq);
    CHECK(o1.f1 == o4.f1);
    CHECK(o1.f2 == o4.f2);
  }
}
