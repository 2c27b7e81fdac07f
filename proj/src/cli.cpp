#include "vcsp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vcsp/dataio.hpp"
#include "vcsp/errors.hpp"
#include "vcsp/search.hpp"

namespace vcsp {
namespace {

std::string timestamp_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void validate_sequence(const AttackSequence& seq, int space, int lmax, bool check_len) {
  for (int g : seq.genes) {
    if (g < 0 || g >= space) {
      throw std::invalid_argument("sequence gene " + std::to_string(g) +
                                  " outside search space of size " + std::to_string(space));
    }
  }
  if (check_len && (seq.length() < space || seq.length() > lmax)) {
    throw std::invalid_argument("sequence length " + std::to_string(seq.length()) +
                                " outside [" + std::to_string(space) + ", " +
                                std::to_string(lmax) + "]");
  }
}

std::string interval_summary(const AttackSequence& seq) {
  std::string out;
  bool seen[kNumAttackKinds] = {};
  char buf[128];
  for (const ComponentInterval& ci : occurrence_intervals(seq)) {
    const int code = static_cast<int>(ci.kind);
    if (seen[code]) continue;
    seen[code] = true;
    if (!out.empty()) out += "; ";
    if (ci.kind == AttackKind::Rotation) {
      // degrees at the human boundary
      std::snprintf(buf, sizeof(buf), "%s x%d [%.4g deg, %.4g deg]",
                    attack_kind_name(ci.kind), ci.count, ci.iv.lo * 180.0 / kPi,
                    ci.iv.hi * 180.0 / kPi);
    } else {
      std::snprintf(buf, sizeof(buf), "%s x%d [%.6g, %.6g]", attack_kind_name(ci.kind),
                    ci.count, ci.iv.lo, ci.iv.hi);
    }
    out += buf;
  }
  return out;
}

struct AttackFlags {
  std::string mode = "fixed";
  int steps = 1;
  double step_fraction = 0.5;
  bool early_stop = false;
  int workers = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Attack mode: fixed | scheduled")
        ->check(CLI::IsMember({"fixed", "scheduled"}));
    cmd->add_option("--steps", steps, "Sign-update iterations per component")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--step-fraction", step_fraction,
                    "Step size as a fraction of the interval half-width")
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_flag("--early-stop", early_stop, "Skip remaining components once misclassified");
    cmd->add_option("--workers", workers, "Parallel per-image workers")
        ->check(CLI::PositiveNumber);
  }

  EvalConfig eval_config(std::uint64_t seed) const {
    EvalConfig cfg;
    cfg.mode = mode;
    cfg.step.steps = steps;
    cfg.step.step_fraction = step_fraction;
    cfg.step.early_stop = early_stop;
    cfg.step.seed = seed;
    cfg.workers = workers;
    return cfg;
  }
};

Dataset slice_dataset(const Dataset& ds, int count) {
  if (count <= 0 || count >= static_cast<int>(ds.size())) return ds;
  Dataset out;
  out.num_classes = ds.num_classes;
  out.images.assign(ds.images.begin(), ds.images.begin() + count);
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + count);
  return out;
}

void print_report(const EvalReport& rep) {
  std::printf("sequence: %s (length %d, mode %s)\n", rep.sequence.str().c_str(),
              rep.sequence.length(), rep.mode.c_str());
  if (!rep.sequence.genes.empty()) {
    std::printf("intervals: %s\n", interval_summary(rep.sequence).c_str());
  }
  std::printf("RA: %.4f  ASR: %.4f  L2: %.6g  time: %.2fs\n", rep.robust_accuracy,
              rep.asr, rep.l2, rep.wall_time);
}

int cmd_gen_data(const std::string& out, int n, int classes, int size, std::uint64_t seed) {
  const Dataset ds = gen_synthetic(n, classes, size, seed);
  write_dataset(out, ds);
  std::printf("wrote %zu records (%dx%dx3, %d classes) to %s\n", ds.size(), size, size,
              classes, out.c_str());
  return 0;
}

int cmd_train(const std::string& data, const std::string& out, int epochs,
              std::uint64_t seed) {
  const Dataset ds = read_any_dataset(data);
  if (ds.size() < 10) throw std::invalid_argument("train: dataset too small");

  // deterministic shuffled 90/10 split
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5417u));
  rng.shuffle(order);
  const std::size_t n_train = ds.size() - ds.size() / 10;
  std::vector<Image> train_images, held_images;
  std::vector<int> train_labels, held_labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_train) {
      train_images.push_back(ds.images[order[i]]);
      train_labels.push_back(ds.labels[order[i]]);
    } else {
      held_images.push_back(ds.images[order[i]]);
      held_labels.push_back(ds.labels[order[i]]);
    }
  }

  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  const ModelParams params = train(train_images, train_labels, ds.num_classes, cfg);
  save_model(out, params);
  const Real train_acc = accuracy(params, train_images, train_labels);
  const Real held_acc = accuracy(params, held_images, held_labels);
  std::printf("train accuracy: %.4f  held-out accuracy: %.4f\n", train_acc, held_acc);
  std::printf("saved model to %s\n", out.c_str());
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& seq_text, int space, int lmax, std::uint64_t seed,
             const AttackFlags& attack, int count, const std::string& report_path) {
  const AttackSequence seq = AttackSequence::parse(seq_text);
  validate_sequence(seq, space, lmax, true);
  const ModelParams params = load_model(model_path);
  const Dataset ds = slice_dataset(read_any_dataset(data_path), count);

  Evaluator ev(params, ds.images, ds.labels, attack.eval_config(seed));
  const EvalReport rep = ev.report(seq);
  print_report(rep);
  if (!report_path.empty()) {
    RunReport run;
    run.config = {{"command", "eval"}, {"seq", seq.genes}, {"mode", attack.mode},
                  {"steps", attack.steps}, {"space", space}, {"lmax", lmax}};
    run.reports.push_back(rep);
    run.seeds = {seed};
    run.started_at = run.finished_at = timestamp_now();
    write_report(report_path, run);
  }
  return 0;
}

struct SearchFlags {
  int pop = 20, gens = 20;
  double rc = 0.6, rm = 1.0, lambda = 1.0;
  int c = 1, lmax = 8, space = 5, slice = 128;

  SearchConfig config(std::uint64_t seed) const {
    SearchConfig cfg;
    cfg.population = pop;
    cfg.generations = gens;
    cfg.crossover_rate = rc;
    cfg.mutation_rate = rm;
    cfg.lambda = lambda;
    cfg.outer_budget = c;
    cfg.space_size = space;
    cfg.max_len = lmax;
    cfg.seed = seed;
    return cfg;
  }
};

int cmd_search(const std::string& model_path, const std::string& data_path,
               const SearchFlags& sf, std::uint64_t seed, const AttackFlags& attack,
               const std::string& front_path, const std::string& report_path) {
  const std::string started = timestamp_now();
  const ModelParams params = load_model(model_path);
  const Dataset ds = slice_dataset(read_any_dataset(data_path), sf.slice);
  Evaluator ev(params, ds.images, ds.labels, attack.eval_config(seed),
               "slice[0:" + std::to_string(ds.size()) + "]");
  const SearchConfig cfg = sf.config(seed);

  std::printf("search: pop=%d gens=%d rc=%g rm=%g lambda=%g c=%d lmax=%d space=%d slice=%zu seed=%llu\n",
              cfg.population, cfg.generations, cfg.crossover_rate, cfg.mutation_rate,
              cfg.lambda, cfg.outer_budget, cfg.max_len, cfg.space_size, ds.size(),
              static_cast<unsigned long long>(seed));

  const auto log = [](const GenerationStats& st) {
    nlohmann::json j{{"generation", st.generation},
                     {"front0_size", st.front_size},
                     {"best_f1", st.best_f1},
                     {"best_f2", st.best_f2},
                     {"best_fitness", st.best_fitness}};
    std::printf("%s\n", j.dump().c_str());
  };

  const SearchResult result = mes_vcsp([&](const AttackSequence& s) { return ev.evaluate(s); },
                                       cfg, log);

  // Front rows sorted for stable output; wall_time_s is reported as 0 here so
  // the CSV is byte-identical across runs and worker counts. Per-sequence
  // timing lives in the JSON report.
  std::vector<FrontRow> rows;
  std::vector<EvalReport> reports;
  for (const Individual& ind : result.front) {
    const EvalReport rep = ev.report(ind.genome);
    reports.push_back(rep);
    rows.push_back({ind.genome, rep.robust_accuracy, rep.l2, rep.asr, 0.0});
  }
  std::sort(rows.begin(), rows.end(), [](const FrontRow& a, const FrontRow& b) {
    if (a.f1 != b.f1) return a.f1 < b.f1;
    if (a.f2 != b.f2) return a.f2 < b.f2;
    return a.genome.genes < b.genome.genes;
  });

  if (!front_path.empty()) write_front(front_path, rows);
  if (!report_path.empty()) {
    RunReport run;
    run.config = {{"command", "search"}, {"pop", sf.pop}, {"gens", sf.gens},
                  {"rc", sf.rc}, {"rm", sf.rm}, {"lambda", sf.lambda}, {"c", sf.c},
                  {"lmax", sf.lmax}, {"space", sf.space}, {"slice", sf.slice},
                  {"steps", attack.steps}, {"mode", attack.mode}};
    run.reports = std::move(reports);
    run.front = rows;
    run.seeds = {seed};
    run.started_at = started;
    run.finished_at = timestamp_now();
    write_report(report_path, run);
  }

  std::printf("best sequence: %s  f1=%.4f f2=%.6g fitness=%.6g\n",
              result.best.str().c_str(), result.best_objectives.f1,
              result.best_objectives.f2, result.best_fitness);
  std::printf("front size: %zu  evaluations: %zu (cache hits %zu)\n", rows.size(),
              ev.evaluation_count(), ev.hit_count());
  return 0;
}

int cmd_nsearch(const std::string& model_path, const std::string& data_path,
                const std::string& seq_text, const SearchFlags& sf, std::uint64_t seed,
                const AttackFlags& attack, const std::string& report_path) {
  const AttackSequence seq = AttackSequence::parse(seq_text);
  validate_sequence(seq, sf.space, sf.lmax, true);
  const ModelParams params = load_model(model_path);
  const Dataset ds = slice_dataset(read_any_dataset(data_path), sf.slice);
  Evaluator ev(params, ds.images, ds.labels, attack.eval_config(seed));
  const SearchConfig cfg = sf.config(seed);

  Rng rng(derive_seed(seed, 0x95ea6cdu));
  const NsResult ns = neighborhood_search(
      seq, [&](const AttackSequence& s) { return ev.evaluate(s); }, cfg, rng);

  const EvalReport rep = ev.report(ns.best);
  print_report(rep);
  std::printf("fitness: %.6g  evaluations: %zu\n", ns.fitness, ev.evaluation_count());
  if (!report_path.empty()) {
    RunReport run;
    run.config = {{"command", "nsearch"}, {"seq", seq.genes}, {"lambda", sf.lambda},
                  {"c", sf.c}, {"lmax", sf.lmax}, {"space", sf.space}};
    run.reports.push_back(rep);
    run.seeds = {seed};
    run.started_at = run.finished_at = timestamp_now();
    write_report(report_path, run);
  }
  return 0;
}

int cmd_rsearch(const std::string& model_path, const std::string& data_path, int budget,
                const SearchFlags& sf, std::uint64_t seed, const AttackFlags& attack,
                const std::string& report_path) {
  const ModelParams params = load_model(model_path);
  const Dataset ds = slice_dataset(read_any_dataset(data_path), sf.slice);
  Evaluator ev(params, ds.images, ds.labels, attack.eval_config(seed));
  const SearchConfig cfg = sf.config(seed);

  const RsResult rs = random_search(
      [&](const AttackSequence& s) { return ev.evaluate(s); }, budget, cfg);

  const EvalReport rep = ev.report(rs.best);
  print_report(rep);
  std::printf("fitness: %.6g  evaluations: %zu\n", rs.fitness, ev.evaluation_count());
  if (!report_path.empty()) {
    RunReport run;
    run.config = {{"command", "rsearch"}, {"budget", budget}, {"lambda", sf.lambda},
                  {"lmax", sf.lmax}, {"space", sf.space}};
    run.reports.push_back(rep);
    run.seeds = {seed};
    run.started_at = run.finished_at = timestamp_now();
    write_report(report_path, run);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Search for near-optimal variable-length composite semantic perturbations"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Master seed (env VCSP_SEED)")->envname("VCSP_SEED");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic shape dataset");
  std::string gen_out = "data.vcspds";
  int gen_n = 2000, gen_classes = 4, gen_size = 16;
  gen->add_option("--out", gen_out, "Output dataset path");
  gen->add_option("--n", gen_n, "Record count")->check(CLI::PositiveNumber);
  gen->add_option("--classes", gen_classes, "Class count")->check(CLI::Range(2, 20));
  gen->add_option("--size", gen_size, "Image side length")->check(CLI::Range(8, 256));

  // train
  auto* tr = app.add_subcommand("train", "Train the reference classifier");
  std::string tr_data, tr_out = "model.vcspnn";
  int tr_epochs = 10;
  tr->add_option("--data", tr_data, "Dataset path")->required();
  tr->add_option("--out", tr_out, "Output model path");
  tr->add_option("--epochs", tr_epochs, "Training epochs")->check(CLI::PositiveNumber);

  // shared attack/search flags
  std::string ev_model, ev_data, ev_seq, ev_report;
  int ev_count = 0;
  AttackFlags ev_attack;
  SearchFlags sflags;

  auto* evc = app.add_subcommand("eval", "Evaluate one attack sequence");
  evc->add_option("--model", ev_model, "Model path")->required();
  evc->add_option("--data", ev_data, "Dataset path")->required();
  evc->add_option("--seq", ev_seq, "Attack sequence, e.g. \"2;1;0;1;4;2;3\"")->required();
  evc->add_option("--space", sflags.space, "Search-space size l_sp")->check(CLI::Range(3, 5));
  evc->add_option("--lmax", sflags.lmax, "Maximum sequence length")->check(CLI::PositiveNumber);
  evc->add_option("--count", ev_count, "Evaluate only the first N images (0 = all)");
  evc->add_option("--report", ev_report, "Write the EvalReport JSON here");
  ev_attack.add_to(evc);

  std::string se_model, se_data, se_front, se_report;
  AttackFlags se_attack;
  auto* sec = app.add_subcommand("search", "Run the multi-objective search");
  sec->add_option("--model", se_model, "Model path")->required();
  sec->add_option("--data", se_data, "Dataset path")->required();
  sec->add_option("--pop", sflags.pop, "Population size")->check(CLI::Range(2, 1000));
  sec->add_option("--gens", sflags.gens, "Generations")->check(CLI::PositiveNumber);
  sec->add_option("--rc", sflags.rc, "Crossover rate")->check(CLI::Range(0.0, 1.0));
  sec->add_option("--rm", sflags.rm, "Mutation rate")->check(CLI::Range(0.0, 1.0));
  sec->add_option("--lambda", sflags.lambda, "Fitness weight of the L2 objective")
      ->check(CLI::NonNegativeNumber);
  sec->add_option("--c", sflags.c, "Outer-loop budget of the neighborhood search")
      ->check(CLI::NonNegativeNumber);
  sec->add_option("--lmax", sflags.lmax, "Maximum sequence length")->check(CLI::PositiveNumber);
  sec->add_option("--space", sflags.space, "Search-space size l_sp")->check(CLI::Range(3, 5));
  sec->add_option("--slice", sflags.slice, "Evaluation slice size (0 = all)");
  sec->add_option("--front", se_front, "Write the Pareto front CSV here");
  sec->add_option("--report", se_report, "Write the run report JSON here");
  se_attack.add_to(sec);

  std::string ns_model, ns_data, ns_seq, ns_report;
  AttackFlags ns_attack;
  auto* nsc = app.add_subcommand("nsearch", "Neighborhood search from a given sequence");
  nsc->add_option("--model", ns_model, "Model path")->required();
  nsc->add_option("--data", ns_data, "Dataset path")->required();
  nsc->add_option("--seq", ns_seq, "Starting sequence")->required();
  nsc->add_option("--lambda", sflags.lambda, "Fitness weight of the L2 objective");
  nsc->add_option("--c", sflags.c, "Outer-loop budget")->check(CLI::NonNegativeNumber);
  nsc->add_option("--lmax", sflags.lmax, "Maximum sequence length")->check(CLI::PositiveNumber);
  nsc->add_option("--space", sflags.space, "Search-space size l_sp")->check(CLI::Range(3, 5));
  nsc->add_option("--slice", sflags.slice, "Evaluation slice size (0 = all)");
  nsc->add_option("--report", ns_report, "Write the EvalReport JSON here");
  ns_attack.add_to(nsc);

  std::string rs_model, rs_data, rs_report;
  int rs_budget = 10;
  AttackFlags rs_attack;
  auto* rsc = app.add_subcommand("rsearch", "Random-search baseline");
  rsc->add_option("--model", rs_model, "Model path")->required();
  rsc->add_option("--data", rs_data, "Dataset path")->required();
  rsc->add_option("--budget", rs_budget, "Number of random genomes")->check(CLI::PositiveNumber);
  rsc->add_option("--lambda", sflags.lambda, "Fitness weight of the L2 objective");
  rsc->add_option("--lmax", sflags.lmax, "Maximum sequence length")->check(CLI::PositiveNumber);
  rsc->add_option("--space", sflags.space, "Search-space size l_sp")->check(CLI::Range(3, 5));
  rsc->add_option("--slice", sflags.slice, "Evaluation slice size (0 = all)");
  rsc->add_option("--report", rs_report, "Write the EvalReport JSON here");
  rs_attack.add_to(rsc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_out, gen_n, gen_classes, gen_size, seed);
    if (tr->parsed()) return cmd_train(tr_data, tr_out, tr_epochs, seed);
    if (evc->parsed()) {
      return cmd_eval(ev_model, ev_data, ev_seq, sflags.space, sflags.lmax, seed,
                      ev_attack, ev_count, ev_report);
    }
    if (sec->parsed()) {
      return cmd_search(se_model, se_data, sflags, seed, se_attack, se_front, se_report);
    }
    if (nsc->parsed()) {
      return cmd_nsearch(ns_model, ns_data, ns_seq, sflags, seed, ns_attack, ns_report);
    }
    if (rsc->parsed()) {
      return cmd_rsearch(rs_model, rs_data, rs_budget, sflags, seed, rs_attack, rs_report);
    }
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}

}  // namespace vcsp
