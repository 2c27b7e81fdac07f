#include "vcsp/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vcsp {
namespace {

void check_genome(const AttackSequence& s, const SearchConfig& cfg) {
  for (int g : s.genes) {
    if (g < 0 || g >= cfg.space_size) throw std::logic_error("gene out of range");
  }
}

/// Truncate overlong genomes, pad short ones with random genes.
void repair(AttackSequence& s, const SearchConfig& cfg, Rng& rng) {
  if (s.length() > cfg.max_len) s.genes.resize(cfg.max_len);
  while (s.length() < cfg.space_size) {
    s.genes.push_back(static_cast<int>(rng.below(cfg.space_size)));
  }
}

const Individual& tournament(const std::vector<Individual>& pop, Rng& rng) {
  const Individual& a = pop[rng.below(pop.size())];
  const Individual& b = pop[rng.below(pop.size())];
  if (a.rank != b.rank) return a.rank < b.rank ? a : b;
  return b.crowding > a.crowding ? b : a;
}

void mutate(AttackSequence& s, const SearchConfig& cfg, Rng& rng) {
  const int k = s.length();
  if (k == 0) return;
  const Real per_gene = 1.0 / static_cast<Real>(k);
  for (int i = 0; i < k; ++i) {
    if (rng.uniform() < per_gene) {
      s.genes[i] = static_cast<int>(rng.below(cfg.space_size));
    }
  }
  if (rng.uniform() < 0.2) {
    const int pos = static_cast<int>(rng.below(s.genes.size() + 1));
    s.genes.insert(s.genes.begin() + pos, static_cast<int>(rng.below(cfg.space_size)));
  }
  if (rng.uniform() < 0.2 && !s.genes.empty()) {
    const int pos = static_cast<int>(rng.below(s.genes.size()));
    s.genes.erase(s.genes.begin() + pos);
  }
}

}  // namespace

AttackSequence random_genome(const SearchConfig& cfg, Rng& rng) {
  if (cfg.space_size < 1 || cfg.max_len < cfg.space_size) {
    throw std::invalid_argument("random_genome: need 1 <= space_size <= max_len");
  }
  AttackSequence s;
  const int len = rng.range(cfg.space_size, cfg.max_len);
  s.genes.resize(len);
  for (int& g : s.genes) g = static_cast<int>(rng.below(cfg.space_size));
  return s;
}

bool dominates(const Objectives& a, const Objectives& b) {
  return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

std::vector<std::vector<int>> fast_nondominated_sort(std::span<const Individual> pop) {
  const int n = static_cast<int>(pop.size());
  for (const Individual& ind : pop) {
    if (!ind.objectives) throw std::logic_error("fast_nondominated_sort: unevaluated individual");
  }
  std::vector<std::vector<int>> dominated(n);
  std::vector<int> dom_count(n, 0);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(*pop[p].objectives, *pop[q].objectives)) {
        dominated[p].push_back(q);
      } else if (dominates(*pop[q].objectives, *pop[p].objectives)) {
        ++dom_count[p];
      }
    }
  }
  std::vector<std::vector<int>> fronts;
  std::vector<int> current;
  for (int p = 0; p < n; ++p) {
    if (dom_count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int p : fronts.back()) {
      for (int q : dominated[p]) {
        if (--dom_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<Real> crowding_distance(std::span<const Individual> pop,
                                    std::span<const int> front) {
  const std::size_t s = front.size();
  std::vector<Real> dist(s, 0.0);
  if (s <= 2) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<Real>::infinity());
    return dist;
  }
  std::vector<std::size_t> order(s);
  for (int m = 0; m < 2; ++m) {
    auto value = [&](std::size_t fi) {
      const Objectives& o = *pop[front[fi]].objectives;
      return m == 0 ? o.f1 : o.f2;
    };
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    dist[order.front()] = std::numeric_limits<Real>::infinity();
    dist[order.back()] = std::numeric_limits<Real>::infinity();
    const Real range = value(order.back()) - value(order.front());
    if (range <= 0.0) continue;
    for (std::size_t i = 1; i + 1 < s; ++i) {
      if (std::isinf(dist[order[i]])) continue;
      dist[order[i]] += (value(order[i + 1]) - value(order[i - 1])) / range;
    }
  }
  return dist;
}

std::vector<Individual> make_offspring(const std::vector<Individual>& pop,
                                       const SearchConfig& cfg, Rng& rng) {
  std::vector<Individual> off;
  off.reserve(cfg.population);
  while (static_cast<int>(off.size()) < cfg.population) {
    const AttackSequence& p1 = tournament(pop, rng).genome;
    const AttackSequence& p2 = tournament(pop, rng).genome;
    AttackSequence c1 = p1, c2 = p2;
    if (rng.uniform() < cfg.crossover_rate) {
      // independent cut points so offspring lengths can leave the parents'
      const int cut1 = static_cast<int>(rng.below(p1.genes.size() + 1));
      const int cut2 = static_cast<int>(rng.below(p2.genes.size() + 1));
      c1.genes.assign(p1.genes.begin(), p1.genes.begin() + cut1);
      c1.genes.insert(c1.genes.end(), p2.genes.begin() + cut2, p2.genes.end());
      c2.genes.assign(p2.genes.begin(), p2.genes.begin() + cut2);
      c2.genes.insert(c2.genes.end(), p1.genes.begin() + cut1, p1.genes.end());
    }
    for (AttackSequence* c : {&c1, &c2}) {
      if (rng.uniform() < cfg.mutation_rate) mutate(*c, cfg, rng);
      repair(*c, cfg, rng);
      check_genome(*c, cfg);
      if (static_cast<int>(off.size()) < cfg.population) {
        off.push_back(Individual{*c, std::nullopt, -1, 0.0});
      }
    }
  }
  return off;
}

std::vector<AttackSequence> neighborhood(const AttackSequence& x, int j, int space_size) {
  if (j < 0 || j >= x.length()) throw std::out_of_range("neighborhood: position out of range");
  std::vector<AttackSequence> out;
  out.reserve(space_size - 1);
  for (int m = 0; m < space_size; ++m) {
    if (m == x.genes[j]) continue;
    AttackSequence n = x;
    n.genes[j] = m;
    out.push_back(std::move(n));
  }
  return out;
}

NsResult neighborhood_search(const AttackSequence& x, const ObjectiveFn& f,
                             const SearchConfig& cfg, Rng& rng) {
  auto evaluate = [&](const AttackSequence& s) {
    const Objectives o = f(s);
    return std::pair<Objectives, Real>(o, scalar_fitness(o, cfg.lambda));
  };

  AttackSequence xg = x;
  auto [obj_g, fitness_g] = evaluate(xg);
  const int m = xg.length();
  const int k_max = std::min(m + cfg.outer_budget, cfg.max_len);

  NsResult result;
  for (int k = m; k <= k_max; ++k) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int j = 0; j < xg.length(); ++j) {
        const AttackSequence* best = nullptr;
        Objectives best_obj;
        Real best_fit = std::numeric_limits<Real>::infinity();
        // intervals are recomputed per candidate inside the evaluator
        const auto candidates = neighborhood(xg, j, cfg.space_size);
        for (const AttackSequence& cand : candidates) {
          auto [o, fit] = evaluate(cand);
          if (fit < best_fit) {
            best_fit = fit;
            best_obj = o;
            best = &cand;
          }
        }
        if (best && best_fit < fitness_g) {
          xg = *best;
          obj_g = best_obj;
          fitness_g = best_fit;
          improved = true;
        }
      }
    }
    result.archive.push_back({xg, obj_g, fitness_g});
    if (k < k_max) {
      xg.genes.push_back(static_cast<int>(rng.below(cfg.space_size)));
      std::tie(obj_g, fitness_g) = evaluate(xg);
    }
  }

  const NsArchiveEntry* best = &result.archive.front();
  for (const NsArchiveEntry& e : result.archive) {
    if (e.fitness < best->fitness) best = &e;
  }
  result.best = best->genome;
  result.objectives = best->objectives;
  result.fitness = best->fitness;
  return result;
}

namespace {

/// NSGA-II environmental selection: fill whole fronts, split the last one by
/// descending crowding distance.
std::vector<Individual> select_population(std::vector<Individual> merged, int n) {
  const auto fronts = fast_nondominated_sort(merged);
  std::vector<Individual> next;
  next.reserve(n);
  for (std::size_t fi = 0; fi < fronts.size() && static_cast<int>(next.size()) < n; ++fi) {
    const auto& front = fronts[fi];
    const auto dist = crowding_distance(merged, front);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    for (std::size_t oi : order) {
      if (static_cast<int>(next.size()) >= n) break;
      Individual ind = merged[front[oi]];
      ind.rank = static_cast<int>(fi);
      ind.crowding = dist[oi];
      next.push_back(std::move(ind));
    }
  }
  return next;
}

bool better_recommendation(const Individual& a, Real fa, const Individual& b, Real fb) {
  if (fa != fb) return fa < fb;
  if (a.genome.length() != b.genome.length()) return a.genome.length() < b.genome.length();
  return a.genome.genes < b.genome.genes;
}

}  // namespace

SearchResult mes_vcsp(const ObjectiveFn& f, const SearchConfig& cfg,
                      const GenerationLogger& log) {
  if (cfg.population < 2 || cfg.generations < 1) {
    throw std::invalid_argument("mes_vcsp: need population >= 2 and generations >= 1");
  }
  Rng rng(derive_seed(cfg.seed, 0x5ea7c4u));

  std::vector<Individual> pop;
  pop.reserve(cfg.population);
  for (int i = 0; i < cfg.population; ++i) {
    pop.push_back(Individual{random_genome(cfg, rng), std::nullopt, -1, 0.0});
  }
  auto evaluate_all = [&](std::vector<Individual>& v) {
    for (Individual& ind : v) {
      if (!ind.objectives) ind.objectives = f(ind.genome);
    }
  };
  evaluate_all(pop);
  pop = select_population(std::move(pop), cfg.population);  // assign rank/crowding

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<Individual> off = make_offspring(pop, cfg, rng);
    evaluate_all(off);
    std::vector<Individual> merged = std::move(pop);
    merged.insert(merged.end(), std::make_move_iterator(off.begin()),
                  std::make_move_iterator(off.end()));
    pop = select_population(std::move(merged), cfg.population);

    // neighborhood search on one random rank-0 individual
    std::vector<int> front0;
    for (int i = 0; i < static_cast<int>(pop.size()); ++i) {
      if (pop[i].rank == 0) front0.push_back(i);
    }
    const int pick = front0[rng.below(front0.size())];
    const NsResult ns = neighborhood_search(pop[pick].genome, f, cfg, rng);
    if (ns.fitness < scalar_fitness(*pop[pick].objectives, cfg.lambda)) {
      pop[pick].genome = ns.best;
      pop[pick].objectives = ns.objectives;
    }

    if (log) {
      GenerationStats st;
      st.generation = gen;
      Real bf1 = std::numeric_limits<Real>::infinity();
      Real bf2 = bf1, bfit = bf1;
      int fsz = 0;
      for (const Individual& ind : pop) {
        if (ind.rank == 0) ++fsz;
        bf1 = std::min(bf1, ind.objectives->f1);
        bf2 = std::min(bf2, ind.objectives->f2);
        bfit = std::min(bfit, scalar_fitness(*ind.objectives, cfg.lambda));
      }
      st.front_size = fsz;
      st.best_f1 = bf1;
      st.best_f2 = bf2;
      st.best_fitness = bfit;
      log(st);
    }
  }

  const auto fronts = fast_nondominated_sort(pop);
  SearchResult result;
  for (int idx : fronts.front()) {
    const bool seen = std::any_of(result.front.begin(), result.front.end(), [&](const Individual& e) {
      return e.genome == pop[idx].genome;
    });
    if (!seen) {
      Individual ind = pop[idx];
      ind.rank = 0;
      result.front.push_back(std::move(ind));
    }
  }

  const Individual* best = &result.front.front();
  Real best_fit = scalar_fitness(*best->objectives, cfg.lambda);
  for (const Individual& ind : result.front) {
    const Real fit = scalar_fitness(*ind.objectives, cfg.lambda);
    if (better_recommendation(ind, fit, *best, best_fit)) {
      best = &ind;
      best_fit = fit;
    }
  }
  result.best = best->genome;
  result.best_objectives = *best->objectives;
  result.best_fitness = best_fit;
  return result;
}

RsResult random_search(const ObjectiveFn& f, int budget, const SearchConfig& cfg) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  Rng rng(derive_seed(cfg.seed, 0xa2a11d0u));
  RsResult best;
  best.fitness = std::numeric_limits<Real>::infinity();
  for (int b = 0; b < budget; ++b) {
    AttackSequence g = random_genome(cfg, rng);
    const Objectives o = f(g);
    const Real fit = scalar_fitness(o, cfg.lambda);
    if (fit < best.fitness) {
      best.best = std::move(g);
      best.objectives = o;
      best.fitness = fit;
    }
  }
  return best;
}

}  // namespace vcsp
