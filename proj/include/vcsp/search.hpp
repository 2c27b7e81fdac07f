#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vcsp/evaluation.hpp"
#include "vcsp/rng.hpp"

namespace vcsp {

struct Individual {
  AttackSequence genome;
  std::optional<Objectives> objectives;
  int rank = -1;
  Real crowding = 0.0;
};

struct SearchConfig {
  int population = 20;
  int generations = 20;
  Real crossover_rate = 0.6;
  Real mutation_rate = 1.0;
  Real lambda = 1.0;       // weight of f2 in the scalar fitness
  int outer_budget = 1;    // length-growing iterations of the neighborhood search
  int space_size = 5;      // l_sp: genes range over {0, ..., space_size-1}
  int max_len = 8;         // l_max
  std::uint64_t seed = 0;
};

/// Deterministic objective source; must return identical values for
/// identical genomes within one run.
using ObjectiveFn = std::function<Objectives(const AttackSequence&)>;

/// f1 + lambda * f2, minimized everywhere.
inline Real scalar_fitness(const Objectives& obj, Real lambda) {
  return obj.f1 + lambda * obj.f2;
}

/// Length uniform in [space_size, max_len], genes uniform in [0, space_size).
AttackSequence random_genome(const SearchConfig& cfg, Rng& rng);

/// a dominates b iff a is <= on both objectives and < on at least one.
bool dominates(const Objectives& a, const Objectives& b);

/// Successive non-dominated fronts (indices into the population, minimization
/// on both objectives). Throws std::logic_error on unevaluated individuals.
std::vector<std::vector<int>> fast_nondominated_sort(std::span<const Individual> pop);

/// NSGA-II crowding distances for one front; boundary individuals per
/// objective get infinity, zero-range objectives contribute 0.
std::vector<Real> crowding_distance(std::span<const Individual> pop,
                                    std::span<const int> front);

/// Binary tournament on (rank, crowding), one-point crossover with independent
/// cut points, per-gene resampling plus insert/delete mutation, and repair of
/// lengths into [space_size, max_len].
std::vector<Individual> make_offspring(const std::vector<Individual>& pop,
                                       const SearchConfig& cfg, Rng& rng);

/// All sequences differing from x in exactly position j.
std::vector<AttackSequence> neighborhood(const AttackSequence& x, int j, int space_size);

struct NsArchiveEntry {
  AttackSequence genome;
  Objectives objectives;
  Real fitness = 0.0;
};

struct NsResult {
  AttackSequence best;
  Objectives objectives;
  Real fitness = 0.0;
  std::vector<NsArchiveEntry> archive;
};

/// Local descent over single-gene substitutions with a length-growing outer
/// loop; returns the best archived sequence.
NsResult neighborhood_search(const AttackSequence& x, const ObjectiveFn& f,
                             const SearchConfig& cfg, Rng& rng);

struct GenerationStats {
  int generation = 0;
  int front_size = 0;
  Real best_f1 = 0.0;
  Real best_f2 = 0.0;
  Real best_fitness = 0.0;
};

using GenerationLogger = std::function<void(const GenerationStats&)>;

struct SearchResult {
  std::vector<Individual> front;  // final rank-0 set, deduplicated by genome
  AttackSequence best;
  Objectives best_objectives;
  Real best_fitness = 0.0;
};

/// NSGA-II generations interleaved with neighborhood search on a random
/// rank-0 individual. The recommended best minimizes scalar fitness, then
/// genome length, then the genome lexicographically.
SearchResult mes_vcsp(const ObjectiveFn& f, const SearchConfig& cfg,
                      const GenerationLogger& log = {});

struct RsResult {
  AttackSequence best;
  Objectives objectives;
  Real fitness = 0.0;
};

/// Evaluates `budget` random genomes and returns the scalar-fitness minimum.
RsResult random_search(const ObjectiveFn& f, int budget, const SearchConfig& cfg);

}  // namespace vcsp
