#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compcap/capacity.hpp"
#include "compcap/isa_model.hpp"

namespace compcap {

// Capacities closer than this are treated as equal when ranking allocations.
inline constexpr double kTieThreshold = 1e-11;
inline constexpr std::size_t kMaxGridPoints = 1000000;

struct AccessClass {
  BigInt count_per_cell = 1;
  TimeExpression time;
};

struct MemoryKind {
  std::string name;
  Rational cell_cost = 1;
  std::vector<AccessClass> access_classes;
};

// Chooses cell counts per memory kind under a budget. Every cell of kind i
// adds, per register and access class (m, tau), m instructions of time tau.
struct MemoryDesignProblem {
  InstructionSet base;
  BigInt registers = 1;
  std::vector<MemoryKind> kinds;
  Rational budget = 0;
  ParameterBinding binding;

  // Throws ModelError on duplicate kind names, non-positive costs, a negative
  // budget or access times referring to parameters the base does not declare.
  void validate() const;
};

struct Allocation {
  std::vector<BigInt> cells;  // parallel to MemoryDesignProblem::kinds
  Rational total_cost = 0;
  CapacityResult capacity;
};

struct OptimizationResult {
  Allocation best;
  // Every allocation whose capacity was solved while searching, in
  // evaluation order (vertex mode: the pure allocations, then all-zero).
  std::vector<Allocation> candidates;
  // Other candidates within kTieThreshold of the best.
  std::vector<std::size_t> tied_with;
  // Vertex mode: number of knapsack refinement rounds that improved on the
  // best vertex.
  int refinements = 0;
};

MemoryDesignProblem problem_from_json(const nlohmann::json& doc,
                                      const std::optional<std::filesystem::path>& base_dir = std::nullopt);
MemoryDesignProblem parse_problem(std::string_view text,
                                  const std::optional<std::filesystem::path>& base_dir = std::nullopt);

BoundInstructionSet instantiate(const MemoryDesignProblem& problem, const std::vector<BigInt>& cells);

Rational allocation_cost(const MemoryDesignProblem& problem, const std::vector<BigInt>& cells);

Allocation evaluate_allocation(const MemoryDesignProblem& problem, std::vector<BigInt> cells,
                               double tolerance = kDefaultTolerance);

// Pure allocations floor(budget/c_i) for each kind plus the all-zero one;
// the best is then refined by integer knapsack rounds (see memory_optimizer.cpp).
OptimizationResult optimize_vertex(const MemoryDesignProblem& problem, double tolerance = kDefaultTolerance);

// Exhaustive search over n_i in {0, step, 2*step, ...} within the budget.
// Throws std::invalid_argument when the grid exceeds kMaxGridPoints.
OptimizationResult optimize_grid(const MemoryDesignProblem& problem, const BigInt& step,
                                 double tolerance = kDefaultTolerance);

}  // namespace compcap
