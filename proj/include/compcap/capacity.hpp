#pragma once

#include <string>
#include <vector>

#include "compcap/isa_model.hpp"

namespace compcap {

inline constexpr double kDefaultTolerance = 1e-12;
inline constexpr double kMinTolerance = 1e-13;
inline constexpr double kMaxTolerance = 1e-6;
inline constexpr double kResidualBound = 1e-10;
inline constexpr int kMaxSolverIterations = 10000;

struct CapacityResult {
  double capacity_bits = 0.0;  // log2 X0, bits per time unit
  double residual = 0.0;       // |g(y*) - 1|
  double bracket_width = 0.0;
  int iterations = 0;
};

// Floating-point view of a bound set, precomputed once per solve.
class CharacteristicFunction {
 public:
  explicit CharacteristicFunction(const BoundInstructionSet& set);

  // log2 of g(y) = sum over instructions of 2^(-tau*y). Log-domain so that
  // MIX/MMIX scale counts and times never overflow.
  double log2_value(double y) const;

  // log2 g(y) and its derivative d/dy log2 g(y) (minus the mean time under
  // the tilted distribution).
  struct Point {
    double log2_g;
    double slope;
  };
  Point evaluate(double y) const;

  // log2 of the contribution of member `index` to g(y).
  double log2_member_term(std::size_t index, double y) const;
  // Mean instruction time within member `index` when instructions are
  // weighted by 2^(-tau*y).
  double member_mean_time(std::size_t index, double y) const;

  std::size_t size() const { return terms_.size(); }

 private:
  struct Term {
    double log2_count;
    double time;
    double step;   // 0 for plain classes
    double terms;  // number of progression terms
  };
  std::vector<Term> terms_;
};

// g(y) in linear scale.
double eval_characteristic(const BoundInstructionSet& set, double y);
// g'(y), analytic.
double eval_characteristic_derivative(const BoundInstructionSet& set, double y);

// log2 of the family factor sum_{F<terms} 2^(-step*F*y), cancellation-safe.
double log2_geometric_factor(double step, double terms, double y);
// Mean of F under weights 2^(-step*F*y), F = 0 .. terms-1.
double geometric_mean_index(double step, double terms, double y);

// Largest real root of the characteristic equation, as y = log2 X0.
// Throws std::invalid_argument for a tolerance outside [1e-13, 1e-6] and
// std::logic_error if the iteration cap is hit.
CapacityResult solve_capacity(const BoundInstructionSet& set, double tolerance = kDefaultTolerance);

struct TermContribution {
  std::string member;
  double mass;  // share of g(y*) = 1
};

// Members ordered by their share of the characteristic sum at X0.
std::vector<TermContribution> top_contributions(const BoundInstructionSet& set,
                                                const CapacityResult& cap, std::size_t limit);

}  // namespace compcap
