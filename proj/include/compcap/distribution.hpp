#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compcap/capacity.hpp"
#include "compcap/isa_model.hpp"

namespace compcap {

// Probability mass carried by one member (or one traced symbol) together with
// the mean execution time of the instructions behind that mass.
struct MemberMass {
  std::string member;
  double mass = 0.0;
  double mean_time = 0.0;
};

struct InstructionDistribution {
  std::vector<MemberMass> masses;
  // Set for the capacity-achieving distribution: every individual
  // instruction of time tau has probability 2^(-tau * rate_bits).
  std::optional<double> rate_bits;

  double total_mass() const;
  double mean_time() const;
  double instruction_probability(double time) const;
};

InstructionDistribution optimal_distribution(const BoundInstructionSet& set, const CapacityResult& cap);

// h0 of the capacity-achieving distribution, bits per instruction.
double optimal_entropy_bits(const InstructionDistribution& optimal);

// Bits per time unit. Throws std::invalid_argument when a mass names a
// member absent from `set` or entropy_bits is negative.
double efficiency(const BoundInstructionSet& set, const InstructionDistribution& dist, double entropy_bits);

// One executed instruction: a member and, for families, its time.
struct TraceSymbol {
  std::string member;
  std::optional<Rational> time;

  std::string key() const;
  bool operator==(const TraceSymbol&) const = default;
};

// Whitespace-separated "name" or "name@time" tokens.
std::vector<TraceSymbol> parse_trace(std::string_view text);

class TraceStatistics {
 public:
  // Counts overlapping j+1-grams for every order j <= max_order.
  TraceStatistics(const std::vector<std::string>& symbols, std::size_t max_order);

  std::size_t length() const { return length_; }
  std::size_t max_order() const { return kgrams_.size() - 1; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  // (order+1)-gram counts, keyed by alphabet indices.
  const std::map<std::vector<std::size_t>, std::size_t>& kgram_counts(std::size_t order) const;

 private:
  std::size_t length_ = 0;
  std::vector<std::string> alphabet_;
  std::vector<std::map<std::vector<std::size_t>, std::size_t>> kgrams_;
};

// Plug-in order-n entropy: -(1/(n+1)) sum P(u) log2 P(u) over observed
// (n+1)-grams. Throws std::invalid_argument if the trace is shorter than n+1.
double entropy_order_n(const TraceStatistics& stats, std::size_t n);

struct OrderEstimate {
  std::size_t order;
  double entropy_bits;  // per instruction
  double efficiency;    // bits per time unit
  double utilization;   // efficiency / capacity
};

struct EfficiencyReport {
  CapacityResult capacity;
  double mean_time = 0.0;
  std::size_t length = 0;
  std::size_t alphabet_size = 0;
  std::vector<OrderEstimate> orders;
};

// Resolves the execution time of a traced symbol against `set`. Family
// symbols must carry an explicit time on their progression.
Rational symbol_time(const BoundInstructionSet& set, const TraceSymbol& symbol);

EfficiencyReport efficiency_from_trace(const BoundInstructionSet& set, const std::vector<TraceSymbol>& trace,
                                       std::size_t max_order, double tolerance = kDefaultTolerance);

}  // namespace compcap
