#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "compcap/isa_model.hpp"

namespace compcap {

inline constexpr std::int64_t kMaxCountTime = 100000;

// Non-integer times, an oversized table or an unreachable time.
class CountError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// counts[t] = number of instruction sequences of total time exactly t.
struct CountTable {
  std::int64_t max_time = 0;
  std::vector<BigInt> counts;

  const BigInt& at(std::int64_t t) const { return counts.at(static_cast<std::size_t>(t)); }
};

// Total multiplicity per integer time, truncated to times <= max_time.
std::map<std::int64_t, BigInt> time_multiplicities(const BoundInstructionSet& set, std::int64_t max_time);

// Least common multiple of the time denominators; multiplying every time by
// it makes the set countable (in a different time unit).
BigInt suggested_time_scale(const BoundInstructionSet& set);

CountTable count_sequences(const BoundInstructionSet& set, std::int64_t max_time);

// log2 N(T) / T. Throws CountError when N(T) = 0.
double capacity_estimate(const CountTable& table, std::int64_t t);

}  // namespace compcap
