#include "compcap/sequence_counter.hpp"

#include <boost/integer/common_factor.hpp>
#include <string>

namespace compcap {

std::map<std::int64_t, BigInt> time_multiplicities(const BoundInstructionSet& set, std::int64_t max_time) {
  std::map<std::int64_t, BigInt> out;
  for (const auto& m : set.members) {
    if (!is_integer(m.time) || (m.step && !is_integer(*m.step))) {
      throw CountError("member '" + m.name + "' has a non-integer time; rescale times by " +
                       to_string(suggested_time_scale(set)) + " to count sequences");
    }
    const BigInt first = boost::multiprecision::numerator(m.time);
    if (first > max_time) continue;
    const BigInt step = m.step ? boost::multiprecision::numerator(*m.step) : BigInt(0);
    // Only terms with time <= max_time influence N(0..max_time).
    BigInt reachable = m.terms;
    if (step > 0) {
      const BigInt fit = (BigInt(max_time) - first) / step + 1;
      if (fit < reachable) reachable = fit;
    }
    const auto n = static_cast<std::int64_t>(reachable);
    const auto t0 = static_cast<std::int64_t>(first);
    const auto dt = static_cast<std::int64_t>(step);
    for (std::int64_t f = 0; f < n; ++f) out[t0 + f * dt] += m.count;
  }
  return out;
}

BigInt suggested_time_scale(const BoundInstructionSet& set) {
  BigInt scale = 1;
  auto fold = [&](const Rational& r) {
    scale = boost::integer::lcm(scale, BigInt(boost::multiprecision::denominator(r)));
  };
  for (const auto& m : set.members) {
    fold(m.time);
    if (m.step) fold(*m.step);
  }
  return scale;
}

CountTable count_sequences(const BoundInstructionSet& set, std::int64_t max_time) {
  if (max_time < 0 || max_time > kMaxCountTime) {
    throw CountError("max_time must lie in [0, " + std::to_string(kMaxCountTime) + "]");
  }
  const auto multiplicities = time_multiplicities(set, max_time);
  CountTable table;
  table.max_time = max_time;
  table.counts.assign(static_cast<std::size_t>(max_time) + 1, BigInt(0));
  table.counts[0] = 1;
  for (std::int64_t t = 1; t <= max_time; ++t) {
    BigInt total = 0;
    for (const auto& [tau, m] : multiplicities) {
      if (tau > t) break;
      total += m * table.counts[static_cast<std::size_t>(t - tau)];
    }
    table.counts[static_cast<std::size_t>(t)] = std::move(total);
  }
  return table;
}

double capacity_estimate(const CountTable& table, std::int64_t t) {
  if (t < 1 || t > table.max_time) throw CountError("time outside the counted range");
  const BigInt& n = table.at(t);
  if (n == 0) throw CountError("time " + std::to_string(t) + " is unreachable (N = 0)");
  return log2_big(n) / static_cast<double>(t);
}

}  // namespace compcap
