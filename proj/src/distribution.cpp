#include "compcap/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace compcap {

double InstructionDistribution::total_mass() const {
  double total = 0.0;
  for (const auto& m : masses) total += m.mass;
  return total;
}

double InstructionDistribution::mean_time() const {
  double total = 0.0;
  for (const auto& m : masses) total += m.mass * m.mean_time;
  return total;
}

double InstructionDistribution::instruction_probability(double time) const {
  if (!rate_bits) throw std::logic_error("distribution has no per-instruction rule");
  return std::exp2(-time * *rate_bits);
}

InstructionDistribution optimal_distribution(const BoundInstructionSet& set, const CapacityResult& cap) {
  const CharacteristicFunction g(set);
  InstructionDistribution dist;
  dist.rate_bits = cap.capacity_bits;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    dist.masses.push_back({set.members[i].name, std::exp2(g.log2_member_term(i, cap.capacity_bits)),
                           g.member_mean_time(i, cap.capacity_bits)});
  }
  return dist;
}

double optimal_entropy_bits(const InstructionDistribution& optimal) {
  if (!optimal.rate_bits) throw std::logic_error("not a capacity-achieving distribution");
  // -log2 p(x) = tau(x) * y for every instruction.
  return *optimal.rate_bits * optimal.mean_time();
}

double efficiency(const BoundInstructionSet& set, const InstructionDistribution& dist, double entropy_bits) {
  if (entropy_bits < 0.0) throw std::invalid_argument("entropy must be non-negative");
  for (const auto& m : dist.masses) {
    if (set.find(m.member) == nullptr) {
      throw std::invalid_argument("distribution references unknown member '" + m.member + "'");
    }
  }
  const double denominator = dist.mean_time();
  if (!(denominator > 0.0)) throw std::invalid_argument("distribution has zero mean time");
  return entropy_bits / denominator;
}

std::string TraceSymbol::key() const {
  if (!time) return member;
  return member + "@" + to_string(*time);
}

std::vector<TraceSymbol> parse_trace(std::string_view text) {
  std::vector<TraceSymbol> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    TraceSymbol symbol;
    if (auto at = token.find('@'); at != std::string::npos) {
      symbol.member = token.substr(0, at);
      try {
        symbol.time = parse_rational(std::string_view(token).substr(at + 1));
      } catch (const std::invalid_argument&) {
        throw std::invalid_argument("malformed trace token '" + token + "'");
      }
    } else {
      symbol.member = token;
    }
    if (symbol.member.empty()) throw std::invalid_argument("malformed trace token '" + token + "'");
    out.push_back(std::move(symbol));
  }
  return out;
}

TraceStatistics::TraceStatistics(const std::vector<std::string>& symbols, std::size_t max_order)
    : length_(symbols.size()) {
  std::set<std::string> unique(symbols.begin(), symbols.end());
  alphabet_.assign(unique.begin(), unique.end());
  std::vector<std::size_t> ids;
  ids.reserve(symbols.size());
  for (const auto& s : symbols) {
    ids.push_back(static_cast<std::size_t>(std::lower_bound(alphabet_.begin(), alphabet_.end(), s) -
                                           alphabet_.begin()));
  }
  kgrams_.resize(max_order + 1);
  for (std::size_t order = 0; order <= max_order; ++order) {
    if (ids.size() < order + 1) continue;
    for (std::size_t start = 0; start + order < ids.size(); ++start) {
      std::vector<std::size_t> gram(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                    ids.begin() + static_cast<std::ptrdiff_t>(start + order + 1));
      ++kgrams_[order][gram];
    }
  }
}

const std::map<std::vector<std::size_t>, std::size_t>& TraceStatistics::kgram_counts(std::size_t order) const {
  if (order >= kgrams_.size()) throw std::out_of_range("order beyond collected statistics");
  return kgrams_[order];
}

double entropy_order_n(const TraceStatistics& stats, std::size_t n) {
  if (stats.length() < n + 1) throw std::invalid_argument("trace shorter than n+1 symbols");
  const auto& counts = stats.kgram_counts(n);
  const double windows = static_cast<double>(stats.length() - n);
  double h = 0.0;
  for (const auto& [gram, count] : counts) {
    const double p = static_cast<double>(count) / windows;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h / static_cast<double>(n + 1));
}

Rational symbol_time(const BoundInstructionSet& set, const TraceSymbol& symbol) {
  const BoundMember* member = set.find(symbol.member);
  if (member == nullptr) throw std::invalid_argument("unknown trace symbol '" + symbol.member + "'");
  if (!member->is_family()) {
    if (symbol.time && *symbol.time != member->time) {
      throw std::invalid_argument("trace symbol '" + symbol.key() + "' does not match the time of class '" +
                                  member->name + "'");
    }
    return member->time;
  }
  if (!symbol.time) {
    throw std::invalid_argument("family symbol '" + symbol.member + "' needs an explicit time (name@time)");
  }
  const Rational offset = (*symbol.time - member->time) / *member->step;
  if (offset < 0 || !is_integer(offset) || boost::multiprecision::numerator(offset) >= member->terms) {
    throw std::invalid_argument("time of '" + symbol.key() + "' is not on the progression of family '" +
                                member->name + "'");
  }
  return *symbol.time;
}

EfficiencyReport efficiency_from_trace(const BoundInstructionSet& set, const std::vector<TraceSymbol>& trace,
                                       std::size_t max_order, double tolerance) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  if (trace.size() < max_order + 1) throw std::invalid_argument("trace too short for requested order");

  std::vector<std::string> keys;
  keys.reserve(trace.size());
  std::map<std::string, std::pair<std::string, double>> symbol_info;  // key -> (member, time)
  for (const auto& symbol : trace) {
    const Rational time = symbol_time(set, symbol);
    TraceSymbol canonical{symbol.member, set.find(symbol.member)->is_family() ? std::optional(time) : std::nullopt};
    keys.push_back(canonical.key());
    symbol_info.emplace(keys.back(), std::make_pair(symbol.member, to_double(time)));
  }

  const TraceStatistics stats(keys, max_order);
  InstructionDistribution empirical;
  for (const auto& [gram, count] : stats.kgram_counts(0)) {
    const auto& [member, time] = symbol_info.at(stats.alphabet()[gram.front()]);
    empirical.masses.push_back({member, static_cast<double>(count) / static_cast<double>(stats.length()), time});
  }

  EfficiencyReport report;
  report.capacity = solve_capacity(set, tolerance);
  report.mean_time = empirical.mean_time();
  report.length = stats.length();
  report.alphabet_size = stats.alphabet().size();
  for (std::size_t j = 0; j <= max_order; ++j) {
    const double h = entropy_order_n(stats, j);
    const double c = efficiency(set, empirical, h);
    const double cap = report.capacity.capacity_bits;
    report.orders.push_back({j, h, c, cap > 0.0 ? c / cap : 0.0});
  }
  return report;
}

}  // namespace compcap
