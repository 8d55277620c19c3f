#include "compcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace compcap {

namespace {

constexpr double kLn2 = std::numbers::ln2;

}  // namespace

double log2_geometric_factor(double step, double terms, double y) {
  if (terms <= 1.0) return 0.0;
  const double u = step * y * kLn2;
  if (u == 0.0) return std::log2(terms);
  return std::log2(-std::expm1(-terms * u)) - std::log2(-std::expm1(-u));
}

double geometric_mean_index(double step, double terms, double y) {
  if (terms <= 1.0) return 0.0;
  const double u = step * y * kLn2;
  const double mu = terms * u;
  if (mu < 1e-4) {
    // Series of (phi(u) - phi(M u)) / u with phi(x) = x / (e^x - 1).
    return (terms - 1.0) / 2.0 - (terms * terms - 1.0) * u / 12.0;
  }
  return 1.0 / std::expm1(u) - terms / std::expm1(mu);
}

CharacteristicFunction::CharacteristicFunction(const BoundInstructionSet& set) {
  terms_.reserve(set.members.size());
  for (const auto& m : set.members) {
    terms_.push_back(Term{log2_big(m.count), to_double(m.time),
                          m.is_family() ? to_double(*m.step) : 0.0, to_double(m.terms)});
  }
}

double CharacteristicFunction::log2_member_term(std::size_t index, double y) const {
  const Term& t = terms_.at(index);
  double value = t.log2_count - t.time * y;
  if (t.step > 0.0) value += log2_geometric_factor(t.step, t.terms, y);
  return value;
}

double CharacteristicFunction::member_mean_time(std::size_t index, double y) const {
  const Term& t = terms_.at(index);
  if (t.step <= 0.0) return t.time;
  return t.time + t.step * geometric_mean_index(t.step, t.terms, y);
}

double CharacteristicFunction::log2_value(double y) const { return evaluate(y).log2_g; }

CharacteristicFunction::Point CharacteristicFunction::evaluate(double y) const {
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    logs[i] = log2_member_term(i, y);
    peak = std::max(peak, logs[i]);
  }
  double weight_sum = 0.0;
  double time_sum = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const double w = std::exp2(logs[i] - peak);
    weight_sum += w;
    time_sum += w * member_mean_time(i, y);
  }
  return Point{peak + std::log2(weight_sum), -time_sum / weight_sum};
}

double eval_characteristic(const BoundInstructionSet& set, double y) {
  return std::exp2(CharacteristicFunction(set).log2_value(y));
}

double eval_characteristic_derivative(const BoundInstructionSet& set, double y) {
  const auto p = CharacteristicFunction(set).evaluate(y);
  return std::exp2(p.log2_g) * kLn2 * p.slope;
}

CapacityResult solve_capacity(const BoundInstructionSet& set, double tolerance) {
  if (!(tolerance >= kMinTolerance && tolerance <= kMaxTolerance)) {
    throw std::invalid_argument("tolerance must lie in [1e-13, 1e-6]");
  }
  if (set.members.empty()) throw std::invalid_argument("empty instruction set");

  CapacityResult result;
  if (total_count(set) == 1) {
    // g(0) = 1 and g is decreasing: the root is y = 0.
    return result;
  }

  const CharacteristicFunction g(set);
  int iterations = 0;
  double lo = 0.0;
  double hi = 1.0;
  for (double value = g.log2_value(hi); value >= 0.0; value = g.log2_value(hi)) {
    if (value == 0.0) {
      result.capacity_bits = hi;
      result.iterations = iterations + 1;
      return result;
    }
    lo = hi;
    hi *= 2.0;
    if (++iterations > kMaxSolverIterations) throw std::logic_error("capacity root not bracketed");
  }

  // log2 g is convex and decreasing, so Newton steps from any point land on
  // the left of the root. A probe just past the predicted root closes the
  // bracket from the right once steps become small.
  double x = lo;
  double best_x = lo;
  double best_abs = std::numeric_limits<double>::infinity();
  auto record = [&](double at, double value) {
    if (std::abs(value) < best_abs) {
      best_abs = std::abs(value);
      best_x = at;
    }
    if (value > 0.0) {
      lo = at;
    } else if (value < 0.0) {
      hi = at;
    } else {
      lo = hi = at;
    }
  };

  while (hi - lo > tolerance) {
    if (++iterations > kMaxSolverIterations) throw std::logic_error("capacity solver did not converge");
    const auto p = g.evaluate(x);
    record(x, p.log2_g);
    if (hi - lo <= tolerance) break;
    double next = 0.5 * (lo + hi);
    if (p.slope < 0.0 && std::isfinite(p.log2_g)) {
      const double step = -p.log2_g / p.slope;
      const double candidate = x + step;
      if (candidate > lo && candidate < hi) {
        next = candidate;
        if (std::abs(step) < 0.5 * tolerance) {
          const double probe = candidate + std::copysign(0.25 * tolerance, step);
          if (probe > lo && probe < hi) {
            ++iterations;
            record(probe, g.log2_value(probe));
          }
        }
      }
    }
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  if (x >= lo && x <= hi) record(x, g.log2_value(x));

  result.capacity_bits = std::max(0.0, best_x);
  result.residual = std::abs(std::exp2(g.log2_value(result.capacity_bits)) - 1.0);
  result.bracket_width = hi - lo;
  result.iterations = iterations;
  return result;
}

std::vector<TermContribution> top_contributions(const BoundInstructionSet& set,
                                                const CapacityResult& cap, std::size_t limit) {
  const CharacteristicFunction g(set);
  std::vector<TermContribution> out;
  out.reserve(set.members.size());
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    out.push_back({set.members[i].name, std::exp2(g.log2_member_term(i, cap.capacity_bits))});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TermContribution& a, const TermContribution& b) { return a.mass > b.mass; });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace compcap
