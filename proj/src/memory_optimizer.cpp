#include "compcap/memory_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace compcap {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw ModelError(ModelErrorKind::kValidation, message);
}

std::string access_member_name(const MemoryKind& kind, std::size_t index) {
  return kind.name + "[" + std::to_string(index) + "]";
}

const json& require(const json& obj, const char* key, const std::string& what) {
  auto it = obj.find(key);
  if (it == obj.end()) invalid(what + ": missing field '" + key + "'");
  return *it;
}

// Index of the best allocation: maximal capacity, then the first (vertex
// order) or lexicographically smallest (grid) among those within the tie
// threshold.
template <typename Less>
std::size_t pick_best(const std::vector<Allocation>& all, Less prefer) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& a : all) top = std::max(top, a.capacity.capacity_bits);
  std::size_t best = all.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].capacity.capacity_bits < top - kTieThreshold) continue;
    if (best == all.size() || prefer(all[i], all[best])) best = i;
  }
  return best;
}

std::vector<std::size_t> ties_of(const std::vector<Allocation>& all, std::size_t best) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i != best && std::abs(all[i].capacity.capacity_bits - all[best].capacity.capacity_bits) < kTieThreshold) {
      out.push_back(i);
    }
  }
  return out;
}

BigInt max_cells(const Rational& budget, const Rational& cost) { return floor_to_integer(budget / cost); }

// Unbounded integer knapsack over memory kinds: maximise sum n_i * value_i
// subject to sum n_i * cost_i <= budget. Depth-first branch and bound with
// the fractional (best remaining ratio) bound.
class KindKnapsack {
 public:
  KindKnapsack(const std::vector<Rational>& costs, const std::vector<double>& values, const Rational& budget)
      : costs_(costs), values_(values), budget_(budget), order_(costs.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    ratios_.resize(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) ratios_[i] = values[i] / to_double(costs[i]);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return ratios_[a] > ratios_[b]; });
  }

  // Returns the best allocation found (parallel to the input kinds).
  std::vector<BigInt> solve(double incumbent) {
    best_value_ = incumbent;
    current_.assign(costs_.size(), BigInt(0));
    if (!order_.empty()) descend(0, budget_, 0.0);
    return best_;
  }

  double best_value() const { return best_value_; }
  bool truncated() const { return truncated_; }

 private:
  static constexpr std::size_t kNodeLimit = 5000000;

  double bound(std::size_t depth, const Rational& remaining, double value) const {
    if (depth >= order_.size()) return value;
    return value + to_double(remaining) * ratios_[order_[depth]];
  }

  void descend(std::size_t depth, const Rational& remaining, double value) {
    if (++nodes_ > kNodeLimit) {
      truncated_ = true;
      return;
    }
    const std::size_t kind = order_[depth];
    const BigInt most = max_cells(remaining, costs_[kind]);
    if (depth + 1 == order_.size()) {
      const double total = value + to_double(most) * values_[kind];
      if (total > best_value_) {
        best_value_ = total;
        best_ = current_;
        best_[kind] = most;
      }
      return;
    }
    for (BigInt n = most; n >= 0; --n) {
      const Rational left = remaining - Rational(n) * costs_[kind];
      const double taken = value + to_double(n) * values_[kind];
      if (bound(depth + 1, left, taken) <= best_value_) break;
      current_[kind] = n;
      descend(depth + 1, left, taken);
      if (truncated_) break;
    }
    current_[kind] = 0;
  }

  const std::vector<Rational>& costs_;
  const std::vector<double>& values_;
  Rational budget_;
  std::vector<std::size_t> order_;
  std::vector<double> ratios_;
  std::vector<BigInt> current_;
  std::vector<BigInt> best_;
  double best_value_ = 0.0;
  std::size_t nodes_ = 0;
  bool truncated_ = false;
};

// log2 of the characteristic-sum contribution of one cell of `kind` at y.
double log2_cell_weight(const MemoryDesignProblem& problem, const MemoryKind& kind, double y) {
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  for (const auto& access : kind.access_classes) {
    const double tau = to_double(evaluate(access.time, problem.binding));
    logs.push_back(log2_big(problem.registers * access.count_per_cell) - tau * y);
    peak = std::max(peak, logs.back());
  }
  double sum = 0.0;
  for (double l : logs) sum += std::exp2(l - peak);
  return peak + std::log2(sum);
}

}  // namespace

void MemoryDesignProblem::validate() const {
  if (registers < 1) invalid("registers must be >= 1");
  if (budget < 0) invalid("budget must be non-negative");
  std::set<std::string> names;
  std::set<std::string> base_names;
  for (const auto& m : base.members()) base_names.insert(member_name(m));
  for (const auto& kind : kinds) {
    if (kind.name.empty()) invalid("memory kind with empty name");
    if (!names.insert(kind.name).second) invalid("duplicate memory kind '" + kind.name + "'");
    if (kind.cell_cost <= 0) invalid("kind '" + kind.name + "': cell_cost must be > 0");
    if (kind.access_classes.empty()) invalid("kind '" + kind.name + "': needs at least one access class");
    for (std::size_t j = 0; j < kind.access_classes.size(); ++j) {
      const auto& access = kind.access_classes[j];
      if (access.count_per_cell < 1) invalid("kind '" + kind.name + "': access count must be >= 1");
      if (access.time.base < 0) invalid("kind '" + kind.name + "': negative access time");
      for (const auto& [param, coeff] : access.time.coeffs) {
        if (coeff < 0) invalid("kind '" + kind.name + "': negative coefficient");
        if (!base.declares(param)) {
          throw ModelError(ModelErrorKind::kUndeclaredParameter,
                           "kind '" + kind.name + "': undeclared parameter '" + param + "'");
        }
      }
      if (base_names.count(access_member_name(kind, j))) {
        invalid("kind '" + kind.name + "' clashes with base member '" + access_member_name(kind, j) + "'");
      }
    }
  }
}

MemoryDesignProblem problem_from_json(const json& doc, const std::optional<std::filesystem::path>& base_dir) {
  if (!doc.is_object()) invalid("problem must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "base" && key != "registers" && key != "budget" && key != "parameters" && key != "kinds") {
      invalid("problem: unknown field '" + key + "'");
    }
  }
  const json& base_doc = require(doc, "base", "problem");
  std::optional<InstructionSet> base;
  if (base_doc.is_string()) {
    std::filesystem::path path = base_doc.get<std::string>();
    if (base_dir && path.is_relative()) path = *base_dir / path;
    std::ifstream in(path);
    if (!in) invalid("problem: cannot read base model '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    base = parse_model(buffer.str());
  } else {
    base = model_from_json(base_doc);
  }

  MemoryDesignProblem problem{std::move(*base), 1, {}, 0, {}};
  problem.registers = parse_count(require(doc, "registers", "problem"), "registers");
  problem.budget = parse_rational_json(require(doc, "budget", "problem"), "budget");
  if (auto it = doc.find("parameters"); it != doc.end()) {
    if (!it->is_object()) invalid("problem: 'parameters' must be an object");
    for (const auto& [name, value] : it->items()) {
      problem.binding[name] = parse_rational_json(value, "parameter '" + name + "'");
    }
  }
  const json& kinds = require(doc, "kinds", "problem");
  if (!kinds.is_array()) invalid("problem: 'kinds' must be an array");
  for (const auto& entry : kinds) {
    if (!entry.is_object()) invalid("problem: kind entries must be objects");
    MemoryKind kind;
    const json& name = require(entry, "name", "kind");
    if (!name.is_string()) invalid("kind: name must be a string");
    kind.name = name.get<std::string>();
    const std::string what = "kind '" + kind.name + "'";
    kind.cell_cost = parse_rational_json(require(entry, "cell_cost", what), what + " cell_cost");
    const json& access = require(entry, "access_classes", what);
    if (!access.is_array()) invalid(what + ": access_classes must be an array");
    for (const auto& a : access) {
      if (!a.is_object()) invalid(what + ": access classes must be objects");
      kind.access_classes.push_back(
          {parse_count(require(a, "count", what), what), parse_time(require(a, "time", what), what + " time")});
    }
    problem.kinds.push_back(std::move(kind));
  }
  problem.validate();
  return problem;
}

MemoryDesignProblem parse_problem(std::string_view text, const std::optional<std::filesystem::path>& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelError(ModelErrorKind::kSyntax, std::string("syntax error: ") + e.what(), e.byte);
  }
  return problem_from_json(doc, base_dir);
}

BoundInstructionSet instantiate(const MemoryDesignProblem& problem, const std::vector<BigInt>& cells) {
  if (cells.size() != problem.kinds.size()) throw std::invalid_argument("allocation size mismatch");
  BoundInstructionSet set = bind_parameters(problem.base, problem.binding);
  for (std::size_t i = 0; i < problem.kinds.size(); ++i) {
    if (cells[i] < 0) throw std::invalid_argument("negative cell count");
    if (cells[i] == 0) continue;
    const MemoryKind& kind = problem.kinds[i];
    for (std::size_t j = 0; j < kind.access_classes.size(); ++j) {
      const AccessClass& access = kind.access_classes[j];
      BoundMember m;
      m.name = access_member_name(kind, j);
      m.count = problem.registers * access.count_per_cell * cells[i];
      m.time = evaluate(access.time, problem.binding);
      if (m.time <= 0) invalid("kind '" + kind.name + "' has a non-positive access time");
      set.members.push_back(std::move(m));
    }
  }
  return set;
}

Rational allocation_cost(const MemoryDesignProblem& problem, const std::vector<BigInt>& cells) {
  Rational cost = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) cost += problem.kinds.at(i).cell_cost * Rational(cells[i]);
  return cost;
}

Allocation evaluate_allocation(const MemoryDesignProblem& problem, std::vector<BigInt> cells, double tolerance) {
  Allocation a;
  a.capacity = solve_capacity(instantiate(problem, cells), tolerance);
  a.total_cost = allocation_cost(problem, cells);
  a.cells = std::move(cells);
  return a;
}

OptimizationResult optimize_vertex(const MemoryDesignProblem& problem, double tolerance) {
  problem.validate();
  const std::size_t k = problem.kinds.size();
  OptimizationResult result;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<BigInt> cells(k, BigInt(0));
    cells[i] = max_cells(problem.budget, problem.kinds[i].cell_cost);
    result.candidates.push_back(evaluate_allocation(problem, std::move(cells), tolerance));
  }
  result.candidates.push_back(evaluate_allocation(problem, std::vector<BigInt>(k, BigInt(0)), tolerance));

  const std::size_t vertex = pick_best(result.candidates, [](const Allocation&, const Allocation&) { return false; });
  result.tied_with = ties_of(result.candidates, vertex);
  result.best = result.candidates[vertex];

  // With integer cell counts a vertex can leave budget unused that a mixed
  // allocation would spend. At the current root the characteristic sum is
  // linear in the cells, so any allocation with a larger weighted sum has a
  // larger root; repeat until the knapsack finds nothing better.
  std::vector<Rational> costs;
  for (const auto& kind : problem.kinds) costs.push_back(kind.cell_cost);
  for (int round = 0; round < 64 && k > 0; ++round) {
    const double y = result.best.capacity.capacity_bits;
    std::vector<double> logs(k);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      logs[i] = log2_cell_weight(problem, problem.kinds[i], y);
      peak = std::max(peak, logs[i]);
    }
    std::vector<double> values(k);
    double current = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      values[i] = std::exp2(logs[i] - peak);
      current += to_double(result.best.cells[i]) * values[i];
    }
    KindKnapsack knapsack(costs, values, problem.budget);
    std::vector<BigInt> improved = knapsack.solve(current * (1.0 + 1e-12));
    if (improved.empty()) break;
    Allocation next = evaluate_allocation(problem, std::move(improved), tolerance);
    if (next.capacity.capacity_bits <= result.best.capacity.capacity_bits + kTieThreshold) break;
    result.best = std::move(next);
    result.tied_with.clear();
    ++result.refinements;
  }
  return result;
}

OptimizationResult optimize_grid(const MemoryDesignProblem& problem, const BigInt& step, double tolerance) {
  problem.validate();
  if (step < 1) throw std::invalid_argument("grid step must be >= 1");
  const std::size_t k = problem.kinds.size();

  std::vector<std::vector<BigInt>> points;
  std::vector<BigInt> cells(k, BigInt(0));
  auto enumerate = [&](auto&& self, std::size_t depth, const Rational& remaining) -> void {
    if (depth == k) {
      if (points.size() >= kMaxGridPoints) {
        throw std::invalid_argument("grid exceeds " + std::to_string(kMaxGridPoints) + " points");
      }
      points.push_back(cells);
      return;
    }
    const Rational& cost = problem.kinds[depth].cell_cost;
    for (BigInt n = 0; Rational(n) * cost <= remaining; n += step) {
      cells[depth] = n;
      self(self, depth + 1, remaining - Rational(n) * cost);
    }
    cells[depth] = 0;
  };
  enumerate(enumerate, 0, problem.budget);

  OptimizationResult result;
  result.candidates.reserve(points.size());
  for (auto& p : points) result.candidates.push_back(evaluate_allocation(problem, std::move(p), tolerance));
  const std::size_t best = pick_best(result.candidates, [](const Allocation& a, const Allocation& b) {
    return std::lexicographical_compare(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end());
  });
  result.tied_with = ties_of(result.candidates, best);
  result.best = result.candidates[best];
  return result;
}

}  // namespace compcap
