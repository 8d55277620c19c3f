#include "compcap/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "compcap/capacity.hpp"
#include "compcap/distribution.hpp"
#include "compcap/isa_model.hpp"
#include "compcap/memory_optimizer.hpp"
#include "compcap/report.hpp"
#include "compcap/sequence_counter.hpp"

namespace compcap {

using nlohmann::json;

namespace {

constexpr std::size_t kTopTerms = 10;

// Carries an exit code out of a subcommand.
struct CliFailure {
  int code;
  std::string message;
};

struct Options {
  bool json = false;
  double tolerance = kDefaultTolerance;
  std::vector<std::string> params;
  std::string model;
  std::string trace;
  std::string problem;
  std::size_t order = 1;
  std::int64_t max_time = -1;
  std::string mode = "vertex";
  std::string step = "1";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitInput, "cannot read '" + path + "'"};
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ParameterBinding parse_params(const std::vector<std::string>& params) {
  ParameterBinding binding;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CliFailure{kExitInput, "--param expects NAME=VALUE, got '" + p + "'"};
    }
    try {
      binding[p.substr(0, eq)] = parse_rational(std::string_view(p).substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw CliFailure{kExitInput, "--param " + p + ": " + e.what()};
    }
  }
  return binding;
}

int model_error_code(const ModelError& e, bool binding_phase) {
  if (binding_phase && (e.kind() == ModelErrorKind::kMissingParameter ||
                        e.kind() == ModelErrorKind::kUndeclaredParameter)) {
    return kExitParameter;
  }
  return kExitInput;
}

std::string describe(const ModelError& e) {
  std::string message = e.what();
  if (e.position()) message += " (byte " + std::to_string(*e.position()) + ")";
  return message;
}

InstructionSet load_model(const std::string& path, RunReport& report) {
  const std::string text = read_file(path);
  report.inputs["model"] = {{"path", path}, {"sha256", sha256_hex(text)}};
  try {
    return parse_model(text);
  } catch (const ModelError& e) {
    throw CliFailure{model_error_code(e, false), path + ": " + describe(e)};
  }
}

BoundInstructionSet bind_model(const InstructionSet& set, const ParameterBinding& binding) {
  try {
    return bind_parameters(set, binding);
  } catch (const ModelError& e) {
    throw CliFailure{model_error_code(e, true), describe(e)};
  }
}

std::string x0_text(double y) {
  std::ostringstream s;
  s << "2^" << std::setprecision(15) << y;
  return s.str();
}

json capacity_json(const CapacityResult& cap, double tolerance) {
  return {{"capacity_bits", fixed_number(cap.capacity_bits)},
          {"x0", x0_text(cap.capacity_bits)},
          {"residual", fixed_number(cap.residual)},
          {"bracket_width", fixed_number(cap.bracket_width)},
          {"iterations", cap.iterations},
          {"tolerance", fixed_number(tolerance)}};
}

json member_json(const BoundMember& m) {
  json j{{"member", m.name}, {"count", to_string(m.count)}, {"time", to_string(m.time)}};
  if (m.is_family()) {
    j["step"] = to_string(*m.step);
    j["terms"] = to_string(m.terms);
  }
  return j;
}

void bind_phase_params(const Options& opt, ParameterBinding& binding) {
  for (auto& [name, value] : parse_params(opt.params)) binding[name] = value;
}

void cmd_capacity(const Options& opt, RunReport& report) {
  const InstructionSet set = load_model(opt.model, report);
  const BoundInstructionSet bound = bind_model(set, parse_params(opt.params));
  const CapacityResult cap = solve_capacity(bound, opt.tolerance);
  report.results = capacity_json(cap, opt.tolerance);
  report.results["model"] = bound.name;
  report.results["total_count"] = to_string(total_count(bound));
  json top = json::array();
  for (const auto& t : top_contributions(bound, cap, kTopTerms)) {
    json entry = member_json(*bound.find(t.member));
    entry["mass"] = fixed_number(t.mass);
    top.push_back(entry);
  }
  report.results["top_terms"] = top;
}

void cmd_distribution(const Options& opt, RunReport& report) {
  const InstructionSet set = load_model(opt.model, report);
  const BoundInstructionSet bound = bind_model(set, parse_params(opt.params));
  const CapacityResult cap = solve_capacity(bound, opt.tolerance);
  const InstructionDistribution dist = optimal_distribution(bound, cap);
  json classes = json::array();
  for (std::size_t i = 0; i < bound.members.size(); ++i) {
    json entry = member_json(bound.members[i]);
    entry["mass"] = fixed_number(dist.masses[i].mass);
    entry["mean_time"] = fixed_number(dist.masses[i].mean_time);
    entry["instruction_probability"] = fixed_number(dist.instruction_probability(to_double(bound.members[i].time)));
    classes.push_back(entry);
  }
  report.results = {{"model", bound.name},
                    {"capacity", capacity_json(cap, opt.tolerance)},
                    {"classes", classes},
                    {"total_mass", fixed_number(dist.total_mass())},
                    {"mean_time", fixed_number(dist.mean_time())},
                    {"entropy_bits", fixed_number(optimal_entropy_bits(dist))}};
}

void cmd_efficiency(const Options& opt, RunReport& report) {
  const InstructionSet set = load_model(opt.model, report);
  const BoundInstructionSet bound = bind_model(set, parse_params(opt.params));
  const std::string text = read_file(opt.trace);
  report.inputs["trace"] = {{"path", opt.trace}, {"sha256", sha256_hex(text)}};
  EfficiencyReport eff;
  try {
    eff = efficiency_from_trace(bound, parse_trace(text), opt.order, opt.tolerance);
  } catch (const std::invalid_argument& e) {
    throw CliFailure{kExitInput, opt.trace + ": " + e.what()};
  }
  json orders = json::array();
  for (const auto& o : eff.orders) {
    orders.push_back({{"order", o.order},
                      {"entropy_bits", fixed_number(o.entropy_bits)},
                      {"efficiency", fixed_number(o.efficiency)},
                      {"utilization", fixed_number(o.utilization)}});
  }
  for (std::size_t j = 1; j < eff.orders.size(); ++j) {
    if (eff.orders[j].entropy_bits > eff.orders[j - 1].entropy_bits) {
      report.warnings.push_back("order " + std::to_string(j) + " estimate exceeds order " +
                                std::to_string(j - 1) + " (trace too short for stable estimates)");
    }
  }
  report.warnings.push_back("entropies are order-j plug-in estimates, not the limit entropy");
  report.results = {{"model", bound.name},
                    {"capacity", capacity_json(eff.capacity, opt.tolerance)},
                    {"trace_length", eff.length},
                    {"alphabet_size", eff.alphabet_size},
                    {"mean_time", fixed_number(eff.mean_time)},
                    {"orders", orders}};
}

void cmd_count(const Options& opt, RunReport& report) {
  const InstructionSet set = load_model(opt.model, report);
  const BoundInstructionSet bound = bind_model(set, parse_params(opt.params));
  CountTable table;
  try {
    table = count_sequences(bound, opt.max_time);
  } catch (const CountError& e) {
    throw CliFailure{kExitInput, e.what()};
  }
  json counts = json::array();
  for (const auto& n : table.counts) counts.push_back(to_string(n));
  report.results = {{"model", bound.name}, {"max_time", table.max_time}, {"counts", counts}};
  const CapacityResult cap = solve_capacity(bound, opt.tolerance);
  report.results["solver_capacity_bits"] = fixed_number(cap.capacity_bits);
  if (table.max_time >= 1 && table.at(table.max_time) > 0) {
    const double estimate = capacity_estimate(table, table.max_time);
    report.results["capacity_estimate"] = fixed_number(estimate);
    report.results["gap"] = fixed_number(cap.capacity_bits - estimate);
  } else {
    report.results["capacity_estimate"] = nullptr;
    report.warnings.push_back("time " + std::to_string(table.max_time) +
                              " is unreachable (N = 0); no estimate");
  }
}

json allocation_json(const MemoryDesignProblem& problem, const Allocation& a) {
  json cells = json::object();
  for (std::size_t i = 0; i < problem.kinds.size(); ++i) cells[problem.kinds[i].name] = to_string(a.cells[i]);
  return {{"cells", cells},
          {"total_cost", to_string(a.total_cost)},
          {"capacity_bits", fixed_number(a.capacity.capacity_bits)},
          {"residual", fixed_number(a.capacity.residual)}};
}

void cmd_optimize_memory(const Options& opt, RunReport& report) {
  const std::string text = read_file(opt.problem);
  report.inputs["problem"] = {{"path", opt.problem}, {"sha256", sha256_hex(text)}};
  MemoryDesignProblem problem = [&] {
    try {
      return parse_problem(text, std::filesystem::path(opt.problem).parent_path());
    } catch (const ModelError& e) {
      throw CliFailure{model_error_code(e, false), opt.problem + ": " + describe(e)};
    }
  }();
  bind_phase_params(opt, problem.binding);
  bind_model(problem.base, problem.binding);

  BigInt step;
  try {
    step = BigInt(opt.step);
  } catch (const std::exception&) {
    throw CliFailure{kExitInput, "--step must be a positive integer"};
  }
  OptimizationResult result;
  try {
    if (opt.mode == "vertex") {
      result = optimize_vertex(problem, opt.tolerance);
    } else {
      result = optimize_grid(problem, step, opt.tolerance);
    }
  } catch (const ModelError& e) {
    throw CliFailure{model_error_code(e, true), describe(e)};
  } catch (const std::invalid_argument& e) {
    throw CliFailure{kExitInput, e.what()};
  }

  report.results = {{"mode", opt.mode},
                    {"budget", to_string(problem.budget)},
                    {"registers", to_string(problem.registers)},
                    {"best", allocation_json(problem, result.best)},
                    {"evaluated", result.candidates.size()},
                    {"tie", !result.tied_with.empty()}};
  if (opt.mode == "vertex") {
    json candidates = json::array();
    for (const auto& c : result.candidates) candidates.push_back(allocation_json(problem, c));
    report.results["candidates"] = candidates;
    report.results["refinements"] = result.refinements;
    report.results["justification"] =
        "at fixed X the characteristic sum is linear and increasing in each cell count, so the continuous "
        "optimum spends the whole budget on one kind; integer rounding is repaired by knapsack rounds";
  } else {
    report.results["step"] = to_string(step);
  }
  if (!result.tied_with.empty()) {
    json ties = json::array();
    for (auto i : result.tied_with) ties.push_back(allocation_json(problem, result.candidates[i]));
    report.results["tied_with"] = ties;
    report.warnings.push_back("best allocation ties with " + std::to_string(result.tied_with.size()) +
                              " other candidate(s) within 1e-11 bits");
  }
}

void print_text(const RunReport& report, std::ostream& out) {
  const json& r = report.results;
  if (report.command == "capacity") {
    out << "model: " << r["model"].get<std::string>() << "\n"
        << "capacity: " << r["capacity_bits"].dump() << " bits per time unit\n"
        << "X0: " << r["x0"].get<std::string>() << "\n"
        << "residual: " << r["residual"].dump() << "\n"
        << "top terms:\n";
    for (const auto& t : r["top_terms"]) {
      out << "  " << t["member"].get<std::string>() << "  count " << t["count"].get<std::string>() << "  time "
          << t["time"].get<std::string>() << "  mass " << t["mass"].dump() << "\n";
    }
  } else if (report.command == "distribution") {
    out << "model: " << r["model"].get<std::string>() << "\n"
        << "capacity: " << r["capacity"]["capacity_bits"].dump() << " bits per time unit\n";
    for (const auto& c : r["classes"]) {
      out << "  " << c["member"].get<std::string>() << "  mass " << c["mass"].dump() << "  p(instruction) "
          << c["instruction_probability"].dump() << "\n";
    }
    out << "total mass: " << r["total_mass"].dump() << "\n";
  } else if (report.command == "efficiency") {
    out << "capacity: " << r["capacity"]["capacity_bits"].dump() << " bits per time unit\n"
        << "trace length: " << r["trace_length"].dump() << ", mean time " << r["mean_time"].dump() << "\n";
    for (const auto& o : r["orders"]) {
      out << "  order " << o["order"].dump() << ": entropy " << o["entropy_bits"].dump() << ", efficiency "
          << o["efficiency"].dump() << ", utilization " << o["utilization"].dump() << "\n";
    }
  } else if (report.command == "count") {
    const auto& counts = r["counts"];
    for (std::size_t t = 0; t < counts.size(); ++t) {
      out << "N(" << t << ") = " << counts[t].get<std::string>() << "\n";
    }
    out << "estimate: " << r["capacity_estimate"].dump() << ", solver: " << r["solver_capacity_bits"].dump()
        << "\n";
  } else {
    out << "mode: " << r["mode"].get<std::string>() << "\n"
        << "best: " << r["best"]["cells"].dump() << "  cost " << r["best"]["total_cost"].get<std::string>()
        << "  capacity " << r["best"]["capacity_bits"].dump() << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
}

void add_common(CLI::App& sub, Options& opt) {
  sub.add_flag("--json", opt.json, "Print a JSON report");
  sub.add_option("--tolerance", opt.tolerance, "Root bracket width")->check(CLI::Range(kMinTolerance, kMaxTolerance));
  sub.add_option("--param", opt.params, "Parameter binding NAME=VALUE (repeatable)")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Capacity and efficiency of instruction-set models", "compcap"};
  app.require_subcommand(1);

  auto* capacity = app.add_subcommand("capacity", "Solve the capacity of a model");
  capacity->add_option("model", opt.model, "Model JSON file")->required();
  auto* distribution = app.add_subcommand("distribution", "Capacity-achieving instruction distribution");
  distribution->add_option("model", opt.model, "Model JSON file")->required();
  auto* efficiency = app.add_subcommand("efficiency", "Efficiency estimates from an instruction trace");
  efficiency->add_option("model", opt.model, "Model JSON file")->required();
  efficiency->add_option("trace", opt.trace, "Trace file")->required();
  efficiency->add_option("--order", opt.order, "Largest entropy order");
  auto* count = app.add_subcommand("count", "Exact sequence counts N(0..T)");
  count->add_option("model", opt.model, "Model JSON file")->required();
  count->add_option("--max-time", opt.max_time, "Largest time T")->required();
  auto* optimize = app.add_subcommand("optimize-memory", "Budgeted memory configuration");
  optimize->add_option("problem", opt.problem, "Problem JSON file")->required();
  optimize->add_option("--mode", opt.mode, "vertex or grid")->check(CLI::IsMember({"vertex", "grid"}));
  optimize->add_option("--step", opt.step, "Grid step (cells)");
  for (auto* sub : {capacity, distribution, efficiency, count, optimize}) add_common(*sub, opt);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  RunReport report;
  report.arguments = args;
  try {
    if (capacity->parsed()) {
      report.command = "capacity";
      cmd_capacity(opt, report);
    } else if (distribution->parsed()) {
      report.command = "distribution";
      cmd_distribution(opt, report);
    } else if (efficiency->parsed()) {
      report.command = "efficiency";
      cmd_efficiency(opt, report);
    } else if (count->parsed()) {
      report.command = "count";
      cmd_count(opt, report);
    } else {
      report.command = "optimize-memory";
      cmd_optimize_memory(opt, report);
    }
  } catch (const CliFailure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const ModelError& e) {
    err << "error: " << describe(e) << "\n";
    return kExitInput;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  if (opt.json) {
    out << report.serialize();
  } else {
    print_text(report, out);
  }
  return kExitOk;
}

}  // namespace compcap
