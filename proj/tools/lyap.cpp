// Command line front end: certification, sweeps, escape analysis, charts
// and the built-in corpus.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lyap/corpus.hpp"
#include "lyap/error.hpp"
#include "lyap/format.hpp"
#include "lyap/harness.hpp"

namespace {

enum Exit { kOk = 0, kMismatch = 1, kValidation = 2, kNumerical = 3 };

struct Global {
  std::string out_dir;
  std::uint64_t seed = 42;
  std::optional<double> tol_abs;
  std::optional<double> tol_rel;
  std::string format = "json";
};

lyap::ProblemDefinition load(const std::string& ref) {
  if (std::filesystem::exists(ref)) return lyap::load_problem(ref);
  for (const auto& s : lyap::corpus_sources())
    if (s.name == ref) return lyap::parse_problem(s.json);
  throw lyap::ParseError("no problem file or corpus entry named \"" + ref + "\"");
}

void apply_tolerances(const Global& g, lyap::ProblemDefinition& def) {
  if (g.tol_abs) def.tolerances.abs = *g.tol_abs;
  if (g.tol_rel) def.tolerances.rel = *g.tol_rel;
}

/// Writes to --out/<file> when set, else to stdout.
void emit(const Global& g, const std::string& file, const std::string& text) {
  if (g.out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(g.out_dir);
  const auto path = std::filesystem::path(g.out_dir) / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lyap::InvalidArgument("cannot write " + path.string());
  out << text;
  std::cerr << "wrote " << path.string() << "\n";
}

std::string stem(const lyap::ProblemDefinition& def) { return def.name.empty() ? "problem" : def.name; }

int report_mismatches(const std::vector<std::string>& mismatches) {
  for (const auto& m : mismatches) std::cerr << "mismatch: " << m << "\n";
  return mismatches.empty() ? kOk : kMismatch;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw lyap::InvalidArgument("cannot read \"" + item + "\" as a number");
    }
  }
  return out;
}

void check_format(const Global& g) {
  if (g.format != "json" && g.format != "csv") throw lyap::InvalidArgument("format must be json or csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instability certificates, escape sweeps and adapted charts for magnetic Lagrangian systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--out", g.out_dir, "Directory for report files (default: stdout)");
  app.add_option("--seed", g.seed, "Seed for all sampling");
  app.add_option("--tol-abs", g.tol_abs, "Absolute integration tolerance");
  app.add_option("--tol-rel", g.tol_rel, "Relative integration tolerance");
  app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  std::string problem;
  std::optional<double> radius;
  std::string shells;
  std::optional<std::size_t> samples;
  auto* certify = app.add_subcommand("certify", "Shell tests of the potential and magnetic conditions");
  certify->add_option("problem", problem, "Problem file or corpus name")->required();
  certify->add_option("--radius", radius, "Probe ball radius");
  certify->add_option("--shells", shells, "Decade exponents a:b, shells from 10^a to 10^b");
  certify->add_option("--samples", samples, "Samples per shell");

  std::string eps_list;
  std::optional<double> horizon;
  auto* sweep = app.add_subcommand("sweep", "Integrate the rescaled system for each eps");
  sweep->add_option("problem", problem, "Problem file or corpus name")->required();
  sweep->add_option("--eps", eps_list, "Comma separated, strictly decreasing eps values");
  sweep->add_option("--T", horizon, "Half width of the rescaled time window");

  auto* escape = app.add_subcommand("escape", "Sweep and escape analysis");
  escape->add_option("problem", problem, "Problem file or corpus name")->required();

  bool multi = false;
  auto* chart = app.add_subcommand("chart", "Build and check the problem's adapted chart");
  chart->add_option("problem", problem, "Problem file or corpus name")->required();
  chart->add_flag("--multi", multi, "Require the chart built from several level functions");

  std::string corpus_name;
  auto* corpus = app.add_subcommand("corpus", "Built-in problems");
  corpus->require_subcommand(1);
  auto* corpus_list = corpus->add_subcommand("list", "List built-in problems");
  auto* corpus_show = corpus->add_subcommand("show", "Print a built-in problem");
  corpus_show->add_option("name", corpus_name)->required();
  auto* corpus_run = corpus->add_subcommand("run-all", "Run every built-in problem and compare verdicts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    check_format(g);
    if (*certify) {
      auto def = load(problem);
      if (radius) def.probe.radius = *radius;
      if (samples) def.probe.samples = *samples;
      if (!shells.empty()) {
        const auto colon = shells.find(':');
        if (colon == std::string::npos) throw lyap::InvalidArgument("--shells expects a:b");
        const auto lo = parse_list(shells.substr(0, colon));
        const auto hi = parse_list(shells.substr(colon + 1));
        if (lo.size() != 1 || hi.size() != 1) throw lyap::InvalidArgument("--shells expects a:b");
        def.probe.delta_min = std::pow(10.0, lo[0]);
        def.probe.delta_max = std::pow(10.0, hi[0]);
      }
      const auto result = lyap::run_certification(def, g.seed);
      if (g.format == "csv") emit(g, stem(def) + "-shells.csv", lyap::shell_table_csv(result));
      else emit(g, stem(def) + "-certify.json", lyap::to_json(result));
      return report_mismatches(lyap::certification_mismatches(def, result));
    }
    if (*sweep || *escape) {
      auto def = load(problem);
      apply_tolerances(g, def);
      if (!eps_list.empty()) {
        def.epsilons = parse_list(eps_list);
        for (std::size_t i = 0; i < def.epsilons.size(); ++i)
          if (!(def.epsilons[i] > 0.0) || (i && !(def.epsilons[i] < def.epsilons[i - 1])))
            throw lyap::InvalidArgument("--eps must be positive and strictly decreasing");
      }
      if (horizon) {
        if (!(*horizon > 0.0)) throw lyap::InvalidArgument("--T must be positive");
        def.horizon = *horizon;
      }
      auto options = lyap::sweep_options_for(def);
      options.keep_trajectories = g.format == "csv" && !g.out_dir.empty();
      lyap::EscapeReport report = *escape ? lyap::run_escape(def, options) : lyap::run_epsilon_sweep(def, options);
      const std::string kind = *escape ? "escape" : "sweep";
      if (g.format == "csv") {
        emit(g, stem(def) + "-" + kind + ".csv", lyap::sweep_csv(report));
        for (const auto& run : report.runs)
          if (run.trajectory)
            emit(g, stem(def) + "-eps-" + lyap::format_double(run.epsilon) + ".csv",
                 lyap::trajectory_csv(*run.trajectory));
      } else {
        emit(g, stem(def) + "-" + kind + ".json", lyap::to_json(report));
      }
      for (const auto& run : report.runs)
        if (!run.ok) std::cerr << "failure: eps " << lyap::format_double(run.epsilon) << ": " << run.failure << "\n";
      bool failed = false;
      for (const auto& run : report.runs) failed = failed || !run.ok;
      std::vector<std::string> mismatches;
      if (*escape) {
        mismatches = lyap::escape_mismatches(def, report);
      } else {
        for (const auto& run : report.runs)
          if (run.ok && run.bound_violation)
            mismatches.push_back("eps " + lyap::format_double(run.epsilon) + ": energy bounds violated");
      }
      const int code = report_mismatches(mismatches);
      return failed ? kNumerical : code;
    }
    if (*chart) {
      auto def = load(problem);
      if (!def.chart) throw lyap::InvalidArgument("problem has no chart");
      if (multi && !def.chart->multi()) throw lyap::InvalidArgument("problem chart uses a single function");
      if (g.format != "json") throw lyap::InvalidArgument("chart reports are JSON only");
      const auto result = lyap::run_chart(def, g.seed);
      emit(g, stem(def) + "-chart.json", lyap::to_json(result));
      std::vector<std::string> mismatches;
      if (!result.block.pass) mismatches.push_back("pulled-back metric is not block diagonal");
      if (!result.chart.injective) mismatches.push_back("grid images collide");
      if (result.contraction && result.contraction->max_component > 1e-8)
        mismatches.push_back("contracted pullback form does not vanish");
      if (result.commuting && result.commuting->verdict != lyap::Verdict::kCertified)
        mismatches.push_back("level functions are not orthogonal and commuting");
      return report_mismatches(mismatches);
    }
    if (*corpus_list) {
      for (const auto& def : lyap::corpus()) {
        std::cout << def.name << "  " << (def.expected ? lyap::to_string(*def.expected) : std::string("-")) << "  "
                  << def.description << "\n";
      }
      return kOk;
    }
    if (*corpus_show) {
      std::cout << lyap::corpus_json(corpus_name);
      return kOk;
    }
    if (*corpus_run) {
      std::vector<lyap::ProblemOutcome> all;
      for (auto def : lyap::corpus()) {
        apply_tolerances(g, def);
        std::cerr << "running " << def.name << "\n";
        auto options = lyap::sweep_options_for(def);
        options.parallel = true;
        all.push_back(lyap::run_problem(def, g.seed, options));
      }
      emit(g, "run-all.json", lyap::to_json(all));
      bool failed = false;
      bool mismatched = false;
      for (const auto& p : all) {
        for (const auto& f : p.failures) std::cerr << p.name << ": failure: " << f << "\n";
        for (const auto& m : p.mismatches) std::cerr << p.name << ": mismatch: " << m << "\n";
        failed = failed || !p.failures.empty();
        mismatched = mismatched || !p.mismatches.empty();
      }
      return failed ? kNumerical : (mismatched ? kMismatch : kOk);
    }
  } catch (const lyap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.category() == lyap::Error::Category::kValidation ? kValidation : kNumerical;
  }
  return kOk;
}
