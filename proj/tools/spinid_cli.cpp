// spinid: simulate, analyze, pair and identify Heisenberg spin networks.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spinid/io.hpp"

namespace {

using namespace spinid;
using io::json;

enum Exit : int { ok = 0, parse_error = 1, invalid_state = 2, cap_exceeded = 3, not_equivalent = 10 };

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    io::write_file_atomic(out, content);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const std::string& model_path, const std::string& schedule_path, double grid,
                 const std::string& out) {
  if (!(grid > 0.0)) throw io::ParseError("--grid must be positive");
  const io::ModelFile model = io::load_model(model_path);
  if (!model.state) throw io::InvalidState(model_path + ": model has no initial_state");
  const ControlSchedule sched = [&] {
    try {
      return io::parse_schedule(io::read_json(schedule_path));
    } catch (const io::ParseError& e) {
      throw io::ParseError(schedule_path + ": " + e.what());
    }
  }();
  emit(out, io::trace_to_csv(magnetization_trace(model.net, sched, *model.state, grid)));
  return ok;
}

int cmd_analyze(const std::string& model_path, const std::string& out) {
  const io::ModelFile model = io::load_model(model_path, DensityMatrix::Positivity::report);
  emit(out, dump(io::report_to_json(analyze(model.net))));
  return ok;
}

int cmd_partner(const std::string& pair_path, const std::string& out) {
  const PartnerResult partner = partner_pair(io::load_pair(pair_path));
  emit(out, dump(io::pair_to_json(partner.pair)));
  std::fprintf(stderr, "psd_ok=%s min_eigenvalue=%s\n", partner.psd_ok ? "true" : "false",
               io::format15(partner.min_eigenvalue).c_str());
  return ok;
}

int cmd_equiv(const std::string& a_path, const std::string& b_path, const EquivalenceOptions& options,
              const std::string& out) {
  const ModelStatePair a = io::load_pair(a_path, DensityMatrix::Positivity::report);
  const ModelStatePair b = io::load_pair(b_path, DensityMatrix::Positivity::report);
  const EquivalenceVerdict verdict = equivalence_test(a, b, options);
  emit(out, dump(io::verdict_to_json(verdict)));
  return verdict.equivalent ? ok : not_equivalent;
}

ParameterVector default_guess(const Dataset& data) {
  SpinNetwork net(data.spins);
  for (int k = 1; k <= data.spins; ++k) net.set_gamma(k, 1.0 + 0.5 * (k - 1));
  for (const Edge& e : data.edges) net.set_coupling(e.first, e.second, 1.0);
  return ParameterVector::from_network(net, data.edges);
}

void summarize(const FitResult& r) {
  std::fprintf(stderr, "branch %-2s residual=%s iterations=%d converged=%s\n", r.branch.c_str(),
               io::format15(r.residual).c_str(), r.iterations, r.converged ? "true" : "false");
  for (const std::string& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int cmd_identify(const std::string& dir, const FitOptions& options, const std::string& out) {
  const io::DatasetDir ds = io::load_dataset(dir);
  const ParameterVector guess = ds.initial_guess ? *ds.initial_guess : default_guess(ds.data);
  if (ds.known_state) {
    const FitResult r = fit_known_state(ds.data, *ds.state, guess, options);
    summarize(r);
    emit(out, dump(io::fit_to_json(r)));
    return ok;
  }
  const auto [primary, partner] = fit_unknown_state(ds.data, guess, options);
  summarize(primary);
  summarize(partner);
  emit(out, dump(json{{"branches", {io::fit_to_json(primary), io::fit_to_json(partner)}}}));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin network model identification toolkit"};
  app.require_subcommand(1);

  std::string model, schedule, pair, pair_a, pair_b, data_dir, out;
  double grid = kDefaultGrid;
  EquivalenceOptions eq;
  FitOptions fit;

  auto* simulate = app.add_subcommand("simulate", "Write the magnetization trace of a model under a schedule");
  simulate->add_option("--model", model, "Model file with initial_state")->required();
  simulate->add_option("--schedule", schedule, "Control schedule file")->required();
  simulate->add_option("--grid", grid, "Sample spacing")->capture_default_str();
  simulate->add_option("--out", out, "Output CSV (stdout if omitted)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Report controllability and observability");
  analyze_cmd->add_option("--model", model, "Model file")->required();
  analyze_cmd->add_option("--out", out, "Output JSON (stdout if omitted)");

  auto* partner = app.add_subcommand("partner", "Write the sign-flipped partner of a model-state pair");
  partner->add_option("--pair", pair, "Model file with initial_state")->required();
  partner->add_option("--out", out, "Output JSON (stdout if omitted)");

  auto* equiv = app.add_subcommand("equiv", "Compare two model-state pairs on random probe schedules");
  equiv->add_option("--pair-a", pair_a, "First pair")->required();
  equiv->add_option("--pair-b", pair_b, "Second pair")->required();
  equiv->add_option("--trials", eq.trials, "Number of probe schedules")->capture_default_str();
  equiv->add_option("--seed", eq.seed, "Random seed")->capture_default_str();
  equiv->add_option("--tol", eq.tolerance, "Maximum allowed deviation")->capture_default_str();
  equiv->add_option("--out", out, "Output JSON (stdout if omitted)");

  auto* identify = app.add_subcommand("identify", "Fit couplings and gyromagnetic ratios to recorded traces");
  identify->add_option("--data-dir", data_dir, "Dataset directory")->required();
  identify->add_option("--starts", fit.starts, "Number of multi-start runs")->capture_default_str();
  identify->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  identify->add_option("--out", out, "Output JSON (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return parse_error;
  }

  try {
    if (*simulate) return cmd_simulate(model, schedule, grid, out);
    if (*analyze_cmd) return cmd_analyze(model, out);
    if (*partner) return cmd_partner(pair, out);
    if (*equiv) {
      if (eq.trials < 1) throw io::ParseError("--trials must be at least 1");
      if (!(eq.tolerance >= 0.0)) throw io::ParseError("--tol must be non-negative");
      return cmd_equiv(pair_a, pair_b, eq, out);
    }
    if (*identify) {
      if (fit.starts < 1) throw io::ParseError("--starts must be at least 1");
      return cmd_identify(data_dir, fit, out);
    }
  } catch (const io::InvalidState& e) {
    std::cerr << "error: invalid state: " << e.what() << "\n";
    return invalid_state;
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << " (closure cap " << e.cap() << ")\n";
    return cap_exceeded;
  } catch (const std::domain_error& e) {
    std::cerr << "error: invalid state: " << e.what() << "\n";
    return invalid_state;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_error;
  }
  return parse_error;
}
