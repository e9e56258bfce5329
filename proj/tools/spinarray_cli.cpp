// spinarray: analytic gains, Monte Carlo runs and oracle checks for arrays of
// entangled spin-squeezed sensors.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spinarray/commands.hpp"

namespace {

constexpr const char* kColumns = R"(CSV columns:
  gain-table       formula,m_sensors,ratio,db
  simulate         kind,label,estimate,truth,variance,sql,gain_ratio,gain_db,se_gain_db
                   (--shots: config_index,shot_index,S_1^z..S_M^z;
                    --matrix: config_index,combination_index,gain_db)
  combo-scan       angle_deg,c_1,c_2,n_1,n_2,sign_1,sign_2,gain_db,se_gain_db,analytic_gain_db,xi2_db
  oracle-validate  n_atoms,twist,partition,quantity,value,tolerance,pass
  crb-check        n_atoms,m_sensors,xi2,sigma_h,lambda_h,ratio,satisfied,method,applicable,pure_state
Exit codes: 0 success, 2 scenario parse error, 3 infeasible plan, 4 numerical failure
(oracle-validate also returns 4 when a check fails).)";

}  // namespace

int main(int argc, char** argv) {
  spinarray::CommandOptions opt;
  CLI::App app{"Joint multiparameter estimation with entangled spin-squeezed sensor arrays"};
  app.footer(kColumns);
  app.require_subcommand(1);

  std::string format;
  std::uint64_t seed = 0;
  int mu = 0;
  auto common = [&](CLI::App* sub, bool needs_scenario) {
    auto* s = sub->add_option("--scenario", opt.scenario, "Scenario document (JSON)");
    if (needs_scenario) s->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output path (default: document output.path, else stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "Overrides simulate.seed");
    sub->add_option("--mu", mu, "Overrides the total number of repetitions")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opt.quiet, "No summary on stderr");
  };

  auto* gain = app.add_subcommand("gain-table", "Closed-form and fused analytic gains");
  common(gain, true);
  auto* sim = app.add_subcommand("simulate", "Monte Carlo run of the configuration plan");
  common(sim, true);
  sim->add_option("--shots", opt.shots_out, "Also write the raw shots as CSV");
  sim->add_option("--matrix", opt.matrix_out, "Also write the configuration gain matrix as CSV");
  auto* scan = app.add_subcommand("combo-scan", "Single-combination gains over mixing angles (M = 2)");
  common(scan, true);
  scan->add_option("--angles", opt.angles_deg, "Mixing angles in degrees")->delimiter(',');
  auto* oracle = app.add_subcommand("oracle-validate", "Closed-form moments against 2^N brute force");
  common(oracle, false);
  oracle->add_option("--max-n", opt.max_n, "Largest atom number (<= 12)")->check(CLI::Range(2, 12));
  auto* crb = app.add_subcommand("crb-check", "Harmonic-mean Cramer-Rao inequality");
  common(crb, true);
  std::string method = "analytic";
  crb->add_option("--method", method, "analytic or monte-carlo")->check(CLI::IsMember({"analytic", "monte-carlo"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return spinarray::kExitParse;
  }

  auto* chosen = app.get_subcommands().front();
  if (chosen->count("--format")) opt.format = format;
  if (chosen->count("--seed")) opt.seed = seed;
  if (chosen->count("--mu")) opt.mu = mu;
  opt.crb_method = method == "analytic" ? spinarray::CrbMethod::Analytic : spinarray::CrbMethod::MonteCarlo;
  return spinarray::run_command(chosen->get_name(), opt, std::cout, std::cerr);
}
