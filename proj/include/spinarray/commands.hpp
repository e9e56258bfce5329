#pragma once
//
// Subcommand back ends. Each produces a Table that is written as CSV (header
// line first) or as a JSON array of row objects.
//

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spinarray/bounds.hpp"
#include "spinarray/scenario.hpp"

namespace spinarray {

using Cell = std::variant<std::string, double, std::int64_t, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
  void write(std::ostream& out, const std::string& format) const;
};

/// formula, m_sensors, ratio, db.
Table gain_table(const ScenarioDocument& doc);
/// kind, label, estimate, truth, variance, sql, gain_ratio, gain_db, se_gain_db.
Table report_table(const EstimationReport& report);
/// config_index, combination_index, gain_db.
Table gain_matrix_table(const EstimationReport& report);
/// angle_deg, c_1, c_2, n_1, n_2, sign_1, sign_2, gain_db, se_gain_db, analytic_gain_db, xi2_db.
Table combo_scan_table(const ScenarioDocument& doc, std::span<const double> angles);
/// n_atoms, twist, partition, quantity, value, tolerance, pass.
Table oracle_validation_table(int max_n);
/// n_atoms, m_sensors, xi2, sigma_h, lambda_h, ratio, satisfied, method, applicable, pure_state.
Table crb_table(const ScenarioDocument& doc, CrbMethod method);

struct CommandOptions {
  std::string scenario;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  std::optional<int> mu;
  bool quiet = false;
  std::optional<std::string> shots_out;
  std::optional<std::string> matrix_out;
  std::vector<double> angles_deg;
  int max_n = 10;
  CrbMethod crb_method = CrbMethod::Analytic;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumerical = 4;

/// Runs one subcommand ("gain-table", "simulate", "combo-scan",
/// "oracle-validate", "crb-check") and maps library errors to exit codes.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace spinarray
