#include "spinarray/commands.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "spinarray/errors.hpp"
#include "spinarray/oat_oracle.hpp"

namespace spinarray {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (const char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          return q + "\"";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return fmt::format("{}", v);
        }
      },
      c);
}

nlohmann::ordered_json json_cell(const Cell& c) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

std::string partition_label(const std::vector<int>& counts) {
  return fmt::format("{}", fmt::join(counts, "+"));
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

void Table::write_csv(std::ostream& out) const {
  out << fmt::format("{}\n", fmt::join(columns, ","));
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
}

void Table::write_json(std::ostream& out) const {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i) obj[columns[i]] = json_cell(row[i]);
    arr.push_back(obj);
  }
  out << arr.dump(2) << '\n';
}

void Table::write(std::ostream& out, const std::string& format) const {
  if (format == "json") {
    write_json(out);
  } else {
    write_csv(out);
  }
}

Table gain_table(const ScenarioDocument& doc) {
  const auto& spec = doc.spec;
  const auto& res = spec.resource;
  const int m = spec.m();
  Table t{{"formula", "m_sensors", "ratio", "db"}, {}};
  auto add = [&](const std::string& name, double ratio) {
    t.rows.push_back({name, std::int64_t{m}, ratio, to_db(ratio)});
  };
  add("css_baseline", 1.0);
  add("local", local_gain(res, m));
  add("joint", joint_gain(res, m, GainForm::Exact));
  add("joint_large_n", joint_gain(res, m, GainForm::LargeN));
  add("single_combination", res.xi2());
  add("antisqueezed", antisqueezed_gain(res));
  const auto report = analytic_protocol(spec);
  for (const auto& p : report.parameters) add("fused_" + p.label, p.gain.ratio);
  for (const auto& c : report.combinations) add("fused_" + c.label, c.gain.ratio);
  return t;
}

Table report_table(const EstimationReport& report) {
  Table t{{"kind", "label", "estimate", "truth", "variance", "sql", "gain_ratio", "gain_db", "se_gain_db"}, {}};
  auto add = [&](const char* kind, const ParameterResult& p) {
    t.rows.push_back({std::string(kind), p.label, p.estimate, p.truth, p.variance, p.sql, p.gain.ratio, p.gain.db,
                      p.se_gain_db});
  };
  for (const auto& p : report.parameters) add("parameter", p);
  for (const auto& c : report.combinations) add("combination", c);
  return t;
}

Table gain_matrix_table(const EstimationReport& report) {
  Table t{{"config_index", "combination_index", "gain_db"}, {}};
  const auto& g = report.configuration_gain_db;
  for (Eigen::Index l = 0; l < g.rows(); ++l) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) t.rows.push_back({std::int64_t{l}, std::int64_t{j}, g(l, j)});
  }
  return t;
}

Table combo_scan_table(const ScenarioDocument& doc, std::span<const double> angles) {
  Table t{{"angle_deg", "c_1", "c_2", "n_1", "n_2", "sign_1", "sign_2", "gain_db", "se_gain_db", "analytic_gain_db",
           "xi2_db"},
          {}};
  for (const auto& r : sweep_mixing_angle(doc.spec, angles)) {
    t.rows.push_back({r.angle * kDeg, r.coefficients[0], r.coefficients[1], std::int64_t{r.atom_counts[0]},
                      std::int64_t{r.atom_counts[1]}, std::int64_t{r.signs[0]}, std::int64_t{r.signs[1]}, r.gain_db,
                      r.se_gain_db, r.analytic_gain_db, r.xi2_db});
  }
  return t;
}

Table oracle_validation_table(int max_n) {
  if (max_n < 2 || max_n > kMaxBruteForceAtoms) {
    throw InvalidInput(fmt::format("oracle-validate: max_n must be in [2, {}]", kMaxBruteForceAtoms));
  }
  constexpr double tol = 1e-10;
  Table t{{"n_atoms", "twist", "partition", "quantity", "value", "tolerance", "pass"}, {}};
  for (int n = 2; n <= max_n; ++n) {
    std::vector<std::vector<int>> partitions = {SensorPartition::equal(n, 2, 1.0).atom_counts};
    if (n >= 3) {
      partitions.push_back(SensorPartition::equal(n, 3, 1.0).atom_counts);
      partitions.push_back({1, n - 1});
    }
    if (n >= 6) partitions.push_back({1, 2, n - 3});
    for (const double twist : {0.0, 0.1, 0.25, 0.5}) {
      const auto state = aligned_oat(n, twist);
      auto res = resource_from_state(state);
      for (const auto& counts : partitions) {
        const auto part = SensorPartition::with_contrast(counts, res.contrast());
        const auto model = partition_moments(res, part);
        const auto brute = brute_force_moments(n, twist, state.rotation_x, counts);
        const std::string label = partition_label(counts);
        auto add = [&](const char* what, double dev) {
          t.rows.push_back({std::int64_t{n}, twist, label, std::string(what), dev, tol, dev < tol});
        };
        add("gamma", max_abs_diff(model.gamma, brute.gamma));
        add("response", max_abs_diff(model.response, brute.response));
        add("mean_sx", max_abs_diff(part.mean_spins(), brute.mean_sx));
        add("fisher", max_abs_diff(fisher_matrix(res, part), 4.0 * brute.cov_sy));
      }
    }
  }
  constexpr int n_dip = 100;
  const double best = best_squeezing_twist(n_dip);
  const double xi2 = aligned_xi2(n_dip, best);
  const bool dip = xi2 < 1.0 && aligned_xi2(n_dip, 0.1 * best) > xi2 && aligned_xi2(n_dip, 10.0 * best) > xi2;
  t.rows.push_back({std::int64_t{n_dip}, best, std::string("collective"), std::string("xi2_dip"), xi2, 1.0, dip});
  return t;
}

Table crb_table(const ScenarioDocument& doc, CrbMethod method) {
  Table t{{"n_atoms", "m_sensors", "xi2", "sigma_h", "lambda_h", "ratio", "satisfied", "method", "applicable",
           "pure_state"},
          {}};
  const auto& spec = doc.spec;
  const auto r = crb_for_scenario(spec, method);
  const std::string name = method == CrbMethod::Analytic ? "analytic" : "monte_carlo";
  if (r.applicable) {
    t.rows.push_back({std::int64_t{spec.resource.n_atoms}, std::int64_t{spec.m()}, spec.resource.xi2(), r.sigma_h,
                      r.lambda_h, r.ratio, r.satisfied, name, true, r.pure_state});
  } else {
    t.rows.push_back({std::int64_t{spec.resource.n_atoms}, std::int64_t{spec.m()}, spec.resource.xi2(),
                      std::string(), std::string(), std::string(), std::string("not_applicable"), name, false,
                      r.pure_state});
  }
  return t;
}

namespace {

class Output {
 public:
  Output(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path && *path != "-") {
      file_ = std::make_unique<std::ofstream>(*path, std::ios::binary);
      if (!*file_) throw std::runtime_error(fmt::format("cannot write '{}'", *path));
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_file(const std::string& path, const auto& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  writer(f);
}

int dispatch(const std::string& name, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  if (name == "oracle-validate") {
    const auto table = oracle_validation_table(opt.max_n);
    Output o(opt.out, out);
    table.write(o.get(), opt.format.value_or("csv"));
    std::size_t failed = 0;
    for (const auto& row : table.rows) failed += std::get<bool>(row.back()) ? 0 : 1;
    if (!opt.quiet) err << fmt::format("oracle-validate: {} checks, {} failed\n", table.rows.size(), failed);
    return failed == 0 ? kExitOk : kExitNumerical;
  }

  if (opt.scenario.empty()) throw ScenarioError(fmt::format("{}: --scenario is required", name));
  auto doc = load_scenario(opt.scenario);
  if (opt.seed) doc.spec.seed = *opt.seed;
  if (opt.mu) override_mu(doc, *opt.mu);
  const std::string format = opt.format.value_or(doc.output_format);
  Output o(opt.out ? opt.out : doc.output_path, out);

  if (name == "gain-table") {
    gain_table(doc).write(o.get(), format);
  } else if (name == "simulate") {
    const auto shots = sample_shots(doc.spec);
    const auto stats = configuration_statistics(shots);
    const auto report =
        fuse_configurations(stats, doc.spec.plan, doc.spec.partition, doc.spec.combinations, doc.spec.true_theta);
    if (format == "json") {
      nlohmann::ordered_json j;
      j["n_atoms"] = report.n_atoms;
      j["mu_total"] = report.mu_total;
      j["dof"] = report.dof;
      auto rows = nlohmann::ordered_json::array();
      const auto table = report_table(report);
      for (const auto& row : table.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = json_cell(row[i]);
        rows.push_back(obj);
      }
      j["estimates"] = rows;
      j["covariance"] = matrix_json(report.covariance);
      j["configuration_gain_db"] = matrix_json(report.configuration_gain_db);
      o.get() << j.dump(2) << '\n';
    } else {
      report_table(report).write_csv(o.get());
    }
    if (opt.shots_out) write_file(*opt.shots_out, [&](std::ostream& f) { write_shots_csv(shots, f); });
    if (opt.matrix_out) write_file(*opt.matrix_out, [&](std::ostream& f) { gain_matrix_table(report).write_csv(f); });
    if (!opt.quiet) {
      for (const auto& p : report.parameters) {
        err << fmt::format("{}: gain {:.3f} +/- {:.3f} dB\n", p.label, p.gain.db, p.se_gain_db);
      }
    }
  } else if (name == "combo-scan") {
    if (doc.spec.m() != 2) throw InvalidInput("combo-scan: the scenario must have two sensors");
    std::vector<double> angles;
    for (const double a : opt.angles_deg) angles.push_back(a / kDeg);
    if (angles.empty()) angles = doc.scan_angles;
    if (angles.empty()) angles = default_sweep_angles();
    combo_scan_table(doc, angles).write(o.get(), format);
  } else if (name == "crb-check") {
    const auto table = crb_table(doc, opt.crb_method);
    table.write(o.get(), format);
    if (!opt.quiet) {
      const auto& row = table.rows.front();
      err << fmt::format("crb-check: satisfied = {}\n", csv_cell(row[6]));
    }
  } else {
    throw InvalidInput(fmt::format("unknown subcommand '{}'", name));
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(name, options, out, err);
  } catch (const ScenarioError& e) {
    err << "scenario error: " << e.what() << '\n';
    return kExitParse;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitParse;
  } catch (const InfeasiblePlan& e) {
    err << "infeasible plan: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace spinarray
