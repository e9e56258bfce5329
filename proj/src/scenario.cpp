#include "spinarray/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "spinarray/errors.hpp"
#include "spinarray/oat_oracle.hpp"

namespace spinarray {

namespace {

using nlohmann::json;

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Byte offsets of every object key and array element, keyed by path
// ("/plan/configs/1"). Runs on text that nlohmann has already accepted.
class Locator {
 public:
  explicit Locator(std::string_view text) : s_(text) {
    skip_ws();
    value("");
  }

  std::size_t offset(std::string path) const {
    while (true) {
      if (const auto it = pos_.find(path); it != pos_.end()) return it->second;
      if (path.empty()) return 0;
      path.erase(path.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  std::string string_token() {
    std::string out;
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') out += s_[i_++];
      out += s_[i_++];
    }
    ++i_;
    return out;
  }

  void value(const std::string& path) {
    pos_.emplace(path, i_);
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::size_t key_at = i_;
        const std::string child = path + "/" + string_token();
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        value(child);
        pos_[child] = key_at;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      for (int k = 0; i_ < s_.size() && s_[i_] != ']'; ++k) {
        value(fmt::format("{}/{}", path, k));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != ' ' &&
             s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t') {
        ++i_;
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::map<std::string, std::size_t> pos_;
};

class Reader {
 public:
  Reader(std::string_view text, const Locator& loc) : text_(text), loc_(loc) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    const auto [line, col] = line_column(text_, loc_.offset(path));
    throw ScenarioError(fmt::format("{}:{}: {}: {}", line, col, path.empty() ? "/" : path, message), line, col);
  }

  void allow(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      bool ok = false;
      for (const auto k : keys) ok = ok || key == k;
      if (!ok) fail(path + "/" + key, fmt::format("unknown key '{}'", key));
    }
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  std::int64_t integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(path, "integer out of range");
    }
    return v.get<std::int64_t>();
  }

  int small_int(const json& v, const std::string& path, std::int64_t lo) const {
    const auto x = integer(v, path);
    if (x < lo || x > INT32_MAX) fail(path, fmt::format("expected an integer in [{}, {}]", lo, INT32_MAX));
    return static_cast<int>(x);
  }

  std::vector<double> numbers(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], fmt::format("{}/{}", path, i)));
    return out;
  }

 private:
  std::string_view text_;
  const Locator& loc_;
};

SqueezedResource read_resource(const Reader& r, const json& j, std::optional<double>& twist) {
  const std::string p = "/resource";
  r.allow(j, p, {"n_atoms", "xi2_db", "contrast", "var_sz", "mean_sx", "var_sy", "oat_twist"});
  if (!j.contains("n_atoms")) r.fail(p, "missing 'n_atoms'");
  const int n = r.small_int(j["n_atoms"], p + "/n_atoms", 1);
  std::optional<double> var_sy;
  if (j.contains("var_sy")) var_sy = r.number(j["var_sy"], p + "/var_sy");

  SqueezedResource res;
  if (j.contains("oat_twist")) {
    for (const char* k : {"xi2_db", "contrast", "var_sz", "mean_sx", "var_sy"}) {
      if (j.contains(k)) r.fail(p + "/" + k, "not allowed together with 'oat_twist'");
    }
    const auto& t = j["oat_twist"];
    if (t.is_string()) {
      if (t.get<std::string>() != "best") r.fail(p + "/oat_twist", "expected a number or \"best\"");
      if (n < 3) r.fail(p + "/oat_twist", "best squeezing needs at least 3 atoms");
      twist = best_squeezing_twist(n);
    } else {
      twist = r.number(t, p + "/oat_twist");
      if (*twist < 0.0) r.fail(p + "/oat_twist", "must be >= 0");
    }
    if (n < 2) r.fail(p + "/n_atoms", "an OAT state needs at least 2 atoms");
    res = resource_from_state(aligned_oat(n, *twist));
  } else if (j.contains("xi2_db")) {
    for (const char* k : {"var_sz", "mean_sx"}) {
      if (j.contains(k)) r.fail(p + "/" + k, "not allowed together with 'xi2_db'");
    }
    if (!j.contains("contrast")) r.fail(p, "'xi2_db' needs 'contrast'");
    const double xi2 = from_db(r.number(j["xi2_db"], p + "/xi2_db"));
    const double contrast = r.number(j["contrast"], p + "/contrast");
    if (!(contrast > 0.0 && contrast <= 1.0)) r.fail(p + "/contrast", "must lie in (0, 1]");
    res.n_atoms = n;
    res.mean_sx = 0.5 * contrast * n;
    res.var_sz = xi2 * res.mean_sx * res.mean_sx / n;
    res.var_sy = var_sy;
  } else {
    if (j.contains("contrast")) r.fail(p + "/contrast", "'contrast' needs 'xi2_db'");
    if (!j.contains("var_sz") || !j.contains("mean_sx")) {
      r.fail(p, "give either oat_twist, xi2_db with contrast, or var_sz with mean_sx");
    }
    res.n_atoms = n;
    res.var_sz = r.number(j["var_sz"], p + "/var_sz");
    res.mean_sx = r.number(j["mean_sx"], p + "/mean_sx");
    res.var_sy = var_sy;
  }
  try {
    res.validate();
  } catch (const InvalidInput& e) {
    r.fail(p, e.what());
  }
  return res;
}

SensorPartition read_partition(const Reader& r, const json& j, const SqueezedResource& res) {
  const std::string p = "/partition";
  r.allow(j, p, {"atom_counts", "contrasts"});
  if (!j.contains("atom_counts")) r.fail(p, "missing 'atom_counts'");
  const auto& a = j["atom_counts"];
  SensorPartition part;
  if (a.is_string()) {
    const auto s = a.get<std::string>();
    int m = 0;
    std::size_t used = 0;
    if (s.rfind("equal:", 0) != 0) r.fail(p + "/atom_counts", "expected a list or \"equal:M\"");
    try {
      m = std::stoi(s.substr(6), &used);
    } catch (const std::exception&) {
      r.fail(p + "/atom_counts", "expected \"equal:M\" with integer M");
    }
    if (used != s.size() - 6 || m < 1) r.fail(p + "/atom_counts", "expected \"equal:M\" with M >= 1");
    if (m > res.n_atoms) r.fail(p + "/atom_counts", "more sensors than atoms");
    part = SensorPartition::equal(res.n_atoms, m, res.contrast());
  } else {
    if (!a.is_array() || a.empty()) r.fail(p + "/atom_counts", "expected a non-empty list");
    std::vector<int> counts;
    for (std::size_t i = 0; i < a.size(); ++i) counts.push_back(r.small_int(a[i], fmt::format("{}/atom_counts/{}", p, i), 1));
    part = SensorPartition::with_contrast(counts, res.contrast());
  }
  if (j.contains("contrasts")) {
    const auto& c = j["contrasts"];
    if (c.is_number()) {
      part.contrasts.assign(part.atom_counts.size(), r.number(c, p + "/contrasts"));
    } else {
      part.contrasts = r.numbers(c, p + "/contrasts");
      if (part.contrasts.size() != part.atom_counts.size()) r.fail(p + "/contrasts", "one contrast per sensor");
    }
  }
  try {
    part.validate_against(res);
  } catch (const InvalidInput& e) {
    r.fail(p, e.what());
  }
  return part;
}

std::vector<SignConfiguration> read_configs(const Reader& r, const json& plan, int m) {
  const std::string p = "/plan/configs";
  if (!plan.contains("configs")) return configuration_set(m);
  const auto& c = plan["configs"];
  if (c.is_string()) {
    if (c.get<std::string>() != "hadamard") r.fail(p, "expected \"hadamard\" or a list of sign lists");
    return configuration_set(m);
  }
  if (!c.is_array() || c.empty()) r.fail(p, "expected \"hadamard\" or a non-empty list of sign lists");
  std::vector<SignConfiguration> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::string q = fmt::format("{}/{}", p, i);
    if (!c[i].is_array() || static_cast<int>(c[i].size()) != m) r.fail(q, fmt::format("expected {} signs", m));
    SignConfiguration s;
    for (std::size_t k = 0; k < c[i].size(); ++k) {
      const auto v = r.integer(c[i][k], fmt::format("{}/{}", q, k));
      if (v != 1 && v != -1) r.fail(fmt::format("{}/{}", q, k), "signs must be +1 or -1");
      s.signs.push_back(static_cast<int>(v));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LinearCombination> read_combinations(const Reader& r, const json& plan, int m) {
  std::vector<LinearCombination> out;
  if (!plan.contains("combinations")) return out;
  const std::string p = "/plan/combinations";
  const auto& c = plan["combinations"];
  if (!c.is_array()) r.fail(p, "expected a list");
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::string q = fmt::format("{}/{}", p, i);
    LinearCombination comb;
    if (c[i].is_object()) {
      r.allow(c[i], q, {"mixing_angle_deg"});
      if (!c[i].contains("mixing_angle_deg")) r.fail(q, "missing 'mixing_angle_deg'");
      if (m != 2) r.fail(q, "mixing angles need two sensors");
      comb = LinearCombination::from_mixing_angle(r.number(c[i]["mixing_angle_deg"], q + "/mixing_angle_deg") *
                                                  std::numbers::pi / 180.0);
    } else {
      comb.coeffs = r.numbers(c[i], q);
      if (comb.m() != m) r.fail(q, fmt::format("expected {} coefficients", m));
    }
    try {
      comb.validate();
    } catch (const InvalidInput& e) {
      r.fail(q, e.what());
    }
    out.push_back(std::move(comb));
  }
  return out;
}

}  // namespace

ScenarioDocument parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ScenarioError(fmt::format("{}:{}: malformed JSON: {}", line, col, e.what()), line, col);
  }
  const Locator loc(text);
  const Reader r(text, loc);
  r.allow(root, "", {"resource", "partition", "plan", "encoding", "simulate", "output"});
  if (!root.contains("resource")) r.fail("", "missing section 'resource'");
  if (!root.contains("partition")) r.fail("", "missing section 'partition'");

  ScenarioDocument doc;
  auto& spec = doc.spec;
  spec.resource = read_resource(r, root["resource"], doc.oat_twist);
  spec.partition = read_partition(r, root["partition"], spec.resource);
  const int m = spec.partition.m();

  const json sim = root.value("simulate", json::object());
  r.allow(sim, "/simulate", {"mu_total", "seed", "detection_noise_sd"});
  int mu_total = 100000;
  if (sim.contains("mu_total")) mu_total = r.small_int(sim["mu_total"], "/simulate/mu_total", 1);
  if (sim.contains("seed")) {
    if (!sim["seed"].is_number_unsigned()) r.fail("/simulate/seed", "expected a non-negative integer");
    spec.seed = sim["seed"].get<std::uint64_t>();
  }
  if (sim.contains("detection_noise_sd")) {
    spec.detection_noise_sd = r.number(sim["detection_noise_sd"], "/simulate/detection_noise_sd");
    if (spec.detection_noise_sd < 0.0) r.fail("/simulate/detection_noise_sd", "must be >= 0");
  }

  const json plan = root.value("plan", json::object());
  r.allow(plan, "/plan", {"configs", "reps", "combinations", "scan_angles_deg"});
  const auto configs = read_configs(r, plan, m);
  if (plan.contains("reps")) {
    if (sim.contains("mu_total")) r.fail("/plan/reps", "give either plan.reps or simulate.mu_total");
    const auto& reps = plan["reps"];
    if (reps.is_array() && reps.size() != configs.size()) r.fail("/plan/reps", "one repetition count per configuration");
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const int n = reps.is_array() ? r.small_int(reps[i], fmt::format("/plan/reps/{}", i), 1)
                                    : r.small_int(reps, "/plan/reps", 1);
      spec.plan.entries.push_back({configs[i], n});
    }
  } else {
    spec.plan = ConfigurationPlan::split(configs, mu_total);
  }
  spec.combinations = read_combinations(r, plan, m);
  if (plan.contains("scan_angles_deg")) {
    for (const double a : r.numbers(plan["scan_angles_deg"], "/plan/scan_angles_deg")) {
      doc.scan_angles.push_back(a * std::numbers::pi / 180.0);
    }
  }

  const json enc = root.value("encoding", json::object());
  r.allow(enc, "/encoding", {"theta"});
  spec.true_theta = Eigen::VectorXd::Zero(m);
  if (enc.contains("theta")) {
    const auto theta = r.numbers(enc["theta"], "/encoding/theta");
    if (static_cast<int>(theta.size()) != m) r.fail("/encoding/theta", fmt::format("expected {} angles", m));
    for (int k = 0; k < m; ++k) spec.true_theta[k] = theta[static_cast<std::size_t>(k)];
  }

  const json out = root.value("output", json::object());
  r.allow(out, "/output", {"format", "path"});
  if (out.contains("format")) {
    if (!out["format"].is_string()) r.fail("/output/format", "expected \"csv\" or \"json\"");
    doc.output_format = out["format"].get<std::string>();
    if (doc.output_format != "csv" && doc.output_format != "json") r.fail("/output/format", "expected \"csv\" or \"json\"");
  }
  if (out.contains("path")) {
    if (!out["path"].is_string()) r.fail("/output/path", "expected a string");
    doc.output_path = out["path"].get<std::string>();
  }

  try {
    spec.validate();
  } catch (const InvalidInput& e) {
    r.fail("", e.what());
  }
  return doc;
}

ScenarioDocument load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(fmt::format("cannot open scenario '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void override_mu(ScenarioDocument& doc, int mu) { doc.spec.plan = doc.spec.plan.rescaled(mu); }

}  // namespace spinarray
