#pragma once
//
// JSON scenario documents. Top-level sections: resource, partition, plan,
// encoding, simulate, output. Unknown keys are rejected; every error carries
// the 1-based line and column of the offending key or value.
//

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spinarray/simulate.hpp"

namespace spinarray {

struct ScenarioDocument {
  ScenarioSpec spec;
  std::optional<double> oat_twist;   // set when the resource is an exact OAT state
  std::vector<double> scan_angles;   // radians; empty means the default sweep
  std::string output_format = "csv";
  std::optional<std::string> output_path;
};

/// Throws ScenarioError for syntax and schema problems. Plans that cannot be
/// realised (mu smaller than the configuration count) raise InfeasiblePlan.
ScenarioDocument parse_scenario(std::string_view text);
ScenarioDocument load_scenario(const std::filesystem::path& path);

/// Re-splits the plan over mu repetitions.
void override_mu(ScenarioDocument& doc, int mu);

}  // namespace spinarray
