#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmab/policies.hpp"
#include "rmab/sim.hpp"
#include "rmab/whittle.hpp"

namespace rmab {

/// wiql, opt, ab, fu, greedy, random, myopic.
const std::vector<std::string>& policy_names();

/// Reads {"criterion", "gamma", "tol", "max_iters", "eps", "lambda_bound", "scan_points"}.
IndexParams index_params_from_json(const nlohmann::json& j);

/// Factory for a named policy with hyperparameters nested in `params`.
/// OPT's index tables are computed once here and shared by every trial.
PolicyFactory policy_factory(std::string_view name, const nlohmann::json& params, const RmabInstance& instance);

std::unique_ptr<Policy> make_policy(std::string_view name, const nlohmann::json& params, const RmabInstance& instance);

}  // namespace rmab
