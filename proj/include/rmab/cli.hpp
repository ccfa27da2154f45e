#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmab/mdp.hpp"

namespace rmab::cli {

inline constexpr const char* kVersion = "rmab 0.1.0";

/// Bad flags, bad config documents, or arguments that cannot be acted on.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolicySpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
    /// Either a generator with params or an instance file.
    std::string generator;
    nlohmann::json generator_params = nlohmann::json::object();
    std::optional<std::filesystem::path> instance_file;
    /// Prefix of every output file; defaults to the generator name or file stem.
    std::string instance_name;

    std::vector<PolicySpec> policies;
    std::size_t steps = 1000;
    std::size_t n_trials = 30;
    std::uint64_t base_seed = 0;
    std::optional<std::size_t> budget;
    std::filesystem::path out_dir = "out";
    std::size_t window = 1;
    nlohmann::json index_params = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Accepted keys:
///   instance: "name" | {"generator", "params", "name"} | {"file", "name"}
///   policies: ["wiql", ...] | {"wiql": {...}, "opt": {...}}
///   T, trials, seed, budget, out, window, index
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Builds the configured instance and applies the budget override.
RmabInstance build_instance(const ExperimentConfig& config);

struct SummaryRow {
    std::string instance;
    std::string policy;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t window_steps = 0;
};

/// Mean of each aggregate series over its final `fraction` of steps, sorted
/// by mean, highest first. The standard error treats steps as independent:
/// sqrt(sum of squared per-step errors) / k.
std::vector<SummaryRow> compare_series(const std::vector<std::filesystem::path>& agg_files, double fraction);

/// Worker cap from RMAB_THREADS, 0 when unset.
std::size_t thread_cap_from_env();

/// Entry point; returns the process exit status.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rmab::cli
