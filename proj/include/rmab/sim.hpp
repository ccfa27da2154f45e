#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmab/mdp.hpp"
#include "rmab/policies.hpp"

namespace rmab {

/// One seeded episode.
struct TrialLog {
    std::uint64_t seed = 0;
    /// Σ_i R_i at each step t = 1..T (index t-1).
    std::vector<double> per_step_total_reward;
    /// Arms activated at each step, ascending.
    std::vector<std::vector<std::size_t>> actions;

    bool operator==(const TrialLog&) const = default;
};

struct AggregateSeries {
    std::vector<double> mean;
    std::vector<double> std_error;
    std::vector<double> moving_avg;
    std::size_t n_trials = 0;
    std::size_t window = 1;
};

/// Random streams of an episode: stream 0 feeds the policy, stream i+1 feeds
/// arm i's transitions. Each is seeded with derive_seed(seed, stream).
Rng policy_stream(std::uint64_t seed);
Rng arm_stream(std::uint64_t seed, std::size_t arm);

/// select → act → transition → reward → update, for t = 1..T.
///
/// Scheduled dynamics for step t are applied before selection. Every arm
/// earns R(current state, action) and every arm's transition is passed to
/// `policy.update`, selected or not.
TrialLog run_episode(const RmabInstance& instance, Policy& policy, std::size_t steps, std::uint64_t seed);

using PolicyFactory = std::function<std::unique_ptr<Policy>(const RmabInstance&)>;

class TrialError : public std::runtime_error {
public:
    TrialError(std::size_t trial, const std::string& what)
        : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial) {}
    std::size_t trial() const { return trial_; }

private:
    std::size_t trial_;
};

/// Trial k runs with seed base_seed + k and a fresh policy. Trials run on up
/// to `threads` workers (0 means hardware concurrency); output is in trial
/// order either way.
std::vector<TrialLog> run_trials(const RmabInstance& instance, const PolicyFactory& factory, std::size_t steps,
                                 std::size_t n_trials, std::uint64_t base_seed, std::size_t threads = 0);

/// Pointwise mean, standard error (sample stddev / sqrt(n), 0 for one trial)
/// and a trailing moving average of the mean over `window` steps; the first
/// window-1 points average the available prefix.
AggregateSeries aggregate(const std::vector<TrialLog>& logs, std::size_t window = 1);

/// Shortest round-trip decimal representation.
std::string format_number(double x);

void write_raw_csv(std::ostream& out, const std::string& instance, const std::string& policy,
                   const std::vector<TrialLog>& logs);
void write_aggregate_csv(std::ostream& out, const std::string& instance, const std::string& policy,
                         const AggregateSeries& series);

}  // namespace rmab
