#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmab/random.hpp"

namespace rmab {

enum class Action : std::uint8_t { passive = 0, active = 1 };

constexpr std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }

/// One arm: a finite MDP with a passive and an active action.
///
/// `transitions[a]` is a row-major n_states x n_states matrix and
/// `rewards[a][s]` is R(s, a). Instances from the literature have
/// state-only rewards; those are stored duplicated across both actions.
struct ArmMdp {
    std::size_t n_states = 0;
    std::array<std::vector<double>, 2> transitions;
    std::array<std::vector<double>, 2> rewards;

    double probability(std::size_t from, Action a, std::size_t to) const {
        return transitions[index_of(a)][from * n_states + to];
    }
    std::span<const double> row(std::size_t from, Action a) const {
        return std::span<const double>(transitions[index_of(a)]).subspan(from * n_states, n_states);
    }
    double reward_at(std::size_t s, Action a) const { return rewards[index_of(a)][s]; }

    bool operator==(const ArmMdp&) const = default;
};

using Matrix = std::vector<std::vector<double>>;

struct Violation {
    std::string message;
};

/// Raised when a model fails validation; carries every violation found.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

constexpr double kStochasticTolerance = 1e-9;

/// Every violated invariant, with matrix coordinates. Empty means valid.
std::vector<Violation> validate(const ArmMdp& mdp);

/// Divides each row by its sum when it drifts from 1 by more than 1e-12.
/// Idempotent on already-normalized rows.
void normalize_rows(ArmMdp& mdp);

/// Builds, validates and normalizes an arm. Throws ModelError.
ArmMdp make_arm(const Matrix& passive, const Matrix& active,
                std::span<const double> passive_reward, std::span<const double> active_reward);

/// Same, with a state-only reward shared by both actions.
ArmMdp make_arm(const Matrix& passive, const Matrix& active, std::span<const double> state_reward);

/// Inverse-CDF draw from row (state, action), scanning states in index order.
/// Consumes exactly one uniform from `rng`.
std::size_t sample_transition(const ArmMdp& mdp, std::size_t state, Action action, Rng& rng);

/// R(state, action); throws std::out_of_range on a bad state.
double reward(const ArmMdp& mdp, std::size_t state, Action action);

struct ScheduledChange {
    std::size_t step = 0;
    std::size_t arm = 0;
    ArmMdp replacement;

    bool operator==(const ScheduledChange&) const = default;
};

/// N arms, an exact per-step activation budget M, and optional dynamics that
/// swap an arm's model at the start of a given step.
struct RmabInstance {
    std::vector<ArmMdp> arms;
    std::size_t budget = 1;
    std::vector<std::size_t> initial_states;
    std::vector<ScheduledChange> dynamics;

    std::size_t n_arms() const { return arms.size(); }
    bool operator==(const RmabInstance&) const = default;
};

/// Violations are prefixed with their location, e.g. "arms[2].transitions[0] row 1 ...".
std::vector<Violation> validate(const RmabInstance& instance);

/// Throws ModelError if `validate` reports anything.
void ensure_valid(const RmabInstance& instance);

}  // namespace rmab
