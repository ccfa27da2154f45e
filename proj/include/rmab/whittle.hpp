#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmab/mdp.hpp"

namespace rmab {

/// Optimality criterion of the single-arm subsidy problem.
struct Criterion {
    enum class Kind { average, discounted };
    Kind kind = Kind::average;
    double gamma = 1.0;

    static Criterion average() { return {Kind::average, 1.0}; }
    static Criterion discounted(double gamma) { return {Kind::discounted, gamma}; }
};

/// Q-values of one arm when the passive action earns an extra subsidy λ.
///
/// In average-reward mode `q(s, a) = R(s, a) + λ[a = passive] - gain + Σ P(s, a, ·) h`
/// with the bias h pinned to h(0) = 0, so max_a q(0, a) = 0. In discounted mode
/// `q(s, a) = R(s, a) + λ[a = passive] + γ Σ P(s, a, ·) V`.
struct SubsidySolution {
    double lambda = 0.0;
    std::vector<double> q_passive;
    std::vector<double> q_active;
    /// States where passive is optimal (ties count as passive), ascending.
    std::vector<std::size_t> passive_set;
    /// h in average mode, V in discounted mode.
    std::vector<double> values;
    double gain = 0.0;
    std::size_t iterations = 0;

    double benefit(std::size_t s) const { return q_active[s] - q_passive[s]; }
    bool is_passive(std::size_t s) const { return q_passive[s] >= q_active[s]; }
};

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class IndexError : public std::runtime_error {
public:
    enum class Reason { outside_bound, non_indexable, solver_failed };
    IndexError(const std::string& what, std::size_t state, Reason reason)
        : std::runtime_error(what), state_(state), reason_(reason) {}
    std::size_t state() const { return state_; }
    Reason reason() const { return reason_; }

private:
    std::size_t state_;
    Reason reason_;
};

/// Value iteration (relative value iteration with reference state 0 in
/// average mode) on the λ-subsidized arm. Stops when the largest change of
/// the value vector falls below `tol`; throws SolveError after `max_iters`.
///
/// Average mode iterates on the aperiodic transform τP + (1-τ)I with τ = 1/2,
/// which leaves the gain and the action gaps unchanged but guarantees
/// convergence on periodic chains.
SubsidySolution solve_subsidized(const ArmMdp& mdp, double lambda, Criterion criterion, double tol = 1e-9,
                                 std::size_t max_iters = 100000, std::span<const double> initial_values = {});

/// 2 * max |R| + 1.
double default_lambda_bound(const ArmMdp& mdp);

struct IndexParams {
    Criterion criterion = Criterion::average();
    double tol = 1e-9;
    std::size_t max_iters = 100000;
    double eps = 1e-4;
    /// Search range [-B, B]. When unset, B starts at default_lambda_bound
    /// and doubles (up to 20 times) until the crossing is inside.
    std::optional<double> lambda_bound;
    /// Coarse grid used to locate the unique crossing before bisection.
    std::size_t scan_points = 33;
    /// Starting value vector for the first solve; zeros when empty.
    std::vector<double> initial_values;
};

/// Subsidy at which active and passive are equally good in `state`.
///
/// Scans a coarse grid on [-B, B] for the sign of q_active - q_passive, then
/// bisects the unique active-to-passive bracket until it is narrower than eps
/// and returns its midpoint. Throws IndexError when the sign never changes
/// inside the bound or changes more than once.
double whittle_index(const ArmMdp& mdp, std::size_t state, const IndexParams& params = {});

using IndexTable = std::vector<double>;

/// whittle_index for every state. The IndexError names the failing state.
IndexTable index_table(const ArmMdp& mdp, const IndexParams& params = {});

struct IndexabilityReport {
    enum class Failure { none, not_empty_at_low, not_full_at_high, state_exits };

    bool indexable = true;
    Failure failure = Failure::none;
    /// For state_exits: the pair (grid[k], grid[k+1]) and the state leaving Φ.
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    std::size_t state = 0;

    std::string describe() const;
};

/// Checks that the passive set Φ(λ) is nested non-decreasing along an
/// ascending grid, starting at ∅ and ending at the full state space.
IndexabilityReport check_indexability(const ArmMdp& mdp, std::span<const double> lambda_grid,
                                      Criterion criterion = Criterion::average(), double tol = 1e-9,
                                      std::size_t max_iters = 100000);

/// lo, lo + step, ..., up to and including hi (within step/2).
std::vector<double> lambda_grid(double lo, double hi, double step);

}  // namespace rmab
