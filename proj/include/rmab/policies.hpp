#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmab/mdp.hpp"
#include "rmab/random.hpp"
#include "rmab/whittle.hpp"

namespace rmab {

/// One arm's experience at one step.
struct Transition {
    std::size_t arm = 0;
    std::size_t state = 0;
    Action action = Action::passive;
    double reward = 0.0;
    std::size_t next_state = 0;
};

/// Selection/learning contract shared by every policy. An episode calls
/// `select` once per step, then `update` once for every arm.
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string_view name() const = 0;

    /// Exactly `budget()` distinct arm indices, ascending. `t` starts at 1.
    virtual std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) = 0;

    virtual void update(const Transition& tr) = 0;

    /// Scheduled dynamics replaced an arm's model. Only policies that read
    /// the true model (OPT, Myopic) react.
    virtual void on_arm_replaced(std::size_t /*arm*/, const ArmMdp& /*mdp*/) {}

    std::size_t n_arms() const { return n_arms_; }
    std::size_t budget() const { return budget_; }

protected:
    Policy(std::size_t n_arms, std::size_t budget);

private:
    std::size_t n_arms_;
    std::size_t budget_;
};

/// Per-arm tabular Q(state, action), visit counts and the index estimate
/// λ(state) = Q(state, 1) - Q(state, 0).
class QTable {
public:
    QTable() = default;
    explicit QTable(std::span<const std::size_t> states_per_arm);

    std::size_t n_arms() const { return arms_.size(); }
    std::size_t n_states(std::size_t arm) const { return arms_[arm].q.size(); }

    double q(std::size_t arm, std::size_t s, Action a) const { return arms_[arm].q[s][index_of(a)]; }
    std::uint64_t count(std::size_t arm, std::size_t s, Action a) const { return arms_[arm].count[s][index_of(a)]; }
    double lambda(std::size_t arm, std::size_t s) const { return arms_[arm].lambda[s]; }
    double max_q(std::size_t arm, std::size_t s) const;

    /// Increments the visit count, then returns the step size 1/(count + 1).
    double visit(std::size_t arm, std::size_t s, Action a);

    /// Sets Q(s, a) and refreshes λ(s) together.
    void set(std::size_t arm, std::size_t s, Action a, double value);

private:
    struct ArmTable {
        std::vector<std::array<double, 2>> q;
        std::vector<std::array<std::uint64_t, 2>> count;
        std::vector<double> lambda;
    };
    std::vector<ArmTable> arms_;
};

struct WiqlParams {
    /// Multiplies max Q(next, ·). 1.0 is the undiscounted update.
    double gamma = 1.0;
    /// Test hooks: replace the 1/(c+1) step size or the N/(N+t) exploration rate.
    std::optional<double> forced_alpha;
    std::optional<double> forced_epsilon;
};

/// Whittle-index Q-learning: ε-decay selection with ε = N/(N+t), otherwise
/// top-M arms by λ_i(observed_i); Q-learning on every arm every step.
class WiqlPolicy final : public Policy {
public:
    WiqlPolicy(const RmabInstance& instance, WiqlParams params = {});

    std::string_view name() const override { return "wiql"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition& tr) override;

    double epsilon(std::size_t t) const;
    bool last_select_explored() const { return explored_; }
    /// Step size applied by the most recent update.
    double last_alpha() const { return last_alpha_; }
    const QTable& table() const { return table_; }

private:
    WiqlParams params_;
    QTable table_;
    bool explored_ = false;
    double last_alpha_ = 0.0;
};

/// Top-M by precomputed Whittle indices of the true models.
class OptPolicy final : public Policy {
public:
    OptPolicy(const RmabInstance& instance, IndexParams params = {});
    /// Uses given tables directly; one table per arm.
    OptPolicy(std::vector<IndexTable> tables, std::size_t budget);

    std::string_view name() const override { return "opt"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition&) override {}
    void on_arm_replaced(std::size_t arm, const ArmMdp& mdp) override;

    const std::vector<IndexTable>& tables() const { return tables_; }

private:
    const IndexTable& table_for(const ArmMdp& mdp);

    IndexParams params_;
    std::vector<IndexTable> tables_;
    std::vector<std::pair<ArmMdp, IndexTable>> cache_;
};

/// Running mean of observed reward per (arm, state, action); selects the
/// top-M by mean(·, 1) - mean(·, 0) at the current states.
class GreedyPolicy final : public Policy {
public:
    explicit GreedyPolicy(const RmabInstance& instance);

    std::string_view name() const override { return "greedy"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition& tr) override;

    double mean(std::size_t arm, std::size_t s, Action a) const;

private:
    struct Cell {
        double mean = 0.0;
        std::uint64_t count = 0;
    };
    std::vector<std::vector<std::array<Cell, 2>>> cells_;
};

class RandomPolicy final : public Policy {
public:
    RandomPolicy(std::size_t n_arms, std::size_t budget);
    explicit RandomPolicy(const RmabInstance& instance);

    std::string_view name() const override { return "random"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition&) override {}
};

struct AbParams {
    /// Slow step β_t = 1 / (1 + t·ln(t + 2) / beta_scale).
    double beta_scale = 100.0;
};

/// Two-timescale Whittle-index learner in the style of Avrachenkov and
/// Borkar, with per-arm tables.
///
/// Fast timescale (α = 1/(c+1)), relative-value Q-learning with the passive
/// reward shaped by the arm's current reference λ̄_i(s) and the table mean as
/// offset:
///   Q(s,a) += α [r + λ̄_i(s)·[a = 0] + max Q(s',·) - mean(Q) - Q(s,a)].
/// Slow timescale: λ̄_i(s) += β_t (Q(s,1) - Q(s,0)).
/// Selection is the top-M by λ̄ at the current states, without exploration.
class AbPolicy final : public Policy {
public:
    AbPolicy(const RmabInstance& instance, AbParams params = {});

    std::string_view name() const override { return "ab"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition& tr) override;

    double beta(std::size_t t) const;
    double reference(std::size_t arm, std::size_t s) const { return reference_[arm][s]; }
    const QTable& table() const { return table_; }
    /// Mean |Q(s,1) - Q(s,0)| over cells where both actions were visited;
    /// the quantity the slow timescale drives to zero.
    double slow_residual() const;

private:
    AbParams params_;
    QTable table_;
    std::vector<std::vector<double>> reference_;
    std::size_t t_ = 1;
};

struct FuParams {
    std::vector<double> lambdas = {-1.0, -0.5, 0.0, 0.5, 1.0};
    double gamma = 1.0;
    std::optional<double> forced_alpha;
};

/// One Q layer per subsidy λ in a fixed grid. Each arm's index estimate is
/// the λ whose layer shows the smallest |Q(λ,s,1) - Q(λ,s,0)| at the current
/// state (first such λ on ties); top-M arms by that estimate.
class FuPolicy final : public Policy {
public:
    FuPolicy(const RmabInstance& instance, FuParams params = {});

    std::string_view name() const override { return "fu"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition& tr) override;

    double q(std::size_t layer, std::size_t arm, std::size_t s, Action a) const {
        return layers_[layer].q(arm, s, a);
    }
    double lambda_min(std::size_t arm, std::size_t s) const;
    const std::vector<double>& lambdas() const { return params_.lambdas; }

private:
    FuParams params_;
    std::vector<QTable> layers_;
};

/// Top-M by the true probability of moving to a worse state under the
/// passive action. A state is worse when its passive reward is strictly lower.
class MyopicPolicy final : public Policy {
public:
    explicit MyopicPolicy(const RmabInstance& instance);

    std::string_view name() const override { return "myopic"; }
    std::vector<std::size_t> select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) override;
    void update(const Transition&) override {}
    void on_arm_replaced(std::size_t arm, const ArmMdp& mdp) override;

    double drop_risk(std::size_t arm, std::size_t s) const { return risk_[arm][s]; }
    static std::vector<double> drop_risk_table(const ArmMdp& mdp);

private:
    std::vector<std::vector<double>> risk_;
};

}  // namespace rmab
