#include "rmab/mdp.hpp"

#include <cmath>
#include <sstream>

namespace rmab {

namespace {

std::string join_messages(const std::vector<Violation>& violations) {
    std::ostringstream out;
    out << "invalid model";
    for (const auto& v : violations) out << "; " << v.message;
    return out.str();
}

std::string fmt_double(double x) {
    std::ostringstream out;
    out.precision(12);
    out << x;
    return out.str();
}

void check_state(const ArmMdp& mdp, std::size_t state, const char* what) {
    if (state >= mdp.n_states) {
        throw std::out_of_range(std::string(what) + ": state " + std::to_string(state) +
                                " out of range for " + std::to_string(mdp.n_states) + " states");
    }
}

}  // namespace

ModelError::ModelError(std::vector<Violation> violations)
    : std::runtime_error(join_messages(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate(const ArmMdp& mdp) {
    std::vector<Violation> out;
    const std::size_t n = mdp.n_states;
    if (n < 2) out.push_back({"n_states >= 2 required, got " + std::to_string(n)});

    for (std::size_t a = 0; a < 2; ++a) {
        const std::string where = "transitions[" + std::to_string(a) + "]";
        const auto& m = mdp.transitions[a];
        if (m.size() != n * n) {
            out.push_back({where + " has " + std::to_string(m.size()) + " entries, expected " +
                           std::to_string(n * n)});
            continue;
        }
        for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                const double p = m[r * n + c];
                if (!(p >= 0.0 && p <= 1.0)) {
                    out.push_back({where + " entry (" + std::to_string(r) + ", " + std::to_string(c) +
                                   ") = " + fmt_double(p) + " outside [0, 1]"});
                }
                sum += p;
            }
            if (!(std::abs(sum - 1.0) <= kStochasticTolerance)) {
                out.push_back({where + " row " + std::to_string(r) + " sums to " + fmt_double(sum)});
            }
        }
    }

    for (std::size_t a = 0; a < 2; ++a) {
        const std::string where = "rewards[" + std::to_string(a) + "]";
        const auto& r = mdp.rewards[a];
        if (r.size() != n) {
            out.push_back({where + " has " + std::to_string(r.size()) + " entries, expected " +
                           std::to_string(n)});
            continue;
        }
        for (std::size_t s = 0; s < n; ++s) {
            if (!std::isfinite(r[s])) out.push_back({where + " entry " + std::to_string(s) + " is not finite"});
        }
    }
    return out;
}

void normalize_rows(ArmMdp& mdp) {
    const std::size_t n = mdp.n_states;
    for (auto& m : mdp.transitions) {
        if (m.size() != n * n) continue;
        for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < n; ++c) sum += m[r * n + c];
            if (sum > 0.0 && std::abs(sum - 1.0) > 1e-12) {
                for (std::size_t c = 0; c < n; ++c) m[r * n + c] /= sum;
            }
        }
    }
}

ArmMdp make_arm(const Matrix& passive, const Matrix& active,
                std::span<const double> passive_reward, std::span<const double> active_reward) {
    ArmMdp mdp;
    mdp.n_states = passive.size();
    const Matrix* mats[2] = {&passive, &active};
    std::vector<Violation> shape;
    for (std::size_t a = 0; a < 2; ++a) {
        if (mats[a]->size() != mdp.n_states) {
            shape.push_back({"transitions[" + std::to_string(a) + "] has " + std::to_string(mats[a]->size()) +
                             " rows, expected " + std::to_string(mdp.n_states)});
        }
        for (std::size_t r = 0; r < mats[a]->size(); ++r) {
            const auto& row = (*mats[a])[r];
            if (row.size() != mdp.n_states) {
                shape.push_back({"transitions[" + std::to_string(a) + "] row " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(mdp.n_states)});
            }
            mdp.transitions[a].insert(mdp.transitions[a].end(), row.begin(), row.end());
        }
    }
    if (!shape.empty()) throw ModelError(std::move(shape));
    mdp.rewards[0].assign(passive_reward.begin(), passive_reward.end());
    mdp.rewards[1].assign(active_reward.begin(), active_reward.end());
    if (auto v = validate(mdp); !v.empty()) throw ModelError(std::move(v));
    normalize_rows(mdp);
    return mdp;
}

ArmMdp make_arm(const Matrix& passive, const Matrix& active, std::span<const double> state_reward) {
    return make_arm(passive, active, state_reward, state_reward);
}

std::size_t sample_transition(const ArmMdp& mdp, std::size_t state, Action action, Rng& rng) {
    check_state(mdp, state, "sample_transition");
    const auto row = mdp.row(state, action);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t next = 0; next < row.size(); ++next) {
        if (row[next] <= 0.0) continue;
        cumulative += row[next];
        last_positive = next;
        if (u < cumulative) return next;
    }
    // Rounding left u above the final cumulative sum.
    return last_positive;
}

double reward(const ArmMdp& mdp, std::size_t state, Action action) {
    check_state(mdp, state, "reward");
    return mdp.reward_at(state, action);
}

std::vector<Violation> validate(const RmabInstance& instance) {
    std::vector<Violation> out;
    const std::size_t n = instance.n_arms();
    if (n == 0) out.push_back({"instance has no arms"});
    if (instance.budget < 1 || instance.budget > n) {
        out.push_back({"budget " + std::to_string(instance.budget) + " must satisfy 1 <= M <= N = " +
                       std::to_string(n)});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : validate(instance.arms[i])) {
            out.push_back({"arms[" + std::to_string(i) + "]." + v.message});
        }
    }
    if (instance.initial_states.size() != n) {
        out.push_back({"initial_states has " + std::to_string(instance.initial_states.size()) +
                       " entries, expected " + std::to_string(n)});
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (instance.initial_states[i] >= instance.arms[i].n_states) {
                out.push_back({"arms[" + std::to_string(i) + "].initial_state " +
                               std::to_string(instance.initial_states[i]) + " >= n_states " +
                               std::to_string(instance.arms[i].n_states)});
            }
        }
    }
    std::size_t previous_step = 0;
    for (std::size_t k = 0; k < instance.dynamics.size(); ++k) {
        const auto& change = instance.dynamics[k];
        const std::string where = "dynamics[" + std::to_string(k) + "]";
        if (change.step == 0) out.push_back({where + ".step must be positive"});
        if (change.step < previous_step) out.push_back({where + ".step is not sorted"});
        previous_step = change.step;
        if (change.arm >= n) {
            out.push_back({where + ".arm " + std::to_string(change.arm) + " out of range"});
            continue;
        }
        for (auto& v : validate(change.replacement)) out.push_back({where + ".replacement." + v.message});
        if (change.replacement.n_states != instance.arms[change.arm].n_states) {
            out.push_back({where + ".replacement changes the arm's state count"});
        }
    }
    return out;
}

void ensure_valid(const RmabInstance& instance) {
    if (auto v = validate(instance); !v.empty()) throw ModelError(std::move(v));
}

}  // namespace rmab
