#include "rmab/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rmab {

namespace {

constexpr double kAperiodicity = 0.5;
constexpr std::size_t kMaxWidenings = 20;

double expected(std::span<const double> row, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * v[j];
    return acc;
}

}  // namespace

SubsidySolution solve_subsidized(const ArmMdp& mdp, double lambda, Criterion criterion, double tol,
                                 std::size_t max_iters, std::span<const double> initial_values) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_subsidized: tol must be positive");
    const bool discounted = criterion.kind == Criterion::Kind::discounted;
    if (discounted && !(criterion.gamma > 0.0 && criterion.gamma < 1.0)) {
        throw std::invalid_argument("solve_subsidized: discount must lie in (0, 1)");
    }
    const std::size_t n = mdp.n_states;
    if (!initial_values.empty() && initial_values.size() != n) {
        throw std::invalid_argument("solve_subsidized: initial value vector has wrong length");
    }

    std::vector<double> v(n, 0.0);
    if (!initial_values.empty()) v.assign(initial_values.begin(), initial_values.end());
    std::vector<double> next(n);
    double gain = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;

    if (discounted) {
        const double g = criterion.gamma;
        for (; iter < max_iters; ++iter) {
            for (std::size_t s = 0; s < n; ++s) {
                const double qp = mdp.reward_at(s, Action::passive) + lambda + g * expected(mdp.row(s, Action::passive), v);
                const double qa = mdp.reward_at(s, Action::active) + g * expected(mdp.row(s, Action::active), v);
                next[s] = std::max(qp, qa);
            }
            residual = 0.0;
            for (std::size_t s = 0; s < n; ++s) residual = std::max(residual, std::abs(next[s] - v[s]));
            v.swap(next);
            if (residual < tol) break;
        }
    } else {
        // v holds the bias of the aperiodic transform; the true bias is τ·v.
        if (!initial_values.empty()) {
            for (auto& x : v) x /= kAperiodicity;
        }
        const double tau = kAperiodicity;
        for (; iter < max_iters; ++iter) {
            for (std::size_t s = 0; s < n; ++s) {
                const double stay = (1.0 - tau) * v[s];
                const double qp = mdp.reward_at(s, Action::passive) + lambda +
                                  tau * expected(mdp.row(s, Action::passive), v) + stay;
                const double qa = mdp.reward_at(s, Action::active) + tau * expected(mdp.row(s, Action::active), v) + stay;
                next[s] = std::max(qp, qa);
            }
            gain = next[0];
            residual = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                next[s] -= gain;
                residual = std::max(residual, std::abs(next[s] - v[s]));
            }
            v.swap(next);
            if (residual < tol) break;
        }
        for (auto& x : v) x *= tau;
    }

    if (iter >= max_iters) {
        std::ostringstream msg;
        msg << "value iteration did not converge within " << max_iters << " iterations (residual " << residual
            << ", lambda " << lambda << ")";
        throw SolveError(msg.str(), residual);
    }

    SubsidySolution sol;
    sol.values = v;
    sol.gain = discounted ? 0.0 : gain;
    sol.iterations = iter + 1;
    sol.q_passive.resize(n);
    sol.q_active.resize(n);
    const double g = discounted ? criterion.gamma : 1.0;
    for (std::size_t s = 0; s < n; ++s) {
        sol.q_passive[s] = mdp.reward_at(s, Action::passive) + lambda - sol.gain + g * expected(mdp.row(s, Action::passive), v);
        sol.q_active[s] = mdp.reward_at(s, Action::active) - sol.gain + g * expected(mdp.row(s, Action::active), v);
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (sol.is_passive(s)) sol.passive_set.push_back(s);
    }
    sol.lambda = lambda;
    return sol;
}

double default_lambda_bound(const ArmMdp& mdp) {
    double max_abs = 0.0;
    for (const auto& r : mdp.rewards) {
        for (double x : r) max_abs = std::max(max_abs, std::abs(x));
    }
    return 2.0 * max_abs + 1.0;
}

double whittle_index(const ArmMdp& mdp, std::size_t state, const IndexParams& params) {
    if (state >= mdp.n_states) throw std::out_of_range("whittle_index: state out of range");
    if (!(params.eps > 0.0)) throw std::invalid_argument("whittle_index: eps must be positive");
    double bound = params.lambda_bound.value_or(default_lambda_bound(mdp));
    const std::size_t points = std::max<std::size_t>(params.scan_points, 2);

    std::vector<double> warm = params.initial_values;
    auto active_at = [&](double lambda) {
        try {
            auto sol = solve_subsidized(mdp, lambda, params.criterion, params.tol, params.max_iters, warm);
            warm = sol.values;
            return !sol.is_passive(state);
        } catch (const SolveError& e) {
            throw IndexError("state " + std::to_string(state) + ": " + e.what(), state,
                             IndexError::Reason::solver_failed);
        }
    };

    std::vector<double> grid(points);
    std::vector<bool> active(points);
    for (std::size_t widenings = 0;; ++widenings) {
        for (std::size_t k = 0; k < points; ++k) {
            grid[k] = -bound + 2.0 * bound * static_cast<double>(k) / static_cast<double>(points - 1);
            active[k] = active_at(grid[k]);
        }
        if (active.front() && !active.back()) break;
        // An explicit bound is final. The default one is only a starting
        // guess: sticky states can push an average-reward index well past it.
        if (params.lambda_bound || widenings == kMaxWidenings) {
            std::ostringstream msg;
            msg << "index outside bound at state " << state << " (bound " << bound << ")";
            throw IndexError(msg.str(), state, IndexError::Reason::outside_bound);
        }
        bound *= 2.0;
    }
    std::size_t crossing = points;
    for (std::size_t k = 0; k + 1 < points; ++k) {
        if (active[k] == active[k + 1]) continue;
        if (!active[k] || crossing != points) {
            throw IndexError("non-indexable at state " + std::to_string(state) +
                                 ": passive optimality is not monotone in the subsidy",
                             state, IndexError::Reason::non_indexable);
        }
        crossing = k;
    }

    double lo = grid[crossing];
    double hi = grid[crossing + 1];
    while (hi - lo >= params.eps) {
        const double mid = 0.5 * (lo + hi);
        if (active_at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

IndexTable index_table(const ArmMdp& mdp, const IndexParams& params) {
    IndexTable table(mdp.n_states);
    for (std::size_t s = 0; s < mdp.n_states; ++s) table[s] = whittle_index(mdp, s, params);
    return table;
}

std::string IndexabilityReport::describe() const {
    std::ostringstream out;
    switch (failure) {
        case Failure::none:
            out << "indexable";
            break;
        case Failure::not_empty_at_low:
            out << "passive set not empty at lambda " << lambda_lo << " (state " << state << ")";
            break;
        case Failure::not_full_at_high:
            out << "passive set not full at lambda " << lambda_hi << " (state " << state << " still active)";
            break;
        case Failure::state_exits:
            out << "state " << state << " leaves the passive set between lambda " << lambda_lo << " and "
                << lambda_hi;
            break;
    }
    return out.str();
}

IndexabilityReport check_indexability(const ArmMdp& mdp, std::span<const double> lambda_grid, Criterion criterion,
                                      double tol, std::size_t max_iters) {
    if (lambda_grid.empty()) throw std::invalid_argument("check_indexability: empty grid");
    if (!std::ranges::is_sorted(lambda_grid)) throw std::invalid_argument("check_indexability: grid not ascending");

    const std::size_t n = mdp.n_states;
    IndexabilityReport report;
    std::vector<double> warm;
    std::vector<bool> previous;
    for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
        const double lambda = lambda_grid[k];
        auto sol = solve_subsidized(mdp, lambda, criterion, tol, max_iters, warm);
        warm = sol.values;
        std::vector<bool> passive(n);
        for (std::size_t s = 0; s < n; ++s) passive[s] = sol.is_passive(s);

        if (k == 0) {
            for (std::size_t s = 0; s < n; ++s) {
                if (passive[s]) {
                    report = {false, IndexabilityReport::Failure::not_empty_at_low, lambda, lambda, s};
                    return report;
                }
            }
        } else {
            for (std::size_t s = 0; s < n; ++s) {
                if (previous[s] && !passive[s]) {
                    report = {false, IndexabilityReport::Failure::state_exits, lambda_grid[k - 1], lambda, s};
                    return report;
                }
            }
        }
        previous = std::move(passive);
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (!previous[s]) {
            const double top = lambda_grid.back();
            report = {false, IndexabilityReport::Failure::not_full_at_high, top, top, s};
            return report;
        }
    }
    return report;
}

std::vector<double> lambda_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("lambda_grid: need step > 0 and lo <= hi");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
    grid.reserve(count + 1);
    for (std::size_t k = 0; k <= count; ++k) grid.push_back(lo + step * static_cast<double>(k));
    return grid;
}

}  // namespace rmab
