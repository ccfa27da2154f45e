#include "rmab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

namespace rmab {

Rng policy_stream(std::uint64_t seed) { return Rng(derive_seed(seed, 0)); }

Rng arm_stream(std::uint64_t seed, std::size_t arm) { return Rng(derive_seed(seed, arm + 1)); }

TrialLog run_episode(const RmabInstance& instance, Policy& policy, std::size_t steps, std::uint64_t seed) {
    ensure_valid(instance);
    if (steps < 1) throw std::invalid_argument("run_episode: T must be >= 1");
    const std::size_t n = instance.n_arms();
    if (policy.n_arms() != n || policy.budget() != instance.budget) {
        throw std::invalid_argument("run_episode: policy was built for a different instance shape");
    }

    std::vector<const ArmMdp*> models;
    models.reserve(n);
    for (const auto& arm : instance.arms) models.push_back(&arm);

    Rng decisions = policy_stream(seed);
    std::vector<Rng> dynamics;
    dynamics.reserve(n);
    for (std::size_t i = 0; i < n; ++i) dynamics.push_back(arm_stream(seed, i));

    std::vector<std::size_t> states = instance.initial_states;
    std::vector<std::size_t> next(n);
    std::vector<Action> actions(n);
    std::vector<double> rewards(n);

    TrialLog log;
    log.seed = seed;
    log.per_step_total_reward.reserve(steps);
    log.actions.reserve(steps);

    auto change = instance.dynamics.begin();
    for (std::size_t t = 1; t <= steps; ++t) {
        for (; change != instance.dynamics.end() && change->step == t; ++change) {
            models[change->arm] = &change->replacement;
            policy.on_arm_replaced(change->arm, change->replacement);
        }

        auto selected = policy.select(states, t, decisions);
        if (selected.size() != instance.budget) {
            throw std::logic_error(std::string(policy.name()) + " selected " + std::to_string(selected.size()) +
                                   " arms, budget is " + std::to_string(instance.budget));
        }
        std::ranges::fill(actions, Action::passive);
        for (std::size_t arm : selected) {
            if (arm >= n || actions[arm] == Action::active) {
                throw std::logic_error(std::string(policy.name()) + " returned an invalid or repeated arm index");
            }
            actions[arm] = Action::active;
        }

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rewards[i] = reward(*models[i], states[i], actions[i]);
            next[i] = sample_transition(*models[i], states[i], actions[i], dynamics[i]);
            total += rewards[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            policy.update({i, states[i], actions[i], rewards[i], next[i]});
        }
        states.swap(next);

        log.per_step_total_reward.push_back(total);
        log.actions.push_back(std::move(selected));
    }
    return log;
}

std::vector<TrialLog> run_trials(const RmabInstance& instance, const PolicyFactory& factory, std::size_t steps,
                                 std::size_t n_trials, std::uint64_t base_seed, std::size_t threads) {
    if (n_trials < 1) throw std::invalid_argument("run_trials: need at least one trial");
    ensure_valid(instance);
    if (threads == 0) threads = std::max<unsigned>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, n_trials);

    std::vector<TrialLog> logs(n_trials);
    std::vector<std::exception_ptr> errors(n_trials);
    std::atomic<std::size_t> cursor{0};

    auto worker = [&] {
        for (std::size_t k = cursor++; k < n_trials; k = cursor++) {
            try {
                auto policy = factory(instance);
                logs[k] = run_episode(instance, *policy, steps, base_seed + k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    }

    for (std::size_t k = 0; k < n_trials; ++k) {
        if (!errors[k]) continue;
        try {
            std::rethrow_exception(errors[k]);
        } catch (const std::exception& e) {
            throw TrialError(k, e.what());
        }
    }
    return logs;
}

AggregateSeries aggregate(const std::vector<TrialLog>& logs, std::size_t window) {
    if (logs.empty()) throw std::invalid_argument("aggregate: no logs");
    if (window < 1) throw std::invalid_argument("aggregate: window must be >= 1");
    const std::size_t steps = logs.front().per_step_total_reward.size();
    for (const auto& log : logs) {
        if (log.per_step_total_reward.size() != steps) throw std::invalid_argument("aggregate: logs differ in length");
    }

    const auto n = static_cast<double>(logs.size());
    AggregateSeries out;
    out.n_trials = logs.size();
    out.window = window;
    out.mean.resize(steps);
    out.std_error.resize(steps);
    out.moving_avg.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        double sum = 0.0;
        for (const auto& log : logs) sum += log.per_step_total_reward[t];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& log : logs) {
            const double d = log.per_step_total_reward[t] - mean;
            ss += d * d;
        }
        out.mean[t] = mean;
        out.std_error[t] = logs.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
    double running = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        running += out.mean[t];
        if (t >= window) running -= out.mean[t - window];
        const std::size_t width = std::min(window, t + 1);
        out.moving_avg[t] = running / static_cast<double>(width);
    }
    return out;
}

std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

void write_raw_csv(std::ostream& out, const std::string& instance, const std::string& policy,
                   const std::vector<TrialLog>& logs) {
    out << "instance,policy,trial,t,total_reward\n";
    for (std::size_t k = 0; k < logs.size(); ++k) {
        const auto& series = logs[k].per_step_total_reward;
        for (std::size_t t = 0; t < series.size(); ++t) {
            out << instance << ',' << policy << ',' << k << ',' << (t + 1) << ',' << format_number(series[t]) << '\n';
        }
    }
}

void write_aggregate_csv(std::ostream& out, const std::string& instance, const std::string& policy,
                         const AggregateSeries& series) {
    out << "instance,policy,t,mean,stderr,moving_avg\n";
    for (std::size_t t = 0; t < series.mean.size(); ++t) {
        out << instance << ',' << policy << ',' << (t + 1) << ',' << format_number(series.mean[t]) << ','
            << format_number(series.std_error[t]) << ',' << format_number(series.moving_avg[t]) << '\n';
    }
}

}  // namespace rmab
