#include "rmab/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmab {

namespace {

std::vector<std::size_t> states_per_arm(const RmabInstance& instance) {
    std::vector<std::size_t> out;
    out.reserve(instance.n_arms());
    for (const auto& arm : instance.arms) out.push_back(arm.n_states);
    return out;
}

void check_observed(const Policy& policy, std::span<const std::size_t> observed) {
    if (observed.size() != policy.n_arms()) {
        throw std::invalid_argument("select: observed state vector has " + std::to_string(observed.size()) +
                                    " entries for " + std::to_string(policy.n_arms()) + " arms");
    }
}

}  // namespace

Policy::Policy(std::size_t n_arms, std::size_t budget) : n_arms_(n_arms), budget_(budget) {
    if (budget_ > n_arms_) {
        throw std::invalid_argument("budget M = " + std::to_string(budget_) + " exceeds N = " + std::to_string(n_arms_));
    }
}

// --- QTable ---------------------------------------------------------------

QTable::QTable(std::span<const std::size_t> states_per_arm) {
    arms_.reserve(states_per_arm.size());
    for (std::size_t n : states_per_arm) {
        ArmTable t;
        t.q.assign(n, {0.0, 0.0});
        t.count.assign(n, {0, 0});
        t.lambda.assign(n, 0.0);
        arms_.push_back(std::move(t));
    }
}

double QTable::max_q(std::size_t arm, std::size_t s) const {
    const auto& q = arms_[arm].q[s];
    return std::max(q[0], q[1]);
}

double QTable::visit(std::size_t arm, std::size_t s, Action a) {
    const auto c = ++arms_[arm].count[s][index_of(a)];
    return 1.0 / static_cast<double>(c + 1);
}

void QTable::set(std::size_t arm, std::size_t s, Action a, double value) {
    auto& t = arms_[arm];
    t.q[s][index_of(a)] = value;
    t.lambda[s] = t.q[s][1] - t.q[s][0];
}

// --- WIQL -----------------------------------------------------------------

WiqlPolicy::WiqlPolicy(const RmabInstance& instance, WiqlParams params)
    : Policy(instance.n_arms(), instance.budget), params_(params), table_(states_per_arm(instance)) {}

double WiqlPolicy::epsilon(std::size_t t) const {
    if (params_.forced_epsilon) return *params_.forced_epsilon;
    const auto n = static_cast<double>(n_arms());
    return n / (n + static_cast<double>(t));
}

std::vector<std::size_t> WiqlPolicy::select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) {
    check_observed(*this, observed);
    if (t < 1) throw std::invalid_argument("wiql select: t must be >= 1");
    explored_ = rng.uniform() < epsilon(t);
    if (explored_) return uniform_subset(n_arms(), budget(), rng);
    std::vector<double> scores(n_arms());
    for (std::size_t i = 0; i < n_arms(); ++i) scores[i] = table_.lambda(i, observed[i]);
    return top_m(scores, budget(), rng);
}

void WiqlPolicy::update(const Transition& tr) {
    const double counted = table_.visit(tr.arm, tr.state, tr.action);
    const double alpha = params_.forced_alpha.value_or(counted);
    const double target = tr.reward + params_.gamma * table_.max_q(tr.arm, tr.next_state);
    const double old = table_.q(tr.arm, tr.state, tr.action);
    table_.set(tr.arm, tr.state, tr.action, (1.0 - alpha) * old + alpha * target);
    last_alpha_ = alpha;
}

// --- OPT ------------------------------------------------------------------

OptPolicy::OptPolicy(const RmabInstance& instance, IndexParams params)
    : Policy(instance.n_arms(), instance.budget), params_(std::move(params)) {
    tables_.reserve(instance.n_arms());
    for (const auto& arm : instance.arms) tables_.push_back(table_for(arm));
}

OptPolicy::OptPolicy(std::vector<IndexTable> tables, std::size_t budget)
    : Policy(tables.size(), budget), tables_(std::move(tables)) {}

const IndexTable& OptPolicy::table_for(const ArmMdp& mdp) {
    for (const auto& [model, table] : cache_) {
        if (model == mdp) return table;
    }
    cache_.emplace_back(mdp, index_table(mdp, params_));
    return cache_.back().second;
}

std::vector<std::size_t> OptPolicy::select(std::span<const std::size_t> observed, std::size_t, Rng& rng) {
    check_observed(*this, observed);
    std::vector<double> scores(n_arms());
    for (std::size_t i = 0; i < n_arms(); ++i) scores[i] = tables_[i].at(observed[i]);
    return top_m(scores, budget(), rng);
}

void OptPolicy::on_arm_replaced(std::size_t arm, const ArmMdp& mdp) { tables_.at(arm) = table_for(mdp); }

// --- Greedy ---------------------------------------------------------------

GreedyPolicy::GreedyPolicy(const RmabInstance& instance) : Policy(instance.n_arms(), instance.budget) {
    cells_.reserve(instance.n_arms());
    for (const auto& arm : instance.arms) cells_.emplace_back(arm.n_states);
}

double GreedyPolicy::mean(std::size_t arm, std::size_t s, Action a) const { return cells_[arm][s][index_of(a)].mean; }

std::vector<std::size_t> GreedyPolicy::select(std::span<const std::size_t> observed, std::size_t, Rng& rng) {
    check_observed(*this, observed);
    std::vector<double> scores(n_arms());
    for (std::size_t i = 0; i < n_arms(); ++i) {
        scores[i] = mean(i, observed[i], Action::active) - mean(i, observed[i], Action::passive);
    }
    return top_m(scores, budget(), rng);
}

void GreedyPolicy::update(const Transition& tr) {
    auto& cell = cells_[tr.arm][tr.state][index_of(tr.action)];
    ++cell.count;
    cell.mean += (tr.reward - cell.mean) / static_cast<double>(cell.count);
}

// --- Random ---------------------------------------------------------------

RandomPolicy::RandomPolicy(std::size_t n_arms, std::size_t budget) : Policy(n_arms, budget) {}

RandomPolicy::RandomPolicy(const RmabInstance& instance) : Policy(instance.n_arms(), instance.budget) {}

std::vector<std::size_t> RandomPolicy::select(std::span<const std::size_t> observed, std::size_t, Rng& rng) {
    check_observed(*this, observed);
    return uniform_subset(n_arms(), budget(), rng);
}

// --- AB -------------------------------------------------------------------

AbPolicy::AbPolicy(const RmabInstance& instance, AbParams params)
    : Policy(instance.n_arms(), instance.budget), params_(params), table_(states_per_arm(instance)) {
    if (!(params_.beta_scale > 0.0)) throw std::invalid_argument("ab: beta_scale must be positive");
    reference_.reserve(instance.n_arms());
    for (const auto& arm : instance.arms) reference_.emplace_back(arm.n_states, 0.0);
}

double AbPolicy::beta(std::size_t t) const {
    const auto x = static_cast<double>(t);
    return 1.0 / (1.0 + x * std::log(x + 2.0) / params_.beta_scale);
}

std::vector<std::size_t> AbPolicy::select(std::span<const std::size_t> observed, std::size_t t, Rng& rng) {
    check_observed(*this, observed);
    t_ = t;
    std::vector<double> scores(n_arms());
    for (std::size_t i = 0; i < n_arms(); ++i) scores[i] = reference_[i][observed[i]];
    return top_m(scores, budget(), rng);
}

void AbPolicy::update(const Transition& tr) {
    const std::size_t n = table_.n_states(tr.arm);
    double offset = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        offset += table_.q(tr.arm, s, Action::passive) + table_.q(tr.arm, s, Action::active);
    }
    offset /= static_cast<double>(2 * n);

    const double alpha = table_.visit(tr.arm, tr.state, tr.action);
    auto& ref = reference_[tr.arm][tr.state];
    const double subsidy = tr.action == Action::passive ? ref : 0.0;
    const double target = tr.reward + subsidy + table_.max_q(tr.arm, tr.next_state) - offset;
    const double old = table_.q(tr.arm, tr.state, tr.action);
    table_.set(tr.arm, tr.state, tr.action, old + alpha * (target - old));
    ref += beta(t_) * table_.lambda(tr.arm, tr.state);
}

double AbPolicy::slow_residual() const {
    double total = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < table_.n_arms(); ++i) {
        for (std::size_t s = 0; s < table_.n_states(i); ++s) {
            if (table_.count(i, s, Action::passive) == 0 || table_.count(i, s, Action::active) == 0) continue;
            total += std::abs(table_.lambda(i, s));
            ++cells;
        }
    }
    return cells == 0 ? 0.0 : total / static_cast<double>(cells);
}

// --- Fu -------------------------------------------------------------------

FuPolicy::FuPolicy(const RmabInstance& instance, FuParams params)
    : Policy(instance.n_arms(), instance.budget), params_(std::move(params)) {
    if (params_.lambdas.empty()) throw std::invalid_argument("fu: subsidy grid must not be empty");
    const auto states = states_per_arm(instance);
    layers_.assign(params_.lambdas.size(), QTable(states));
}

double FuPolicy::lambda_min(std::size_t arm, std::size_t s) const {
    std::size_t best = 0;
    double best_gap = std::abs(layers_[0].lambda(arm, s));
    for (std::size_t l = 1; l < layers_.size(); ++l) {
        const double gap = std::abs(layers_[l].lambda(arm, s));
        if (gap < best_gap) {
            best_gap = gap;
            best = l;
        }
    }
    return params_.lambdas[best];
}

std::vector<std::size_t> FuPolicy::select(std::span<const std::size_t> observed, std::size_t, Rng& rng) {
    check_observed(*this, observed);
    std::vector<double> scores(n_arms());
    for (std::size_t i = 0; i < n_arms(); ++i) scores[i] = lambda_min(i, observed[i]);
    return top_m(scores, budget(), rng);
}

void FuPolicy::update(const Transition& tr) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        const double counted = layer.visit(tr.arm, tr.state, tr.action);
        const double alpha = params_.forced_alpha.value_or(counted);
        const double subsidy = tr.action == Action::passive ? params_.lambdas[l] : 0.0;
        const double target = tr.reward + subsidy + params_.gamma * layer.max_q(tr.arm, tr.next_state);
        const double old = layer.q(tr.arm, tr.state, tr.action);
        layer.set(tr.arm, tr.state, tr.action, (1.0 - alpha) * old + alpha * target);
    }
}

// --- Myopic ---------------------------------------------------------------

MyopicPolicy::MyopicPolicy(const RmabInstance& instance) : Policy(instance.n_arms(), instance.budget) {
    risk_.reserve(instance.n_arms());
    for (const auto& arm : instance.arms) risk_.push_back(drop_risk_table(arm));
}

std::vector<double> MyopicPolicy::drop_risk_table(const ArmMdp& mdp) {
    std::vector<double> risk(mdp.n_states, 0.0);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        const double here = mdp.reward_at(s, Action::passive);
        for (std::size_t next = 0; next < mdp.n_states; ++next) {
            if (mdp.reward_at(next, Action::passive) < here) risk[s] += mdp.probability(s, Action::passive, next);
        }
    }
    return risk;
}

std::vector<std::size_t> MyopicPolicy::select(std::span<const std::size_t> observed, std::size_t, Rng& rng) {
    check_observed(*this, observed);
    std::vector<double> scores(n_arms());
    for (std::size_t i = 0; i < n_arms(); ++i) scores[i] = risk_[i].at(observed[i]);
    return top_m(scores, budget(), rng);
}

void MyopicPolicy::on_arm_replaced(std::size_t arm, const ArmMdp& mdp) { risk_.at(arm) = drop_risk_table(mdp); }

}  // namespace rmab
