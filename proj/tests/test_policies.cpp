#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "rmab/instances.hpp"
#include "rmab/policies.hpp"
#include "rmab/sim.hpp"

using namespace rmab;

namespace {

Transition tr(std::size_t arm, std::size_t s, Action a, double r, std::size_t next) { return {arm, s, a, r, next}; }

// Writes Q(s, a) = value into a WIQL table through a step of size 1 whose
// next state has Q = 0 in both actions.
void write_q(WiqlPolicy& p, std::size_t arm, std::size_t s, Action a, double value, std::size_t blank_state) {
    p.update(tr(arm, s, a, value, blank_state));
}

std::vector<std::size_t> zeros(std::size_t n) { return std::vector<std::size_t>(n, 0); }

void check_budget(const std::vector<std::size_t>& sel, std::size_t n, std::size_t m) {
    REQUIRE(sel.size() == m);
    for (std::size_t k = 0; k < sel.size(); ++k) {
        CHECK(sel[k] < n);
        if (k > 0) CHECK(sel[k - 1] < sel[k]);
    }
}

}  // namespace

TEST_CASE("exploration rate") {
    const auto inst = homogeneous(circulant_arm(), 100, 10, 0);
    WiqlPolicy p(inst);
    CHECK(p.epsilon(1) == doctest::Approx(100.0 / 101.0));
    CHECK(p.epsilon(100) == doctest::Approx(0.5));
}

TEST_CASE("exploration frequency matches N/(N+t)") {
    const auto inst = circulant(5, 1, 0);
    WiqlPolicy p(inst);
    const int k = 10000;
    for (std::size_t t : {1u, 5u, 20u, 200u}) {
        Rng rng(t);
        int explored = 0;
        for (int i = 0; i < k; ++i) {
            p.select(zeros(5), t, rng);
            explored += p.last_select_explored();
        }
        const double eps = 5.0 / (5.0 + static_cast<double>(t));
        CHECK(std::abs(explored / double(k) - eps) < 4 * std::sqrt(eps * (1 - eps) / k) + 1e-9);
    }
}

TEST_CASE("all-zero estimates still spread the choice over many subsets") {
    const auto inst = circulant(5, 2, 0);
    WiqlParams params;
    params.forced_epsilon = 0.0;
    WiqlPolicy p(inst, params);
    Rng rng(4);
    std::set<std::vector<std::size_t>> seen;
    for (int i = 0; i < 500; ++i) seen.insert(p.select(zeros(5), 1000, rng));
    CHECK(seen.size() == 10);
}

TEST_CASE("greedy branch picks the distinct top-2") {
    const auto inst = circulant(5, 2, 0);
    WiqlParams params;
    params.forced_epsilon = 0.0;
    params.forced_alpha = 1.0;
    WiqlPolicy p(inst, params);
    const std::vector<double> est = {5, 1, 3, -2, 0};
    for (std::size_t i = 0; i < 5; ++i) write_q(p, i, 0, Action::active, est[i], 1);
    for (std::size_t i = 0; i < 5; ++i) CHECK(p.table().lambda(i, 0) == est[i]);
    Rng rng(1);
    for (int k = 0; k < 20; ++k) CHECK(p.select(zeros(5), 50, rng) == std::vector<std::size_t>{0, 2});
    CHECK_FALSE(p.last_select_explored());
}

TEST_CASE("Q update arithmetic") {
    const auto inst = circulant(1, 1, 0);
    SUBCASE("first visit uses step 1/2") {
        WiqlPolicy p(inst);
        p.update(tr(0, 0, Action::active, 1.0, 1));
        CHECK(p.table().q(0, 0, Action::active) == 0.5);
        CHECK(p.last_alpha() == 0.5);
        CHECK(p.table().count(0, 0, Action::active) == 1);
    }
    SUBCASE("step 0 learns nothing") {
        WiqlParams params;
        params.forced_alpha = 0.0;
        WiqlPolicy p(inst, params);
        p.update(tr(0, 0, Action::active, 7.0, 1));
        CHECK(p.table().q(0, 0, Action::active) == 0.0);
    }
    SUBCASE("step 1 keeps only the newest target") {
        WiqlParams params;
        params.forced_alpha = 1.0;
        WiqlPolicy p(inst, params);
        write_q(p, 0, 2, Action::passive, 3.0, 3);
        p.update(tr(0, 0, Action::active, 2.0, 2));
        CHECK(p.table().q(0, 0, Action::active) == 5.0);
    }
    SUBCASE("discount multiplies the next value") {
        WiqlParams params;
        params.forced_alpha = 1.0;
        params.gamma = 0.5;
        WiqlPolicy p(inst, params);
        write_q(p, 0, 2, Action::passive, 3.0, 3);
        p.update(tr(0, 0, Action::active, 2.0, 2));
        CHECK(p.table().q(0, 0, Action::active) == 3.5);
    }
}

TEST_CASE("step sizes run 1/2, 1/3, ... per cell") {
    const auto inst = circulant(2, 1, 0);
    WiqlPolicy p(inst);
    for (int k = 1; k <= 50; ++k) {
        p.update(tr(1, 3, Action::passive, 0.3, 0));
        CHECK(p.last_alpha() == doctest::Approx(1.0 / (k + 1)));
        // Other cells keep their own count.
        p.update(tr(1, 3, Action::active, 0.3, 0));
        CHECK(p.last_alpha() == doctest::Approx(1.0 / (k + 1)));
    }
    p.update(tr(0, 3, Action::passive, 0.3, 0));
    CHECK(p.last_alpha() == 0.5);
}

TEST_CASE("index estimate always equals the Q difference") {
    const auto inst = maternal_static();
    WiqlPolicy p(inst);
    Rng rng(5);
    for (int k = 0; k < 5000; ++k) {
        const auto arm = rng.below(inst.n_arms());
        const auto s = rng.below(3);
        const auto a = rng.below(2) ? Action::active : Action::passive;
        p.update(tr(arm, s, a, rng.uniform() * 2, rng.below(3)));
        const auto& t = p.table();
        CHECK(t.lambda(arm, s) == t.q(arm, s, Action::active) - t.q(arm, s, Action::passive));
    }
}

TEST_CASE("counts add up to elapsed steps for every arm") {
    const auto inst = circulant(6, 2, 3);
    WiqlPolicy p(inst);
    run_episode(inst, p, 300, 11);
    for (std::size_t i = 0; i < 6; ++i) {
        std::uint64_t total = 0;
        for (std::size_t s = 0; s < 4; ++s)
            total += p.table().count(i, s, Action::passive) + p.table().count(i, s, Action::active);
        CHECK(total == 300);
    }
}

TEST_CASE("top-M by Q difference maximizes the summed Q over all feasible profiles") {
    Rng rng(1000);
    int agree = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        const std::size_t m = 1 + rng.below(std::min<std::size_t>(4, n));
        const auto inst = homogeneous(circulant_arm(), n, m, trial);
        WiqlParams params;
        params.forced_alpha = 1.0;
        params.forced_epsilon = 0.0;
        WiqlPolicy p(inst, params);
        std::vector<double> qp(n), qa(n);
        for (std::size_t i = 0; i < n; ++i) {
            qp[i] = rng.uniform() * 10 - 5;
            qa[i] = rng.uniform() * 10 - 5;
            write_q(p, i, 0, Action::passive, qp[i], 1);
            write_q(p, i, 0, Action::active, qa[i], 1);
        }
        const auto chosen = p.select(zeros(n), 1, rng);
        agree += chosen == oracle::brute_force_argmax(qp, qa, m);
    }
    CHECK(agree == 1000);
}

TEST_CASE("OPT ranks circulant states 2 > 1 > 0 > 3") {
    const auto inst = circulant(5, 1, 0);
    OptPolicy p(inst);
    Rng rng(0);
    const std::vector<std::size_t> a = {2, 1, 0, 3, 3};
    const std::vector<std::size_t> b = {3, 3, 3, 3, 0};
    CHECK(p.select(a, 1, rng) == std::vector<std::size_t>{0});
    CHECK(p.select(b, 1, rng) == std::vector<std::size_t>{4});

    std::vector<int> hits(5, 0);
    const std::vector<std::size_t> same = {1, 1, 1, 1, 1};
    for (int k = 0; k < 10000; ++k) ++hits[p.select(same, 1, rng)[0]];
    for (int h : hits) CHECK(std::abs(h / 1e4 - 0.2) < 0.02);
}

TEST_CASE("OPT recomputes an arm's table when its model changes") {
    auto inst = circulant(2, 1, 0);
    OptPolicy p(inst);
    p.on_arm_replaced(1, action_symmetric_arm());
    for (double x : p.tables()[1]) CHECK(std::abs(x) < 1e-4);
    CHECK(p.tables()[0][2] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("greedy compares mean reward differences") {
    const auto inst = circulant(2, 1, 0);
    GreedyPolicy p(inst);
    p.update(tr(0, 1, Action::active, 2.0, 0));
    p.update(tr(0, 1, Action::passive, 0.5, 0));
    p.update(tr(1, 1, Action::active, 1.0, 0));
    p.update(tr(1, 1, Action::active, 1.0, 0));
    p.update(tr(1, 1, Action::passive, 0.9, 0));
    CHECK(p.mean(1, 1, Action::active) == 1.0);
    Rng rng(0);
    for (int k = 0; k < 10; ++k) CHECK(p.select(std::vector<std::size_t>{1, 1}, 1, rng) == std::vector<std::size_t>{0});

    GreedyPolicy fresh(inst);
    std::vector<int> hits(2, 0);
    for (int k = 0; k < 4000; ++k) ++hits[fresh.select(std::vector<std::size_t>{0, 0}, 1, rng)[0]];
    CHECK(std::abs(hits[0] / 4000.0 - 0.5) < 0.04);

    GreedyPolicy single(circulant(1, 1, 0));
    CHECK(single.select(std::vector<std::size_t>{2}, 1, rng) == std::vector<std::size_t>{0});
}

TEST_CASE("random selection") {
    Rng rng(0);
    RandomPolicy all(5, 5);
    CHECK(all.select(zeros(5), 1, rng) == std::vector<std::size_t>{0, 1, 2, 3, 4});

    RandomPolicy two(2, 1);
    int first = 0;
    for (int k = 0; k < 10000; ++k) first += two.select(zeros(2), 1, rng)[0] == 0;
    CHECK(std::abs(first / 1e4 - 0.5) < 0.02);

    Rng a(99), b(99);
    RandomPolicy p(8, 3);
    for (int k = 0; k < 100; ++k) CHECK(p.select(zeros(8), 1, a) == p.select(zeros(8), 1, b));
}

TEST_CASE("random selection matches WIQL with exploration forced on") {
    const auto inst = circulant(6, 2, 0);
    WiqlParams params;
    params.forced_epsilon = 1.0;
    WiqlPolicy wiql(inst, params);
    RandomPolicy random(inst);
    Rng r1(3), r2(4);
    std::vector<int> hw(6, 0), hr(6, 0);
    std::map<std::vector<std::size_t>, int> sw, sr;
    const int k = 10000;
    for (int i = 0; i < k; ++i) {
        const auto w = wiql.select(zeros(6), 1 + i, r1);
        const auto r = random.select(zeros(6), 1 + i, r2);
        for (auto x : w) ++hw[x];
        for (auto x : r) ++hr[x];
        ++sw[w];
        ++sr[r];
    }
    for (int i = 0; i < 6; ++i) CHECK(std::abs(hw[i] - hr[i]) / double(k) < 0.02);
    CHECK(sw.size() == 15);
    CHECK(sr.size() == 15);
    for (const auto& [set, c] : sw) CHECK(std::abs(c - sr[set]) / double(k) < 0.02);
}

TEST_CASE("AB timescales") {
    const auto inst = circulant(5, 1, 0);
    AbPolicy p(inst);
    CHECK(p.beta(1) == doctest::Approx(1.0 / (1.0 + std::log(3.0) / 100)));
    CHECK(p.beta(1000) < p.beta(10));

    // No updates: every reference is 0, so selection is a full tie.
    Rng rng(2);
    std::vector<int> hits(5, 0);
    for (int k = 0; k < 10000; ++k) ++hits[p.select(zeros(5), 1, rng)[0]];
    for (int h : hits) CHECK(std::abs(h / 1e4 - 0.2) < 0.02);
}

TEST_CASE("AB slow residual shrinks over a ten times longer run") {
    const auto inst = circulant(5, 1, 0);
    AbPolicy short_run(inst), long_run(inst);
    run_episode(inst, short_run, 2000, 5);
    run_episode(inst, long_run, 20000, 5);
    MESSAGE("residual " << short_run.slow_residual() << " -> " << long_run.slow_residual());
    CHECK(long_run.slow_residual() < short_run.slow_residual());
}

TEST_CASE("Fu layers") {
    const auto inst = circulant(2, 1, 0);
    SUBCASE("empty grid is rejected") {
        FuParams params;
        params.lambdas.clear();
        CHECK_THROWS_AS(FuPolicy(inst, params), std::invalid_argument);
    }
    SUBCASE("single zero layer gives a full tie") {
        FuParams params;
        params.lambdas = {0.0};
        FuPolicy p(inst, params);
        p.update(tr(0, 0, Action::active, 1.0, 1));
        CHECK(p.lambda_min(0, 0) == 0.0);
        CHECK(p.lambda_min(1, 3) == 0.0);
        Rng rng(0);
        int first = 0;
        for (int k = 0; k < 4000; ++k) first += p.select(std::vector<std::size_t>{0, 3}, 1, rng)[0] == 0;
        CHECK(std::abs(first / 4000.0 - 0.5) < 0.04);
    }
    SUBCASE("unit step writes the subsidized targets") {
        FuParams params;
        params.forced_alpha = 1.0;
        FuPolicy p(inst, params);
        p.update(tr(0, 1, Action::active, 0.7, 2));  // seeds Q(1, 1) = 0.7 in every layer
        p.update(tr(0, 0, Action::passive, -1.0, 1));
        p.update(tr(0, 2, Action::active, 0.0, 0));
        const auto& lam = p.lambdas();
        for (std::size_t l = 0; l < lam.size(); ++l) {
            CHECK(p.q(l, 0, 1, Action::active) == doctest::Approx(0.7));
            const double passive = -1.0 + lam[l] + 0.7;
            CHECK(p.q(l, 0, 0, Action::passive) == doctest::Approx(passive));
            CHECK(p.q(l, 0, 2, Action::active) == doctest::Approx(std::max(passive, 0.0)));
        }
        // Smallest |gap| at state 1: gap is 0.7 in every layer, so the first λ wins.
        CHECK(p.lambda_min(0, 1) == lam.front());
    }
}

TEST_CASE("Myopic drop risk") {
    const auto a = maternal_arm(kCategoryA);
    const auto b = maternal_arm(kCategoryB);
    const auto risk_a = MyopicPolicy::drop_risk_table(a);
    CHECK(risk_a[kPersuadable] == doctest::Approx(0.8));
    CHECK(risk_a[kLostCause] == 0.0);
    CHECK(risk_a[kSelfMotivated] == doctest::Approx(0.1));
    CHECK(MyopicPolicy::drop_risk_table(b)[kPersuadable] == doctest::Approx(0.6));

    RmabInstance inst{{b, a}, 1, {kPersuadable, kPersuadable}, {}};
    MyopicPolicy p(inst);
    Rng rng(0);
    const std::vector<std::size_t> both_p = {kPersuadable, kPersuadable};
    for (int k = 0; k < 10; ++k) CHECK(p.select(both_p, 1, rng) == std::vector<std::size_t>{1});

    RmabInstance same{{a, a, a}, 1, {0, 0, 0}, {}};
    MyopicPolicy q(same);
    std::vector<int> hits(3, 0);
    for (int k = 0; k < 9000; ++k) ++hits[q.select(zeros(3), 1, rng)[0]];
    for (int h : hits) CHECK(std::abs(h / 9000.0 - 1.0 / 3) < 0.03);

    p.on_arm_replaced(1, maternal_arm(kCategoryC));
    CHECK(p.drop_risk(1, kPersuadable) == doctest::Approx(0.6));
}

TEST_CASE("every policy returns exactly M distinct arms") {
    const auto inst = maternal_static();
    std::vector<std::unique_ptr<Policy>> policies;
    policies.push_back(std::make_unique<WiqlPolicy>(inst));
    policies.push_back(std::make_unique<OptPolicy>(inst));
    policies.push_back(std::make_unique<GreedyPolicy>(inst));
    policies.push_back(std::make_unique<RandomPolicy>(inst));
    policies.push_back(std::make_unique<AbPolicy>(inst));
    policies.push_back(std::make_unique<FuPolicy>(inst));
    policies.push_back(std::make_unique<MyopicPolicy>(inst));
    Rng rng(6);
    for (auto& p : policies) {
        for (std::size_t t = 1; t <= 200; ++t) {
            std::vector<std::size_t> obs(inst.n_arms());
            for (auto& s : obs) s = rng.below(3);
            check_budget(p->select(obs, t, rng), inst.n_arms(), inst.budget);
            for (std::size_t i = 0; i < inst.n_arms(); ++i) {
                const auto a = rng.below(2) ? Action::active : Action::passive;
                p->update(tr(i, obs[i], a, rng.uniform(), rng.below(3)));
            }
        }
    }
}

TEST_CASE("selection contract errors") {
    const auto inst = circulant(3, 1, 0);
    WiqlPolicy p(inst);
    Rng rng(0);
    CHECK_THROWS_AS(p.select(zeros(2), 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(p.select(zeros(3), 0, rng), std::invalid_argument);
    CHECK_THROWS_AS(RandomPolicy(2, 3), std::invalid_argument);
    auto bad = inst;
    bad.budget = 4;
    CHECK_THROWS_AS(WiqlPolicy{bad}, std::invalid_argument);
}
