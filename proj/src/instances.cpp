#include "rmab/instances.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace rmab {

using nlohmann::json;

namespace {

std::vector<double> state_rewards(std::size_t n, const std::function<double(std::size_t)>& f) {
    std::vector<double> r(n);
    for (std::size_t s = 0; s < n; ++s) r[s] = f(s);
    return r;
}

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

// --- arm builders -----------------------------------------------------------

ArmMdp maternal_arm(const MaternalCategory& category, const MaternalParams& params) {
    check_probability(category.p_ps, "p_ps");
    check_probability(category.p_pl, "p_pl");
    check_probability(params.s_retention, "s_retention");
    check_probability(params.l_to_p, "l_to_p");
    check_probability(params.active_stay_share, "active_stay_share");

    const double s_row_stay = params.s_retention;
    const double rest_active = 1.0 - category.p_ps;
    const Matrix active = {
        {s_row_stay, 1.0 - s_row_stay, 0.0},
        {category.p_ps, rest_active * params.active_stay_share, rest_active * (1.0 - params.active_stay_share)},
        {0.0, params.l_to_p, 1.0 - params.l_to_p},
    };
    const Matrix passive = {
        {s_row_stay, 1.0 - s_row_stay, 0.0},
        {0.0, 1.0 - category.p_pl, category.p_pl},
        {0.0, params.l_to_p, 1.0 - params.l_to_p},
    };
    const std::vector<double> rewards = {2.0, 1.0, 0.0};
    return make_arm(passive, active, rewards);
}

ArmMdp circulant_arm() {
    const Matrix active = {
        {0.5, 0.5, 0.0, 0.0},
        {0.0, 0.5, 0.5, 0.0},
        {0.0, 0.0, 0.5, 0.5},
        {0.5, 0.0, 0.0, 0.5},
    };
    const Matrix passive = {
        {0.5, 0.0, 0.0, 0.5},
        {0.5, 0.5, 0.0, 0.0},
        {0.0, 0.5, 0.5, 0.0},
        {0.0, 0.0, 0.5, 0.5},
    };
    const std::vector<double> rewards = {-1.0, 0.0, 0.0, 1.0};
    return make_arm(passive, active, rewards);
}

ArmMdp restart_arm(std::optional<std::vector<double>> active_reward) {
    constexpr std::size_t n = 5;
    auto band = [](double p, double q) {
        Matrix m(n, std::vector<double>(n, 0.0));
        for (std::size_t z = 0; z < n; ++z) {
            m[z][0] += p;
            m[z][std::min(z + 1, n - 1)] += q;
        }
        return m;
    };
    const auto passive_reward = state_rewards(n, [](std::size_t z) { return std::pow(0.9, static_cast<double>(z)); });
    const auto active = active_reward.value_or(passive_reward);
    return make_arm(band(0.1, 0.9), band(1.0, 0.0), passive_reward, active);
}

ArmMdp mentoring_arm(double p1, double q1, double p0, double q0) {
    constexpr std::size_t n = 10;
    auto band = [](double p, double q) {
        Matrix m(n, std::vector<double>(n, 0.0));
        for (std::size_t z = 0; z < n; ++z) {
            m[z][z == 0 ? 0 : z - 1] += q;
            m[z][std::min(z + 1, n - 1)] += p;
        }
        return m;
    };
    const auto rewards = state_rewards(n, [](std::size_t z) { return std::sqrt(static_cast<double>(z) / 10.0); });
    return make_arm(band(p0, q0), band(p1, q1), rewards);
}

ArmMdp action_symmetric_arm() {
    const ArmMdp c = circulant_arm();
    ArmMdp arm = c;
    arm.transitions[1] = c.transitions[0];
    return arm;
}

ArmMdp non_indexable_arm() {
    // Found by a random search over 3-state arms. Under the average criterion
    // state 0 is passive for λ in about [0.12, 1.63], active again up to 3.5,
    // then passive.
    const Matrix passive = {
        {0.28, 0.02, 0.70},
        {0.21, 0.78, 0.01},
        {0.01, 0.11, 0.88},
    };
    const Matrix active = {
        {0.02, 0.87, 0.11},
        {0.64, 0.25, 0.11},
        {0.85, 0.06, 0.09},
    };
    const std::vector<double> rewards = {3.0, 1.0, 0.0};
    return make_arm(passive, active, rewards);
}

// --- instance generators ----------------------------------------------------

RmabInstance homogeneous(const ArmMdp& arm, std::size_t n_arms, std::size_t budget, std::uint64_t seed) {
    RmabInstance inst;
    inst.arms.assign(n_arms, arm);
    inst.budget = budget;
    Rng rng(derive_seed(seed, 0x1417));
    inst.initial_states.reserve(n_arms);
    for (std::size_t i = 0; i < n_arms; ++i) inst.initial_states.push_back(rng.below(arm.n_states));
    ensure_valid(inst);
    return inst;
}

RmabInstance circulant(std::size_t n_arms, std::size_t budget, std::uint64_t seed) {
    return homogeneous(circulant_arm(), n_arms, budget, seed);
}

RmabInstance restart(std::size_t n_arms, std::size_t budget, std::uint64_t seed,
                     std::optional<std::vector<double>> active_reward) {
    return homogeneous(restart_arm(std::move(active_reward)), n_arms, budget, seed);
}

RmabInstance mentoring(std::size_t n_arms, std::size_t budget, double p1, double q1, double p0, double q0,
                       std::uint64_t seed) {
    return homogeneous(mentoring_arm(p1, q1, p0, q0), n_arms, budget, seed);
}

RmabInstance maternal_static(const MaternalParams& params) {
    RmabInstance inst;
    const ArmMdp a = maternal_arm(params.a, params);
    const ArmMdp b = maternal_arm(params.b, params);
    const ArmMdp c = maternal_arm(params.c, params);
    inst.arms.insert(inst.arms.end(), params.n_a, a);
    inst.arms.insert(inst.arms.end(), params.n_b, b);
    inst.arms.insert(inst.arms.end(), params.n_c, c);
    inst.budget = params.budget;
    inst.initial_states.assign(inst.arms.size(), params.initial_state);
    ensure_valid(inst);
    return inst;
}

RmabInstance maternal_dynamic(const MaternalParams& params, std::size_t change_week, std::uint64_t seed) {
    if (change_week < 1) throw std::invalid_argument("maternal_dynamic: change_week must be >= 1");
    if (params.n_a > params.n_c) {
        throw std::invalid_argument("maternal_dynamic: need at least n_a category-C arms to promote");
    }
    RmabInstance inst = maternal_static(params);
    const ArmMdp as_a = maternal_arm(params.a, params);
    const ArmMdp as_b = maternal_arm(params.b, params);
    const ArmMdp as_c = maternal_arm(params.c, params);

    const std::size_t c_begin = params.n_a + params.n_b;
    Rng pick(derive_seed(seed, 0xC0DE));
    const auto promoted_list = uniform_subset(params.n_c, params.n_a, pick);
    const std::set<std::size_t> promoted(promoted_list.begin(), promoted_list.end());

    for (std::size_t i = 0; i < inst.n_arms(); ++i) {
        if (i < params.n_a) {
            inst.dynamics.push_back({change_week, i, as_b});
        } else if (i < c_begin) {
            inst.dynamics.push_back({change_week, i, as_c});
        } else if (promoted.contains(i - c_begin)) {
            inst.dynamics.push_back({change_week, i, as_a});
        }
    }
    ensure_valid(inst);
    return inst;
}

// --- generator registry -------------------------------------------------------

namespace {

struct ParamReader {
    const json& params;
    std::string generator;
    std::set<std::string> used;

    template <typename T>
    T get(const std::string& key, T fallback) {
        used.insert(key);
        if (!params.contains(key)) return fallback;
        try {
            return params.at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(generator + "." + key + ": " + e.what());
        }
    }

    bool has(const std::string& key) {
        used.insert(key);
        return params.contains(key);
    }

    void finish() const {
        for (const auto& [key, _] : params.items()) {
            if (!used.contains(key)) throw std::invalid_argument(generator + ": unknown parameter '" + key + "'");
        }
    }
};

MaternalCategory read_category(ParamReader& r, const std::string& key, MaternalCategory fallback) {
    if (!r.has(key)) return fallback;
    const json& j = r.params.at(key);
    MaternalCategory c = fallback;
    c.p_ps = j.value("p_ps", fallback.p_ps);
    c.p_pl = j.value("p_pl", fallback.p_pl);
    return c;
}

MaternalParams read_maternal(ParamReader& r) {
    MaternalParams p;
    p.n_a = r.get<std::size_t>("n_a", p.n_a);
    p.n_b = r.get<std::size_t>("n_b", p.n_b);
    p.n_c = r.get<std::size_t>("n_c", p.n_c);
    p.budget = r.get<std::size_t>("budget", p.budget);
    p.a = read_category(r, "category_a", p.a);
    p.b = read_category(r, "category_b", p.b);
    p.c = read_category(r, "category_c", p.c);
    p.s_retention = r.get<double>("s_retention", p.s_retention);
    p.l_to_p = r.get<double>("l_to_p", p.l_to_p);
    p.active_stay_share = r.get<double>("active_stay_share", p.active_stay_share);
    p.initial_state = r.get<std::size_t>("initial_state", p.initial_state);
    return p;
}

using Builder = std::function<RmabInstance(ParamReader&)>;

const std::map<std::string, Builder, std::less<>>& builders() {
    static const std::map<std::string, Builder, std::less<>> table = {
        {"circulant",
         [](ParamReader& r) {
             return circulant(r.get<std::size_t>("n_arms", 5), r.get<std::size_t>("budget", 1),
                              r.get<std::uint64_t>("seed", 0));
         }},
        {"restart",
         [](ParamReader& r) {
             std::optional<std::vector<double>> active;
             if (r.has("active_reward")) active = r.params.at("active_reward").get<std::vector<double>>();
             return restart(r.get<std::size_t>("n_arms", 5), r.get<std::size_t>("budget", 1),
                            r.get<std::uint64_t>("seed", 0), active);
         }},
        {"mentoring",
         [](ParamReader& r) {
             return mentoring(r.get<std::size_t>("n_arms", 5), r.get<std::size_t>("budget", 1), r.get("p1", 0.7),
                              r.get("q1", 0.3), r.get("p0", 0.7), r.get("q0", 0.3), r.get<std::uint64_t>("seed", 0));
         }},
        {"mentoring_separated",
         [](ParamReader& r) {
             return mentoring(r.get<std::size_t>("n_arms", 5), r.get<std::size_t>("budget", 1), 0.7, 0.3, 0.3, 0.7,
                              r.get<std::uint64_t>("seed", 0));
         }},
        {"maternal_static", [](ParamReader& r) { return maternal_static(read_maternal(r)); }},
        {"maternal_dynamic",
         [](ParamReader& r) {
             const auto p = read_maternal(r);
             return maternal_dynamic(p, r.get<std::size_t>("change_week", 28), r.get<std::uint64_t>("seed", 0));
         }},
        {"action_symmetric",
         [](ParamReader& r) {
             return homogeneous(action_symmetric_arm(), r.get<std::size_t>("n_arms", 5),
                                r.get<std::size_t>("budget", 1), r.get<std::uint64_t>("seed", 0));
         }},
        {"non_indexable",
         [](ParamReader& r) {
             return homogeneous(non_indexable_arm(), r.get<std::size_t>("n_arms", 5), r.get<std::size_t>("budget", 1),
                                r.get<std::uint64_t>("seed", 0));
         }},
    };
    return table;
}

}  // namespace

const std::vector<GeneratorInfo>& generators() {
    static const std::vector<GeneratorInfo> list = {
        {"circulant", "4-state circulant dynamics; n_arms, budget, seed"},
        {"restart", "5-state restart chain; n_arms, budget, seed, active_reward"},
        {"mentoring", "10-state mentoring chain; n_arms, budget, p1, q1, p0, q0, seed"},
        {"mentoring_separated", "mentoring with p1=0.7/q1=0.3 active and the mirror passive; n_arms, budget, seed"},
        {"maternal_static", "S/P/L engagement arms in categories A/B/C; n_a, n_b, n_c, budget, ..."},
        {"maternal_dynamic", "maternal_static plus a category shift at change_week; ..., change_week, seed"},
        {"action_symmetric", "arms whose two actions are identical (all indices 0); n_arms, budget, seed"},
        {"non_indexable", "arms with a non-monotone passive set; n_arms, budget, seed"},
    };
    return list;
}

RmabInstance make_instance(std::string_view generator, const json& params) {
    const auto& table = builders();
    const auto it = table.find(generator);
    if (it == table.end()) throw std::invalid_argument("unknown instance generator '" + std::string(generator) + "'");
    if (!params.is_object()) throw std::invalid_argument(std::string(generator) + ": parameters must be an object");
    ParamReader reader{params, std::string(generator), {}};
    RmabInstance inst = it->second(reader);
    reader.finish();
    return inst;
}

// --- JSON format ------------------------------------------------------------

json to_json(const ArmMdp& arm) {
    json j;
    j["n_states"] = arm.n_states;
    json transitions = json::array();
    for (std::size_t a = 0; a < 2; ++a) {
        json m = json::array();
        for (std::size_t r = 0; r < arm.n_states; ++r) {
            const auto row = arm.row(r, static_cast<Action>(a));
            m.push_back(std::vector<double>(row.begin(), row.end()));
        }
        transitions.push_back(std::move(m));
    }
    j["transitions"] = std::move(transitions);
    j["rewards"] = json::array({arm.rewards[0], arm.rewards[1]});
    return j;
}

json to_json(const RmabInstance& instance) {
    json j;
    j["budget"] = instance.budget;
    json arms = json::array();
    for (std::size_t i = 0; i < instance.n_arms(); ++i) {
        json a = to_json(instance.arms[i]);
        a["initial_state"] = instance.initial_states.at(i);
        arms.push_back(std::move(a));
    }
    j["arms"] = std::move(arms);
    json dynamics = json::array();
    for (const auto& change : instance.dynamics) {
        dynamics.push_back({{"step", change.step}, {"arm", change.arm}, {"replacement", to_json(change.replacement)}});
    }
    j["dynamics"] = std::move(dynamics);
    return j;
}

namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw InstanceFormatError(path + "." + key + ": missing");
    return j.at(key);
}

template <typename T>
T read_as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw InstanceFormatError(path + ": wrong type");
    }
}

ArmMdp arm_from_json(const json& j, const std::string& path) {
    ArmMdp arm;
    arm.n_states = read_as<std::size_t>(require(j, "n_states", path), path + ".n_states");
    const json& transitions = require(j, "transitions", path);
    const json& rewards = require(j, "rewards", path);
    if (!transitions.is_array() || transitions.size() != 2) {
        throw InstanceFormatError(path + ".transitions: expected two matrices [passive, active]");
    }
    if (!rewards.is_array() || rewards.size() != 2) {
        throw InstanceFormatError(path + ".rewards: expected two vectors [passive, active]");
    }
    for (std::size_t a = 0; a < 2; ++a) {
        const std::string where = path + ".transitions[" + std::to_string(a) + "]";
        const auto m = read_as<Matrix>(transitions[a], where);
        if (m.size() != arm.n_states) {
            throw InstanceFormatError(where + ": expected " + std::to_string(arm.n_states) + " rows");
        }
        for (std::size_t r = 0; r < m.size(); ++r) {
            if (m[r].size() != arm.n_states) {
                throw InstanceFormatError(where + " row " + std::to_string(r) + ": expected " +
                                          std::to_string(arm.n_states) + " columns");
            }
            arm.transitions[a].insert(arm.transitions[a].end(), m[r].begin(), m[r].end());
        }
        arm.rewards[a] = read_as<std::vector<double>>(rewards[a], path + ".rewards[" + std::to_string(a) + "]");
    }
    return arm;
}

}  // namespace

RmabInstance instance_from_json(const json& doc) {
    if (!doc.is_object()) throw InstanceFormatError("instance document must be an object");
    RmabInstance inst;
    inst.budget = read_as<std::size_t>(require(doc, "budget", "$"), "budget");
    const json& arms = require(doc, "arms", "$");
    if (!arms.is_array()) throw InstanceFormatError("arms: expected an array");
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const std::string path = "arms[" + std::to_string(i) + "]";
        inst.arms.push_back(arm_from_json(arms[i], path));
        inst.initial_states.push_back(
            read_as<std::size_t>(require(arms[i], "initial_state", path), path + ".initial_state"));
    }
    if (doc.contains("dynamics")) {
        const json& dynamics = doc.at("dynamics");
        if (!dynamics.is_array()) throw InstanceFormatError("dynamics: expected an array");
        for (std::size_t k = 0; k < dynamics.size(); ++k) {
            const std::string path = "dynamics[" + std::to_string(k) + "]";
            ScheduledChange change;
            change.step = read_as<std::size_t>(require(dynamics[k], "step", path), path + ".step");
            change.arm = read_as<std::size_t>(require(dynamics[k], "arm", path), path + ".arm");
            change.replacement = arm_from_json(require(dynamics[k], "replacement", path), path + ".replacement");
            inst.dynamics.push_back(std::move(change));
        }
    }
    if (auto violations = validate(inst); !violations.empty()) {
        std::string msg = "invalid instance";
        for (const auto& v : violations) msg += "; " + v.message;
        throw InstanceFormatError(msg);
    }
    for (auto& arm : inst.arms) normalize_rows(arm);
    for (auto& change : inst.dynamics) normalize_rows(change.replacement);
    return inst;
}

RmabInstance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InstanceFormatError("cannot open instance file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InstanceFormatError(path.string() + ": " + e.what());
    }
    return instance_from_json(doc);
}

void save_instance(const RmabInstance& instance, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write instance file " + path.string());
    out << to_json(instance).dump(2) << '\n';
}

}  // namespace rmab
