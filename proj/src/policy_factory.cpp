#include "rmab/policy_factory.hpp"

#include <set>
#include <stdexcept>

namespace rmab {

using nlohmann::json;

namespace {

void reject_unknown(const json& params, std::string_view policy, std::initializer_list<std::string_view> known) {
    if (params.is_null()) return;
    if (!params.is_object()) throw std::invalid_argument(std::string(policy) + ": parameters must be an object");
    for (const auto& [key, _] : params.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) throw std::invalid_argument(std::string(policy) + ": unknown parameter '" + key + "'");
    }
}

template <typename T>
T value_or(const json& params, const char* key, T fallback) {
    if (params.is_null() || !params.contains(key)) return fallback;
    return params.at(key).get<T>();
}

}  // namespace

const std::vector<std::string>& policy_names() {
    static const std::vector<std::string> names = {"wiql", "opt", "ab", "fu", "greedy", "random", "myopic"};
    return names;
}

IndexParams index_params_from_json(const json& j) {
    reject_unknown(j, "index", {"criterion", "gamma", "tol", "max_iters", "eps", "lambda_bound", "scan_points"});
    IndexParams p;
    const auto criterion = value_or<std::string>(j, "criterion", "average");
    if (criterion == "average") {
        p.criterion = Criterion::average();
    } else if (criterion == "discounted") {
        p.criterion = Criterion::discounted(value_or(j, "gamma", 0.99));
    } else {
        throw std::invalid_argument("index: criterion must be 'average' or 'discounted'");
    }
    p.tol = value_or(j, "tol", p.tol);
    p.max_iters = value_or(j, "max_iters", p.max_iters);
    p.eps = value_or(j, "eps", p.eps);
    p.scan_points = value_or(j, "scan_points", p.scan_points);
    if (!j.is_null() && j.contains("lambda_bound")) p.lambda_bound = j.at("lambda_bound").get<double>();
    return p;
}

PolicyFactory policy_factory(std::string_view name, const json& params, const RmabInstance& instance) {
    try {
        if (name == "wiql") {
            reject_unknown(params, name, {"gamma"});
            WiqlParams p;
            p.gamma = value_or(params, "gamma", p.gamma);
            return [p](const RmabInstance& inst) { return std::make_unique<WiqlPolicy>(inst, p); };
        }
        if (name == "opt") {
            auto prototype = std::make_shared<const OptPolicy>(instance, index_params_from_json(params));
            return [prototype](const RmabInstance&) { return std::make_unique<OptPolicy>(*prototype); };
        }
        if (name == "ab") {
            reject_unknown(params, name, {"beta_scale"});
            AbParams p;
            p.beta_scale = value_or(params, "beta_scale", p.beta_scale);
            return [p](const RmabInstance& inst) { return std::make_unique<AbPolicy>(inst, p); };
        }
        if (name == "fu") {
            reject_unknown(params, name, {"lambdas", "gamma"});
            FuParams p;
            p.lambdas = value_or(params, "lambdas", p.lambdas);
            p.gamma = value_or(params, "gamma", p.gamma);
            if (p.lambdas.empty()) throw std::invalid_argument("fu: subsidy grid must not be empty");
            return [p](const RmabInstance& inst) { return std::make_unique<FuPolicy>(inst, p); };
        }
        if (name == "greedy") {
            reject_unknown(params, name, {});
            return [](const RmabInstance& inst) { return std::make_unique<GreedyPolicy>(inst); };
        }
        if (name == "random") {
            reject_unknown(params, name, {});
            return [](const RmabInstance& inst) { return std::make_unique<RandomPolicy>(inst); };
        }
        if (name == "myopic") {
            reject_unknown(params, name, {});
            return [](const RmabInstance& inst) { return std::make_unique<MyopicPolicy>(inst); };
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string(name) + ": " + e.what());
    }
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

std::unique_ptr<Policy> make_policy(std::string_view name, const json& params, const RmabInstance& instance) {
    return policy_factory(name, params, instance)(instance);
}

}  // namespace rmab
