#include "rmab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "rmab/instances.hpp"
#include "rmab/policy_factory.hpp"
#include "rmab/sim.hpp"
#include "rmab/whittle.hpp"

namespace rmab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::size_t positive(const json& j, const char* key) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) throw UsageError(std::string(key) + " must be an integer");
    const auto v = j.get<long long>();
    if (v < 1) throw UsageError(std::string(key) + " must be >= 1");
    return static_cast<std::size_t>(v);
}

bool known_generator(const std::string& name) {
    const auto& g = generators();
    return std::any_of(g.begin(), g.end(), [&](const GeneratorInfo& i) { return i.name == name; });
}

bool known_policy(const std::string& name) {
    const auto& p = policy_names();
    return std::find(p.begin(), p.end(), name) != p.end();
}

void check_names(const ExperimentConfig& c) {
    if (!c.instance_file && !known_generator(c.generator))
        throw UsageError("unknown instance generator '" + c.generator + "'");
    for (const auto& p : c.policies)
        if (!known_policy(p.name)) throw UsageError("unknown policy '" + p.name + "'");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

json ExperimentConfig::to_json() const {
    json inst;
    if (instance_file) {
        inst = {{"file", instance_file->string()}};
    } else {
        inst = {{"generator", generator}, {"params", generator_params}};
    }
    inst["name"] = instance_name;
    json pol = json::object();
    for (const auto& p : policies) pol[p.name] = p.params;
    json doc = {{"instance", inst}, {"policies", pol},  {"T", steps},         {"trials", n_trials},
                {"seed", base_seed}, {"out", out_dir.string()}, {"window", window}, {"index", index_params}};
    doc["budget"] = budget ? json(*budget) : json(nullptr);
    return doc;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw UsageError("config must be a JSON object");
    static const std::vector<std::string> keys = {"instance", "policies", "T",      "trials",
                                                  "seed",     "budget",   "out",    "window", "index"};
    for (const auto& [key, _] : doc.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw UsageError("unknown config key '" + key + "'");

    ExperimentConfig c;
    try {
        if (doc.contains("instance")) {
            const auto& inst = doc.at("instance");
            if (inst.is_string()) {
                c.generator = inst.get<std::string>();
            } else if (inst.is_object()) {
                for (const auto& [key, _] : inst.items())
                    if (key != "generator" && key != "params" && key != "file" && key != "name")
                        throw UsageError("unknown instance key '" + key + "'");
                if (inst.contains("file") == inst.contains("generator"))
                    throw UsageError("instance needs exactly one of 'generator' or 'file'");
                if (inst.contains("file")) c.instance_file = inst.at("file").get<std::string>();
                if (inst.contains("generator")) c.generator = inst.at("generator").get<std::string>();
                if (inst.contains("params")) c.generator_params = inst.at("params");
                if (inst.contains("name")) c.instance_name = inst.at("name").get<std::string>();
            } else {
                throw UsageError("instance must be a name or an object");
            }
        }
        if (doc.contains("policies")) {
            const auto& pol = doc.at("policies");
            if (pol.is_array()) {
                for (const auto& p : pol) c.policies.push_back({p.get<std::string>(), json::object()});
            } else if (pol.is_object()) {
                for (const auto& [name, params] : pol.items())
                    c.policies.push_back({name, params.is_null() ? json::object() : params});
            } else {
                throw UsageError("policies must be an array of names or an object keyed by name");
            }
        }
        if (doc.contains("T")) c.steps = positive(doc.at("T"), "T");
        if (doc.contains("trials")) c.n_trials = positive(doc.at("trials"), "trials");
        if (doc.contains("seed")) c.base_seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("budget") && !doc.at("budget").is_null()) c.budget = positive(doc.at("budget"), "budget");
        if (doc.contains("out")) c.out_dir = doc.at("out").get<std::string>();
        if (doc.contains("window")) c.window = positive(doc.at("window"), "window");
        if (doc.contains("index")) c.index_params = doc.at("index");
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (c.instance_name.empty()) c.instance_name = c.instance_file ? c.instance_file->stem().string() : c.generator;
    if (c.instance_file || !c.generator.empty()) check_names(c);
    return c;
}

RmabInstance build_instance(const ExperimentConfig& config) {
    RmabInstance instance;
    if (config.instance_file) {
        instance = load_instance(*config.instance_file);
    } else {
        if (config.generator.empty()) throw UsageError("no instance configured");
        try {
            instance = make_instance(config.generator, config.generator_params);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (config.budget) {
        if (*config.budget > instance.n_arms())
            throw UsageError("budget " + std::to_string(*config.budget) + " exceeds the number of arms (" +
                             std::to_string(instance.n_arms()) + ")");
        instance.budget = *config.budget;
    }
    ensure_valid(instance);
    return instance;
}

std::vector<SummaryRow> compare_series(const std::vector<fs::path>& agg_files, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("window fraction must lie in (0, 1]");
    if (agg_files.empty()) throw UsageError("no aggregate files given");

    struct Series {
        std::vector<double> mean, se;
    };
    std::map<std::pair<std::string, std::string>, Series> series;
    std::vector<std::pair<std::string, std::string>> order;

    for (const auto& path : agg_files) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open " + path.string());
        std::string line;
        if (!std::getline(in, line) || line != "instance,policy,t,mean,stderr,moving_avg")
            throw UsageError(path.string() + ": not an aggregate CSV");
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
            if (cells.size() != 6) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
            const auto key = std::make_pair(cells[0], cells[1]);
            auto [it, inserted] = series.try_emplace(key);
            if (inserted) order.push_back(key);
            try {
                it->second.mean.push_back(std::stod(cells[3]));
                it->second.se.push_back(std::stod(cells[4]));
            } catch (const std::exception&) {
                throw UsageError(path.string() + ":" + std::to_string(lineno) + ": bad number");
            }
        }
    }

    std::vector<SummaryRow> rows;
    for (const auto& key : order) {
        const auto& s = series.at(key);
        const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(s.mean.size())));
        if (k == 0) throw UsageError("empty window for " + key.first + "/" + key.second);
        double sum = 0.0, var = 0.0;
        for (std::size_t i = s.mean.size() - k; i < s.mean.size(); ++i) {
            sum += s.mean[i];
            var += s.se[i] * s.se[i];
        }
        const double kd = static_cast<double>(k);
        rows.push_back({key.first, key.second, sum / kd, std::sqrt(var) / kd, k});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) { return a.mean > b.mean; });
    return rows;
}

std::size_t thread_cap_from_env() {
    const char* v = std::getenv("RMAB_THREADS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const auto n = std::strtoull(v, &end, 10);
    if (*end != '\0') throw UsageError("RMAB_THREADS must be a non-negative integer");
    return static_cast<std::size_t>(n);
}

namespace {

struct Overrides {
    std::string config_path;
    std::string instance;
    std::string instance_file;
    std::vector<std::string> policies;
    std::optional<std::size_t> steps, trials, budget, window;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ExperimentConfig resolve(const Overrides& o) {
    json doc = json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw UsageError("cannot open config " + o.config_path);
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw UsageError(o.config_path + ": " + e.what());
        }
    }
    auto c = parse_config(doc);
    if (!o.instance.empty() || !o.instance_file.empty()) {
        if (!o.instance.empty() && !o.instance_file.empty())
            throw UsageError("--instance and --instance-file are exclusive");
        c.instance_file.reset();
        c.generator.clear();
        c.generator_params = json::object();
        if (!o.instance.empty()) {
            c.generator = o.instance;
            c.instance_name = o.instance;
        } else {
            c.instance_file = o.instance_file;
            c.instance_name = fs::path(o.instance_file).stem().string();
        }
    }
    if (!o.policies.empty()) {
        std::vector<PolicySpec> chosen;
        for (const auto& name : o.policies) {
            auto it = std::find_if(c.policies.begin(), c.policies.end(), [&](const PolicySpec& p) { return p.name == name; });
            chosen.push_back(it != c.policies.end() ? *it : PolicySpec{name, json::object()});
        }
        c.policies = std::move(chosen);
    }
    if (o.steps) c.steps = *o.steps;
    if (o.trials) c.n_trials = *o.trials;
    if (o.seed) c.base_seed = *o.seed;
    if (o.budget) c.budget = *o.budget;
    if (o.window) c.window = *o.window;
    if (!o.out.empty()) c.out_dir = o.out;
    if (c.steps < 1 || c.n_trials < 1 || c.window < 1 || (c.budget && *c.budget < 1))
        throw UsageError("T, trials, window and budget must be >= 1");
    check_names(c);
    return c;
}

int cmd_index(const ExperimentConfig& c, bool write_file, std::ostream& out, std::ostream& err) {
    const auto instance = build_instance(c);
    IndexParams params;
    try {
        params = index_params_from_json(c.index_params);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }

    std::ostringstream csv;
    csv << "arm,state,lambda_star\n";
    std::vector<std::pair<const ArmMdp*, IndexTable>> cache;
    for (std::size_t i = 0; i < instance.n_arms(); ++i) {
        const auto& arm = instance.arms[i];
        auto hit = std::find_if(cache.begin(), cache.end(), [&](const auto& e) { return *e.first == arm; });
        if (hit == cache.end()) {
            try {
                cache.emplace_back(&arm, index_table(arm, params));
            } catch (const IndexError& e) {
                err << "error: arm " << i << ": " << e.what() << "\n";
                return 3;
            }
            hit = cache.end() - 1;
        }
        for (std::size_t s = 0; s < arm.n_states; ++s) csv << i << ',' << s << ',' << format_number(hit->second[s]) << '\n';
    }
    out << csv.str();
    if (write_file) {
        fs::create_directories(c.out_dir);
        write_text(c.out_dir / (c.instance_name + "_index.csv"), csv.str());
    }
    return 0;
}

int cmd_run(const ExperimentConfig& c, std::ostream& out) {
    if (c.policies.empty()) throw UsageError("no policies configured");
    const auto instance = build_instance(c);
    const auto threads = thread_cap_from_env();

    std::vector<PolicyFactory> factories;
    for (const auto& p : c.policies) {
        try {
            factories.push_back(policy_factory(p.name, p.params, instance));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }

    fs::create_directories(c.out_dir);
    json runs = json::array();
    json seeds = json::array();
    for (std::size_t k = 0; k < c.n_trials; ++k) seeds.push_back(c.base_seed + k);

    for (std::size_t p = 0; p < c.policies.size(); ++p) {
        const auto& name = c.policies[p].name;
        const auto logs = run_trials(instance, factories[p], c.steps, c.n_trials, c.base_seed, threads);
        const auto series = aggregate(logs, c.window);

        const auto stem = c.instance_name + "_" + name;
        std::ostringstream raw, agg;
        write_raw_csv(raw, c.instance_name, name, logs);
        write_aggregate_csv(agg, c.instance_name, name, series);
        write_text(c.out_dir / (stem + "_raw.csv"), raw.str());
        write_text(c.out_dir / (stem + "_agg.csv"), agg.str());
        runs.push_back({{"policy", name},
                        {"params", c.policies[p].params},
                        {"raw", stem + "_raw.csv"},
                        {"agg", stem + "_agg.csv"}});

        const std::size_t tail = std::max<std::size_t>(1, c.steps / 5);
        double tail_mean = 0.0;
        for (std::size_t t = c.steps - tail; t < c.steps; ++t) tail_mean += series.mean[t];
        out << std::left << std::setw(8) << name << " final-20% mean " << format_number(tail_mean / static_cast<double>(tail))
            << "\n";
    }

    json manifest = {{"version", kVersion},
                     {"config", c.to_json()},
                     {"instance", rmab::to_json(instance)},
                     {"seeds", seeds},
                     {"runs", runs}};
    write_text(c.out_dir / (c.instance_name + "_manifest.json"), manifest.dump(2) + "\n");
    return 0;
}

int cmd_list(std::ostream& out) {
    out << "instances:\n";
    for (const auto& g : generators()) out << "  " << std::left << std::setw(20) << g.name << g.description << "\n";
    out << "policies:\n ";
    for (const auto& p : policy_names()) out << ' ' << p;
    out << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& files, double fraction, std::ostream& out) {
    std::vector<fs::path> paths(files.begin(), files.end());
    const auto rows = compare_series(paths, fraction);
    out << std::left << std::setw(20) << "instance" << std::setw(10) << "policy" << std::right << std::setw(14) << "mean"
        << std::setw(14) << "stderr" << std::setw(8) << "steps" << "\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(20) << r.instance << std::setw(10) << r.policy << std::right << std::fixed
            << std::setprecision(6) << std::setw(14) << r.mean << std::setw(14) << r.std_error << std::setw(8)
            << r.window_steps << "\n";
    }
    out << std::defaultfloat;
    return 0;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config");
    cmd->add_option("--instance", o.instance, "generator name (overrides config)");
    cmd->add_option("--instance-file", o.instance_file, "instance JSON file (overrides config)");
    cmd->add_option("--budget", o.budget, "number of arms activated per step");
    cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Whittle-index restless bandits: index tables, simulations, comparisons"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Overrides o;
    bool index_to_file = false;
    auto* index = app.add_subcommand("index", "print per-arm Whittle index tables as CSV");
    add_common(index, o);
    index->add_flag("--write", index_to_file, "also write <out>/<instance>_index.csv");

    auto* run = app.add_subcommand("run", "simulate policies and write raw/aggregate CSVs plus a manifest");
    add_common(run, o);
    run->add_option("--policy", o.policies, "policy names (overrides config)");
    run->add_option("--T", o.steps, "steps per trial");
    run->add_option("--trials", o.trials, "number of trials");
    run->add_option("--seed", o.seed, "base seed; trial k uses seed + k");
    run->add_option("--window", o.window, "moving-average window");

    std::vector<std::string> agg_files;
    double fraction = 0.2;
    auto* compare = app.add_subcommand("compare", "summarize aggregate CSVs over their final window");
    compare->add_option("files", agg_files, "aggregate CSV files")->required();
    compare->add_option("--window", fraction, "final fraction of steps to average");

    auto* list = app.add_subcommand("list-instances", "list instance generators and policies");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*list) return cmd_list(out);
        if (*compare) return cmd_compare(agg_files, fraction, out);
        const auto config = resolve(o);
        if (*index) return cmd_index(config, index_to_file, out, err);
        return cmd_run(config, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ModelError& e) {
        err << "invalid instance: " << e.what() << "\n";
        return 2;
    } catch (const InstanceFormatError& e) {
        err << "invalid instance file: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rmab::cli
