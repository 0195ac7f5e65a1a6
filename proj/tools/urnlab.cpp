// Command-line front end: moment and variance tables, profile sampling,
// plug-in estimates from saved profiles, and the seeded verification
// experiments. Exit code 0 means success, 1 a failed verification verdict,
// 2 a usage or model error.
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "urnlab/estimators.hpp"
#include "urnlab/harness.hpp"
#include "urnlab/models.hpp"
#include "urnlab/moments.hpp"
#include "urnlab/sampler.hpp"
#include "urnlab/serialize.hpp"

using namespace urnlab;

namespace {

constexpr const char* kModelGrammar =
    "model grammar: uniform:k=K | zipf:s=S | geom:q=Q | sqrtgeom:q=Q | "
    "fastvar | explicit:@FILE";

struct RunConfig {
    std::string config_path;
    bool delta_from_config = false;
    std::string model;
    uint64_t n = 0;
    double t = 0.0;
    bool poisson = false;
    double epsilon = 1e-9;
    double delta = 0.05;
    uint64_t replicates = 10000;
    uint64_t seed = 0;
    std::vector<double> s_grid;
    std::vector<uint64_t> n_grid;
    std::string out;
    std::string format = "csv";
    int rmax = 5;
    int jobs = 0;
    double tau = 2.0;
    double q = 0.05;
};

void apply_config_file(const std::string& path, RunConfig& cfg) {
    const auto j = nlohmann::json::parse(read_file(path));
    if (!j.is_object()) throw std::invalid_argument("config file must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "model") cfg.model = value.get<std::string>();
        else if (key == "n") cfg.n = value.get<uint64_t>();
        else if (key == "t") cfg.t = value.get<double>();
        else if (key == "poisson") cfg.poisson = value.get<bool>();
        else if (key == "epsilon") cfg.epsilon = value.get<double>();
        else if (key == "delta") { cfg.delta = value.get<double>(); cfg.delta_from_config = true; }
        else if (key == "replicates") cfg.replicates = value.get<uint64_t>();
        else if (key == "seed") cfg.seed = value.get<uint64_t>();
        else if (key == "s-grid") cfg.s_grid = value.get<std::vector<double>>();
        else if (key == "n-grid") cfg.n_grid = value.get<std::vector<uint64_t>>();
        else if (key == "out") cfg.out = value.get<std::string>();
        else if (key == "format") cfg.format = value.get<std::string>();
        else if (key == "rmax") cfg.rmax = value.get<int>();
        else if (key == "jobs") cfg.jobs = value.get<int>();
        else if (key == "tau") cfg.tau = value.get<double>();
        else if (key == "q") cfg.q = value.get<double>();
        else throw std::invalid_argument("unknown config key: " + key);
    }
}

// the config file must be applied before CLI11 parses, so flags can override it
void preload_config(int argc, char** argv, RunConfig& cfg) {
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            apply_config_file(argv[i + 1], cfg);
            return;
        }
        if (arg.rfind("--config=", 0) == 0) {
            apply_config_file(arg.substr(9), cfg);
            return;
        }
    }
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file(cfg.out, text);
}

std::pair<Setting, double> resolve_setting(const RunConfig& cfg) {
    const bool has_n = cfg.n > 0;
    const bool has_t = cfg.t > 0.0;
    if (cfg.poisson || (has_t && !has_n)) {
        if (!has_t) throw std::invalid_argument("the poisson setting needs --t > 0");
        return {Setting::poisson, cfg.t};
    }
    if (has_n && has_t)
        throw std::invalid_argument("give either --n or --t, not both");
    if (!has_n) throw std::invalid_argument("give a sample size --n or a rate --t");
    return {Setting::binomial, static_cast<double>(cfg.n)};
}

int cmd_moments(const RunConfig& cfg) {
    auto model = parse_model(cfg.model);
    auto [st, nt] = resolve_setting(cfg);
    auto mrep = build_moment_report(*model, st, nt, cfg.rmax, cfg.epsilon);
    auto vrep = build_variance_report(*model, nt, cfg.epsilon);

    std::string text;
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["report"] = "moments+variances";
        j["seed"] = cfg.seed;
        j["moments"] = nlohmann::ordered_json::parse(moment_report_json(mrep));
        j["variances"] = nlohmann::ordered_json::parse(variance_report_json(vrep));
        text = j.dump(2) + "\n";
    } else {
        text = "# seed=" + std::to_string(cfg.seed) + "\n" + moment_report_csv(mrep) +
               variance_report_csv(vrep);
    }
    emit(cfg, text);
    return 0;
}

int cmd_sample(const RunConfig& cfg) {
    auto model = parse_model(cfg.model);
    auto [st, nt] = resolve_setting(cfg);
    SamplerTable table(model);
    SampleWorkspace ws(table);
    xoshiro256pp rng(derive_seed(cfg.seed, 0));
    run_replicate(table, ws, st, nt, rng);
    auto prof = ws.to_profile(st, st == Setting::poisson ? nt : 0.0);

    std::string text;
    if (cfg.format == "json") {
        auto j = nlohmann::ordered_json::parse(profile_to_json(prof));
        j["seed"] = cfg.seed;
        text = j.dump() + "\n";
    } else {
        text = "# seed=" + std::to_string(cfg.seed) + "\n" + profile_to_csv(prof);
    }
    emit(cfg, text);
    return 0;
}

int cmd_estimate(const RunConfig& cfg, const std::string& profile_path,
                 bool want_ci, bool delta_given) {
    auto prof = profile_from_text(read_file(profile_path));
    if (cfg.t > 0.0) {
        if (!(cfg.t > 0.0)) throw std::invalid_argument("--t must be positive");
        prof.setting = Setting::poisson;
        prof.t = cfg.t;
    }
    if (want_ci && !delta_given)
        throw std::invalid_argument("--ci needs an explicit --delta");
    if (want_ci && prof.setting != Setting::poisson)
        throw std::invalid_argument("the interval needs a poisson profile; give --t");

    std::string params = "tau=" + format_g17(cfg.tau) + ";delta=" +
                         (want_ci ? format_g17(cfg.delta) : std::string("none"));
    std::string digest = inputs_digest(prof, params);

    std::vector<std::pair<int, double>> gt;
    for (int r = 0; r <= 3; ++r) gt.push_back({r, good_turing(prof, r)});

    std::vector<std::pair<int, std::optional<double>>> alphas;
    for (int r = 1; r <= 3; ++r) alphas.push_back({r, alpha_hat(prof, r)});

    // the doubling forecasts reuse the r = 1 index estimate where the power
    // formulas are defined
    std::vector<std::pair<int, std::optional<double>>> species;
    auto a1 = alphas[0].second;
    for (int r = 0; r <= 2; ++r) {
        std::optional<double> value;
        if (a1 && *a1 > 0.0) {
            try {
                value = species_estimate(prof, cfg.tau, *a1, r, GrowthRegime::power);
            } catch (const std::domain_error&) {
            }
        }
        species.push_back({r, value});
    }

    std::optional<EstimateWithCI> ci;
    if (want_ci) ci = gt_ci_poisson(prof, cfg.delta);

    std::string text;
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["report"] = "estimates";
        j["setting"] = prof.setting == Setting::poisson ? "poisson" : "binomial";
        j["n"] = prof.n;
        if (prof.setting == Setting::poisson) j["t"] = prof.t;
        j["inputs_digest"] = digest;
        j["good_turing"] = nlohmann::ordered_json::array();
        for (const auto& [r, value] : gt)
            j["good_turing"].push_back({{"r", r}, {"value", value}});
        j["alpha_hat"] = nlohmann::ordered_json::array();
        for (const auto& [r, value] : alphas)
            j["alpha_hat"].push_back(
                {{"r", r}, {"value", value ? nlohmann::ordered_json(*value)
                                           : nlohmann::ordered_json(nullptr)}});
        j["species_doubling"] = nlohmann::ordered_json::array();
        for (const auto& [r, value] : species)
            j["species_doubling"].push_back(
                {{"r", r},
                 {"tau", cfg.tau},
                 {"value", value ? nlohmann::ordered_json(*value)
                                 : nlohmann::ordered_json(nullptr)}});
        if (ci) {
            j["ci"] = {{"point", ci->point},           {"lower", ci->lower},
                       {"upper", ci->upper},           {"delta", ci->delta},
                       {"coverage_target", ci->coverage_target},
                       {"clipped", ci->clipped}};
        } else {
            j["ci"] = nullptr;
        }
        text = j.dump(2) + "\n";
    } else {
        text = "# report=estimates setting=";
        text += prof.setting == Setting::poisson ? "poisson" : "binomial";
        text += " n=" + std::to_string(prof.n);
        if (prof.setting == Setting::poisson) text += " t=" + format_g17(prof.t);
        text += " tau=" + format_g17(cfg.tau);
        text += " digest=" + digest + "\nquantity,r,value\n";
        for (const auto& [r, value] : gt)
            text += "good_turing," + std::to_string(r) + ',' + format_g17(value) + '\n';
        for (const auto& [r, value] : alphas)
            text += "alpha_hat," + std::to_string(r) + ',' +
                    (value ? format_g17(*value) : "") + '\n';
        for (const auto& [r, value] : species)
            text += "species," + std::to_string(r) + ',' +
                    (value ? format_g17(*value) : "") + '\n';
        if (ci) {
            text += "ci_point,," + format_g17(ci->point) + '\n';
            text += "ci_lower,," + format_g17(ci->lower) + '\n';
            text += "ci_upper,," + format_g17(ci->upper) + '\n';
            text += "ci_coverage_target,," + format_g17(ci->coverage_target) + '\n';
            text += std::string("ci_clipped,,") + (ci->clipped ? "1" : "0") + '\n';
        }
    }
    emit(cfg, text);
    return 0;
}

McReport run_experiment(const std::string& name, const RunConfig& cfg) {
    auto needs_model = [&] { return parse_model(cfg.model); };
    if (name == "replicates") {
        auto [st, nt] = resolve_setting(cfg);
        return run_replicates(needs_model(), st, nt, cfg.replicates, cfg.seed, cfg.jobs);
    }
    if (name == "tail-bounds") {
        auto [st, nt] = resolve_setting(cfg);
        return check_tail_bounds(needs_model(), st, nt, cfg.replicates, cfg.seed,
                                 cfg.s_grid, cfg.jobs);
    }
    if (name == "ci-coverage") {
        if (!(cfg.t > 0.0))
            throw std::invalid_argument("ci-coverage runs in the poisson setting; give --t");
        return check_ci_coverage(needs_model(), cfg.t, cfg.delta, cfg.replicates,
                                 cfg.seed, cfg.jobs);
    }
    if (name == "clt") {
        if (!(cfg.t > 0.0))
            throw std::invalid_argument("clt runs in the poisson setting; give --t");
        return check_clt(needs_model(), cfg.t, cfg.replicates, cfg.seed, cfg.jobs);
    }
    if (name == "lighttail") {
        auto grid = cfg.n_grid.empty() ? std::vector<uint64_t>{1000, 10000, 100000}
                                       : cfg.n_grid;
        return experiment_lighttail(cfg.q, grid, cfg.replicates, cfg.seed, cfg.jobs);
    }
    if (name == "asymptotics") {
        auto grid = cfg.n_grid.empty() ? std::vector<uint64_t>{10000, 100000, 1000000}
                                       : cfg.n_grid;
        return experiment_asymptotics(needs_model(), grid, cfg.seed, cfg.jobs);
    }
    if (name == "poissonization") {
        if (cfg.n == 0)
            throw std::invalid_argument("poissonization needs a sample size --n");
        return experiment_poissonization(needs_model(), cfg.n, cfg.replicates, cfg.seed,
                                         cfg.jobs);
    }
    throw std::invalid_argument("unknown experiment: " + name);
}

int cmd_experiment(const std::string& name, const RunConfig& cfg) {
    auto rep = run_experiment(name, cfg);
    emit(cfg, cfg.format == "json" ? mc_report_json(rep) : mc_report_csv(rep));
    return rep.all_pass() ? 0 : 1;
}

int cmd_verify_suite(const RunConfig& cfg) {
    auto results = acceptance_suite(cfg.seed, cfg.jobs);
    std::string text;
    bool all = true;
    for (const auto& cr : results) {
        char head[48];
        std::snprintf(head, sizeof head, "%s #%02d ", cr.pass ? "PASS" : "FAIL", cr.id);
        text += head + cr.name + ": " + cr.detail + "\n";
        all = all && cr.pass;
    }
    text += all ? "acceptance: all criteria passed\n"
                : "acceptance: some criteria failed\n";
    emit(cfg, text);
    return all ? 0 : 1;
}

std::string experiment_help() {
    std::string out = "experiments:\n";
    for (const auto& info : experiment_registry())
        out += "  " + info.name + " (" + info.ref + "): " + info.description + "\n";
    return out;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--config", cfg.config_path, "JSON config file mirroring the flags");
    sub->add_option("--seed", cfg.seed, "master seed recorded in the output")
        ->envname("URNLAB_SEED")
        ->capture_default_str();
    sub->add_option("--jobs,-j", cfg.jobs, "worker threads, 0 = all cores")
        ->capture_default_str();
    sub->add_option("--out,-o", cfg.out, "output path, default stdout");
    sub->add_option("--format,-f", cfg.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_option("--epsilon", cfg.epsilon, "certified tolerance for series tails")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    try {
        preload_config(argc, argv, cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    CLI::App app{"infinite occupancy toolkit: moments, bounds, estimators, experiments"};
    app.require_subcommand(1);
    app.footer(experiment_help());

    std::vector<std::string> names;
    for (const auto& info : experiment_registry()) names.push_back(info.name);

    auto* mom = app.add_subcommand("moments", "certified moment and variance tables");
    add_common(mom, cfg);
    mom->add_option("--model,-m", cfg.model, kModelGrammar);
    mom->add_option("--n", cfg.n, "fixed sample size (binomial setting)");
    mom->add_option("--t", cfg.t, "poisson rate");
    mom->add_flag("--poisson", cfg.poisson, "poissonized setting");
    mom->add_option("--rmax", cfg.rmax, "largest occupancy level reported")
        ->capture_default_str();

    auto* smp = app.add_subcommand("sample", "draw one occupancy profile");
    add_common(smp, cfg);
    smp->add_option("--model,-m", cfg.model, kModelGrammar);
    smp->add_option("--n", cfg.n, "fixed sample size (binomial setting)");
    smp->add_option("--t", cfg.t, "poisson rate");
    smp->add_flag("--poisson", cfg.poisson, "poissonized setting");

    auto* est = app.add_subcommand("estimate", "estimates from a saved profile");
    add_common(est, cfg);
    std::string profile_path;
    est->add_option("--profile,-p", profile_path, "profile file, JSON or CSV")
        ->required();
    est->add_option("--t", cfg.t, "treat the profile as poisson at this rate");
    bool want_ci = false;
    est->add_flag("--ci", want_ci, "missing-mass confidence interval");
    auto* est_delta = est->add_option("--delta", cfg.delta,
                                      "per-wall failure budget, interval level 1-4*delta");
    est->add_option("--tau", cfg.tau, "growth factor for the doubling forecast")
        ->capture_default_str();

    auto* ver = app.add_subcommand("verify", "acceptance suite or one experiment");
    add_common(ver, cfg);
    std::string suite, ver_exp;
    ver->add_option("--suite", suite, "named check suite")
        ->check(CLI::IsMember({"acceptance"}));
    ver->add_option("--experiment", ver_exp, "experiment name, see footer")
        ->check(CLI::IsMember(names));
    ver->add_option("--model,-m", cfg.model, kModelGrammar);
    ver->add_option("--n", cfg.n, "fixed sample size (binomial setting)");
    ver->add_option("--t", cfg.t, "poisson rate");
    ver->add_flag("--poisson", cfg.poisson, "poissonized setting");
    ver->add_option("--replicates,-R", cfg.replicates, "Monte Carlo replicates")
        ->capture_default_str();
    ver->add_option("--delta", cfg.delta, "per-wall failure budget")
        ->capture_default_str();
    ver->add_option("--s-grid", cfg.s_grid, "tail exponents for bound checks");
    ver->add_option("--n-grid", cfg.n_grid, "sample sizes for grid experiments");
    ver->add_option("--q", cfg.q, "geometric parameter for lighttail")
        ->capture_default_str();

    auto* exp = app.add_subcommand("experiment", "run one experiment by name");
    add_common(exp, cfg);
    std::string exp_name;
    exp->add_option("name", exp_name, "experiment name, see footer")
        ->required()
        ->check(CLI::IsMember(names));
    exp->add_option("--model,-m", cfg.model, kModelGrammar);
    exp->add_option("--n", cfg.n, "fixed sample size (binomial setting)");
    exp->add_option("--t", cfg.t, "poisson rate");
    exp->add_flag("--poisson", cfg.poisson, "poissonized setting");
    exp->add_option("--replicates,-R", cfg.replicates, "Monte Carlo replicates")
        ->capture_default_str();
    exp->add_option("--delta", cfg.delta, "per-wall failure budget")
        ->capture_default_str();
    exp->add_option("--s-grid", cfg.s_grid, "tail exponents for bound checks");
    exp->add_option("--n-grid", cfg.n_grid, "sample sizes for grid experiments");
    exp->add_option("--q", cfg.q, "geometric parameter for lighttail")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (mom->parsed()) return cmd_moments(cfg);
        if (smp->parsed()) return cmd_sample(cfg);
        if (est->parsed())
            return cmd_estimate(cfg, profile_path, want_ci,
                                est_delta->count() > 0 || cfg.delta_from_config);
        if (ver->parsed()) {
            if (suite.empty() == ver_exp.empty())
                throw std::invalid_argument("verify needs exactly one of --suite, --experiment");
            if (!suite.empty()) return cmd_verify_suite(cfg);
            return cmd_experiment(ver_exp, cfg);
        }
        if (exp->parsed()) return cmd_experiment(exp_name, cfg);
    } catch (const model_parse_error& e) {
        std::fprintf(stderr, "error: %s\n%s\n", e.what(), kModelGrammar);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
