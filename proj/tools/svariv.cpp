#include "svariv/error.hpp"
#include "svariv/pipeline.hpp"
#include "svariv/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace svariv;

constexpr int kConfigError = 2;
constexpr int kEstimationError = 3;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string scheme;
    std::string lags;
    std::string leave_out;
    bool g7_only = false;
    std::string out;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Run config (JSON) or a previous run_manifest.json")->required();
    cmd->add_option("--seed", o.seed, "Bootstrap seed");
    cmd->add_option("--scheme", o.scheme, "bp, ck or both")->check(CLI::IsMember({"bp", "ck", "both"}));
    cmd->add_option("--lags", o.lags, "Lag order, or a robustness grid such as 2,4 or 1:4");
    cmd->add_option("--leave-out", o.leave_out, "Drop a country, or 'all' for leave-one-out variants");
    cmd->add_flag("--g7-only", o.g7_only, "Restrict instrument partners to the G7");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--threads", o.threads, "Bootstrap worker threads");
}

std::vector<int> parse_lags(const std::string& text) {
    std::vector<int> out;
    try {
        if (const auto colon = text.find(':'); colon != std::string::npos) {
            const int lo = std::stoi(text.substr(0, colon));
            const int hi = std::stoi(text.substr(colon + 1));
            for (int p = lo; p <= hi; ++p) out.push_back(p);
        } else {
            std::size_t pos = 0;
            while (pos <= text.size()) {
                const auto comma = text.find(',', pos);
                out.push_back(std::stoi(text.substr(pos, comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        }
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "cli", "cannot parse --lags '" + text + "'");
    }
    if (out.empty()) throw Error(ErrorKind::Config, "cli", "empty --lags");
    return out;
}

RunConfig configure(const Overrides& o) {
    RunConfig c = RunConfig::load(o.config);
    if (o.seed) c.boot.seed = *o.seed;
    if (o.scheme == "bp") c.schemes = {Scheme::BP};
    if (o.scheme == "ck") c.schemes = {Scheme::CK};
    if (o.scheme == "both") c.schemes = {Scheme::CK, Scheme::BP};
    if (!o.lags.empty()) {
        const auto lags = parse_lags(o.lags);
        if (lags.size() == 1 && o.lags.find_first_of(",:") == std::string::npos) c.var.lags = lags.front();
        else c.lag_grid = lags;
    }
    if (o.leave_out == "all") c.leave_one_out = true;
    else if (!o.leave_out.empty()) c.leave_out.push_back(o.leave_out);
    if (o.g7_only) c.instrument_options.g7_only = true;
    if (!o.out.empty()) c.output = std::filesystem::absolute(o.out).string();
    if (o.threads) c.boot.threads = *o.threads;
    return c;
}

int report(const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "] " << e.what() << '\n';
    return e.kind() == ErrorKind::Config ? kConfigError : kEstimationError;
}

struct SimulateOptions {
    std::string out = "synth";
    std::uint64_t seed = 1;
    int T = 200;
    int countries = 1;
    double f = 20.0;
    int draws = 499;
    int horizon = 20;
};

void simulate_command(const SimulateOptions& s) {
    DgpSpec spec = DgpSpec::desk_default(s.T, s.seed);
    spec.countries = s.countries;
    spec.gamma = instrument_strength_for_f(spec, s.f);
    const auto out = simulate(spec, s.horizon);
    write_synth_files(out, spec, s.out);

    nlohmann::json config = {
        {"data", {{"panel", "panel.csv"}, {"series", "series_spec.json"}, {"instrument", "instrument.csv"}}},
        {"pretests",
         {{{"name", "relevance"}, {"kind", "relevance"}, {"series", "fe_gdp.csv"}, {"fixed_effects", s.countries > 1},
           {"cov", s.countries > 1 ? "two_way" : "hc0"}},
          {{"name", "exogeneity"}, {"kind", "exogeneity"}, {"series", "fe_g.csv"}, {"fixed_effects", s.countries > 1},
           {"cov", s.countries > 1 ? "two_way" : "hc0"}}}},
        {"var", {{"endogenous", spec.names}, {"lags", static_cast<int>(spec.lags.size())}, {"fixed_effects", s.countries > 1}}},
        {"schemes", {"ck", "bp"}},
        {"identification", {{"cov", "newey_west"}, {"lags", 3}}},
        {"horizon", s.horizon},
        {"sweep", {{"from", -1.0}, {"to", 0.5}, {"step", 0.05}}},
        {"seed", s.seed},
        {"bootstrap", {{"enabled", true}, {"draws", s.draws}, {"pre_draws", 200}}},
        {"output", "out"},
    };
    std::ofstream f(std::filesystem::path(s.out) / "config.json");
    f << config.dump(2) << '\n';

    nlohmann::json truth = {{"a_g", spec.a_g}, {"a_r", spec.a_r}, {"b_gr", spec.b_gr}, {"gamma", spec.gamma},
                            {"multiplier", out.true_multipliers.values}};
    std::ofstream t(std::filesystem::path(s.out) / "truth.json");
    t << truth.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fiscal SVAR with an external instrument: estimation, identification, bootstrap bands"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        unsigned stages;
    };
    const Sub subs[] = {
        {"ingest", "Build the model dataset", StageIngest},
        {"instrument", "Construct the proxy series", StageInstrument},
        {"pretest", "Relevance and exogeneity pretests", StagePretest},
        {"fit", "Reduced-form VAR", StageFit},
        {"identify", "Output elasticities of the fiscal variables", StageIdentify},
        {"irf", "Impulse responses", StageIrf},
        {"multiplier", "Cumulative spending multipliers", StageMultiplier},
        {"sweep", "Impact multiplier over a grid of spending elasticities", StageSweep},
        {"bootstrap", "Moving-block bootstrap bands", StageIrf | StageMultiplier | StageSweep | StageBootstrap},
        {"run", "Full pipeline", StageAll},
    };

    Overrides overrides;
    unsigned stages = 0;
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, overrides);
        cmd->callback([&stages, st = s.stages] { stages = st; });
    }

    SimulateOptions sim;
    bool simulate_requested = false;
    auto* simcmd = app.add_subcommand("simulate", "Write a synthetic dataset and a ready-to-run config");
    simcmd->add_option("--out", sim.out, "Output directory");
    simcmd->add_option("--seed", sim.seed, "Simulation seed");
    simcmd->add_option("--T,--periods", sim.T, "Quarters per country")->check(CLI::PositiveNumber);
    simcmd->add_option("--countries", sim.countries, "Number of countries")->check(CLI::PositiveNumber);
    simcmd->add_option("--f", sim.f, "Target population first-stage F")->check(CLI::NonNegativeNumber);
    simcmd->add_option("--draws", sim.draws, "Bootstrap draws in the written config")->check(CLI::PositiveNumber);
    simcmd->add_option("--horizon", sim.horizon, "Horizon in quarters")->check(CLI::PositiveNumber);
    simcmd->callback([&] { simulate_requested = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (simulate_requested) {
            simulate_command(sim);
            std::cout << "wrote " << sim.out << '\n';
            return 0;
        }
        const RunConfig config = configure(overrides);
        const auto result = run(config, stages);
        for (const auto& f : result.artifacts) std::cout << (std::filesystem::path(config.output) / f).string() << '\n';
    } catch (const Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kEstimationError;
    }
    return 0;
}
