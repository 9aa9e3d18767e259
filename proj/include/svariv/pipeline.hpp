#pragma once

#include "svariv/bootstrap.hpp"
#include "svariv/dataio.hpp"
#include "svariv/instrument.hpp"
#include "svariv/svar.hpp"
#include "svariv/var.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace svariv {

struct PretestDirective {
    std::string name;
    PretestKind kind = PretestKind::Relevance;
    std::string series;            // country,quarter,value
    bool fixed_effects = false;
    std::string cov = "hc0";       // hc0 | two_way
};

struct RunConfig {
    // inputs (absolute after from_json)
    std::string panel;
    SeriesSpec series;
    std::string series_path;       // empty when the series spec is inline
    std::string instrument;        // prebuilt proxy: country,quarter,m
    std::string vintages;          // or construct it from these three
    std::string realized;
    std::string exports;
    InstrumentOptions instrument_options;
    std::vector<PretestDirective> pretests;

    VarSpec var;
    std::vector<Scheme> schemes{Scheme::CK, Scheme::BP};
    FiscalNames names;
    std::string cov = "newey_west";  // hc0 | homoskedastic | newey_west | two_way
    int nw_lags = 3;
    bool cluster_correction = true;
    std::optional<Shares> shares;     // default: pooled sample shares

    int horizon = 20;
    std::vector<double> sweep_grid;
    bool bootstrap = true;
    BootstrapConfig boot;

    std::vector<int> lag_grid;
    std::vector<std::string> leave_out;   // dropped from every estimation
    bool leave_one_out = false;

    std::string output = "out";
    bool svg = true;

    // Accepts a run config or a run manifest (uses its embedded config).
    // Relative paths resolve against `base`.
    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base);
    static RunConfig load(const std::string& path);
    // Everything that determines the artifacts; omits the output directory and thread count.
    nlohmann::json to_json() const;
    void validate() const;   // Config error on missing files or bad values
};

enum Stage : unsigned {
    StageIngest = 1u << 0,
    StageInstrument = 1u << 1,
    StagePretest = 1u << 2,
    StageFit = 1u << 3,
    StageIdentify = 1u << 4,
    StageIrf = 1u << 5,
    StageMultiplier = 1u << 6,
    StageSweep = 1u << 7,
    StageBootstrap = 1u << 8,
    StageRobustness = 1u << 9,
    StageAll = (1u << 10) - 1,
};

struct RunResult {
    std::vector<std::string> artifacts;   // file names relative to the output directory
    std::string inputs_hash;
};

RunResult run(const RunConfig& config, unsigned stages = StageAll);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace svariv
