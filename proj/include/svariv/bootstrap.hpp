#pragma once

#include "svariv/dataio.hpp"
#include "svariv/instrument.hpp"
#include "svariv/svar.hpp"
#include "svariv/var.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace svariv {

struct BootstrapConfig {
    int draws = 1000;
    std::optional<int> block_length;   // default: ceil(5.03 * T^{1/4}) per country
    double level = 0.68;
    std::uint64_t seed = 1;
    bool bias_correction = true;
    bool correct_each_draw = true;     // reuse the first-stage bias on every draw
    int pre_draws = 200;               // draws used to estimate the bias
    bool hold_a_g = false;             // keep the point a_g in every draw (CK only)
    bool allow_unstable = true;        // propagate explosive draws instead of dropping them
    int threads = 1;
    double max_failure_share = 0.10;

    void validate() const;
};

int default_block_length(int T);

// Generator for draw `index` of a run seeded with `seed`; independent of how
// draws are scheduled across threads.
std::mt19937_64 draw_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Moving-block resample of a T x (n+1) array whose last column is the proxy.
// Residual columns are centered by the block-position means; the proxy column
// moves with its row.
Eigen::MatrixXd mbb_draw(const Eigen::MatrixXd& joint, int block_length, std::mt19937_64& rng);

// Panel version: blocks never cross country boundaries (rows of a country are contiguous).
Eigen::MatrixXd mbb_draw_panel(const Eigen::MatrixXd& joint, const std::vector<int>& row_country,
                               std::optional<int> block_length, std::mt19937_64& rng);

// Rebuilds the endogenous block recursively from the first observed rows,
// the estimate's coefficients and intercepts, and the supplied residuals.
ModelDataset regenerate(const ModelDataset& data, const VarEstimate& est, const Eigen::MatrixXd& residuals);

struct KilianCorrection {
    Eigen::MatrixXd coefficients;    // corrected slopes (only the lag rows change)
    Eigen::MatrixXd bias;            // estimated bias of the lag rows, same layout as coefficients
    double delta = 1.0;              // share of the correction applied
    double radius_before = 0.0;
    double radius_after = 0.0;
    bool applied = false;
};

// Applies a given bias estimate with the stationarity guard: no correction if
// the estimate is already nonstationary; otherwise halve the step until the
// corrected companion radius is below one.
KilianCorrection apply_bias(const VarEstimate& est, const Eigen::MatrixXd& bias);

KilianCorrection kilian_correct(const ModelDataset& data, const VarEstimate& est, int pre_draws,
                                std::optional<int> block_length, std::uint64_t seed);

std::pair<double, double> efron_percentile(std::vector<double> draws, double level);

struct BootstrapBands {
    std::vector<std::string> statistics;
    std::vector<double> point;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<int> valid;               // finite draws per statistic
    Eigen::MatrixXd archive;              // draws x statistics (NaN for dropped draws)
    double level = 0.68;
    int failed_draws = 0;

    int index(const std::string& statistic) const;
    // Recompute bands at another level from the same archive.
    BootstrapBands at_level(double level) const;
    void write_archive(std::ostream& out) const;
};

struct PipelineSpec {
    Scheme scheme = Scheme::CK;
    IdentifyOptions identify;
    Shares shares;
    int horizon = 20;
    std::vector<double> sweep_grid;
};

// Statistic names in archive order: a_g, a_r, b_gr, then irf:<shock>:<variable>:<h>,
// mult:<H>, sweep:<a_g>.
std::vector<std::string> statistic_names(const VarEstimate& est, const PipelineSpec& spec);
std::vector<double> compute_statistics(const VarEstimate& est, const std::vector<Eigen::MatrixXd>& lag_matrices,
                                       const Eigen::VectorXd& m_rows, const PipelineSpec& spec, bool allow_unstable);

BootstrapBands bootstrap_pipeline(const ModelDataset& data, const VarSpec& var_spec, const InstrumentSet& m,
                                  const PipelineSpec& spec, const BootstrapConfig& config);

}  // namespace svariv
