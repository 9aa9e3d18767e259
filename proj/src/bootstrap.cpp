#include "svariv/bootstrap.hpp"

#include "svariv/csv.hpp"
#include "svariv/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace svariv {

namespace {

constexpr const char* kModule = "bootstrap";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<Eigen::MatrixXd> lag_matrices(const Eigen::MatrixXd& coefficients, int n, int p) {
    std::vector<Eigen::MatrixXd> A(p, Eigen::MatrixXd(n, n));
    for (int j = 0; j < p; ++j)
        for (int v = 0; v < n; ++v) A[j].col(v) = coefficients.row(j * n + v).transpose();
    return A;
}

int first_row(const VarSpec& spec) {
    return std::max(spec.lags, spec.exogenous.empty() ? 0 : spec.exogenous_lag_count());
}

// Contiguous [begin, end) row ranges per country.
std::vector<std::pair<int, int>> country_segments(const std::vector<int>& row_country) {
    std::vector<std::pair<int, int>> seg;
    const int N = static_cast<int>(row_country.size());
    int begin = 0;
    for (int i = 1; i <= N; ++i)
        if (i == N || row_country[i] != row_country[begin]) {
            seg.emplace_back(begin, i);
            begin = i;
        }
    return seg;
}

// Runs fn(i) for i in [0, count) on `threads` workers; results must be written by index.
template <class Fn>
void parallel_for(int count, int threads, Fn fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

void BootstrapConfig::validate() const {
    if (draws < 2) fail(ErrorKind::Config, "need at least 2 bootstrap draws");
    if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::Config, "coverage level must lie in (0, 1)");
    if (block_length && *block_length < 1) fail(ErrorKind::Config, "block length must be at least 1");
    if (pre_draws < 1 && bias_correction) fail(ErrorKind::Config, "bias correction needs at least one pre-draw");
    if (threads < 1) fail(ErrorKind::Config, "thread count must be at least 1");
}

int default_block_length(int T) {
    return static_cast<int>(std::ceil(5.03 * std::pow(static_cast<double>(T), 0.25)));
}

std::mt19937_64 draw_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream * 0x632BE59BD9B4E019ULL ^ splitmix64(index))));
}

Eigen::MatrixXd mbb_draw(const Eigen::MatrixXd& joint, int block_length, std::mt19937_64& rng) {
    const int T = static_cast<int>(joint.rows());
    const int l = block_length;
    if (l < 1 || l > T) fail(ErrorKind::Parameter, "block length " + std::to_string(l) + " outside [1, " + std::to_string(T) + "]");
    const Eigen::Index n = joint.cols() - 1;

    // Mean of the residuals at each within-block position over all T-l+1 blocks.
    const int starts = T - l + 1;
    Eigen::MatrixXd position_mean = Eigen::MatrixXd::Zero(l, n);
    for (int s = 0; s < l; ++s) {
        for (int r = 0; r < starts; ++r) position_mean.row(s) += joint.row(s + r).head(n);
        position_mean.row(s) /= static_cast<double>(starts);
    }

    std::uniform_int_distribution<int> pick(0, T - l);
    Eigen::MatrixXd out(T, joint.cols());
    for (int row = 0; row < T;) {
        const int start = pick(rng);
        for (int s = 0; s < l && row < T; ++s, ++row) {
            out.row(row) = joint.row(start + s);
            out.row(row).head(n) -= position_mean.row(s);
        }
    }
    return out;
}

Eigen::MatrixXd mbb_draw_panel(const Eigen::MatrixXd& joint, const std::vector<int>& row_country,
                               std::optional<int> block_length, std::mt19937_64& rng) {
    if (static_cast<Eigen::Index>(row_country.size()) != joint.rows())
        fail(ErrorKind::Parameter, "country labels do not cover all rows");
    Eigen::MatrixXd out(joint.rows(), joint.cols());
    for (const auto& [begin, end] : country_segments(row_country)) {
        const int T = end - begin;
        const int l = std::min(T, block_length ? *block_length : default_block_length(T));
        out.middleRows(begin, T) = mbb_draw(joint.middleRows(begin, T), l, rng);
    }
    return out;
}

ModelDataset regenerate(const ModelDataset& data, const VarEstimate& est, const Eigen::MatrixXd& residuals) {
    const auto& spec = est.spec;
    const int n = est.n;
    const int p = est.p;
    const int first = first_row(spec);
    std::vector<int> endo;
    std::vector<int> exo;
    for (const auto& name : spec.endogenous) endo.push_back(data.column(name));
    for (const auto& name : spec.exogenous) exo.push_back(data.column(name));
    if (residuals.rows() != est.design.rows() || residuals.cols() != n)
        fail(ErrorKind::Parameter, "residual matrix does not match the VAR design");
    if (data.countries.size() != est.design.countries.size())
        fail(ErrorKind::Parameter, "dataset does not match the estimate's countries");

    Quarter base = data.countries.front().start;
    for (const auto& c : data.countries) base = std::min(base, c.start);

    ModelDataset out = data;
    int row = 0;
    for (std::size_t ci = 0; ci < out.countries.size(); ++ci) {
        auto& c = out.countries[ci];
        for (int t = first; t < c.values.rows(); ++t, ++row) {
            Eigen::VectorXd y = est.intercepts.row(static_cast<Eigen::Index>(ci)).transpose() + residuals.row(row).transpose();
            for (int j = 1; j <= p; ++j) {
                Eigen::VectorXd lagged(n);
                for (int v = 0; v < n; ++v) lagged(v) = c.values(t - j, endo[v]);
                y.noalias() += est.A[j - 1] * lagged;
            }
            for (std::size_t j = 0; j < est.B.size(); ++j) {
                Eigen::VectorXd x(static_cast<Eigen::Index>(exo.size()));
                for (std::size_t v = 0; v < exo.size(); ++v) x(static_cast<Eigen::Index>(v)) = c.values(t - static_cast<int>(j), exo[v]);
                y.noalias() += est.B[j] * x;
            }
            if (spec.trend) y += est.trend * static_cast<double>((c.start + t) - base);
            for (int v = 0; v < n; ++v) c.values(t, endo[v]) = y(v);
        }
    }
    return out;
}

KilianCorrection apply_bias(const VarEstimate& est, const Eigen::MatrixXd& bias) {
    KilianCorrection k;
    k.bias = bias;
    k.coefficients = est.coefficients;
    k.radius_before = companion(est.A).spectral_radius;
    k.radius_after = k.radius_before;
    k.delta = 0.0;
    if (k.radius_before >= 1.0) return k;

    double delta = 1.0;
    for (int attempt = 0; attempt < 60; ++attempt, delta /= 2.0) {
        const Eigen::MatrixXd corrected = est.coefficients - delta * bias;
        const double radius = companion(lag_matrices(corrected, est.n, est.p)).spectral_radius;
        if (radius < 1.0) {
            k.coefficients = corrected;
            k.delta = delta;
            k.radius_after = radius;
            k.applied = true;
            return k;
        }
    }
    return k;
}

KilianCorrection kilian_correct(const ModelDataset& data, const VarEstimate& est, int pre_draws,
                                std::optional<int> block_length, std::uint64_t seed) {
    if (companion(est.A).spectral_radius >= 1.0) {
        KilianCorrection k;
        k.coefficients = est.coefficients;
        k.bias = Eigen::MatrixXd::Zero(est.coefficients.rows(), est.coefficients.cols());
        k.radius_before = k.radius_after = companion(est.A).spectral_radius;
        k.delta = 0.0;
        return k;
    }
    Eigen::MatrixXd joint(est.residuals.rows(), est.n + 1);
    joint << est.residuals, Eigen::VectorXd::Zero(est.residuals.rows());

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(est.coefficients.rows(), est.coefficients.cols());
    int used = 0;
    for (int i = 0; i < pre_draws; ++i) {
        auto rng = draw_rng(seed, 1, static_cast<std::uint64_t>(i));
        const Eigen::MatrixXd resampled = mbb_draw_panel(joint, est.design.row_country, block_length, rng);
        try {
            const auto star = fit_var(regenerate(data, est, resampled.leftCols(est.n)), est.spec);
            sum += star.coefficients;
            ++used;
        } catch (const Error&) {
        }
    }
    Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(sum.rows(), sum.cols());
    if (used > 0) {
        const int lag_rows = est.n * est.p;
        bias.topRows(lag_rows) = sum.topRows(lag_rows) / used - est.coefficients.topRows(lag_rows);
    }
    return apply_bias(est, bias);
}

std::pair<double, double> efron_percentile(std::vector<double> draws, double level) {
    draws.erase(std::remove_if(draws.begin(), draws.end(), [](double v) { return !std::isfinite(v); }), draws.end());
    if (draws.size() < 2) fail(ErrorKind::Parameter, "percentile interval needs at least two finite draws");
    if (!(level >= 0.0 && level < 1.0)) fail(ErrorKind::Parameter, "level must lie in [0, 1)");
    std::sort(draws.begin(), draws.end());
    const double last = static_cast<double>(draws.size() - 1);
    auto quantile = [&](double q) {
        const double pos = q * last;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, draws.size() - 1);
        return draws[lo] + (pos - static_cast<double>(lo)) * (draws[hi] - draws[lo]);
    };
    return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};
}

int BootstrapBands::index(const std::string& statistic) const {
    for (std::size_t i = 0; i < statistics.size(); ++i)
        if (statistics[i] == statistic) return static_cast<int>(i);
    fail(ErrorKind::Parameter, "no statistic '" + statistic + "'");
}

BootstrapBands BootstrapBands::at_level(double new_level) const {
    BootstrapBands out = *this;
    out.level = new_level;
    for (std::size_t s = 0; s < statistics.size(); ++s) {
        std::vector<double> col(archive.col(static_cast<Eigen::Index>(s)).data(),
                                archive.col(static_cast<Eigen::Index>(s)).data() + archive.rows());
        if (valid[s] >= 2) {
            std::tie(out.lower[s], out.upper[s]) = efron_percentile(std::move(col), new_level);
        } else {
            out.lower[s] = out.upper[s] = kNaN;
        }
    }
    return out;
}

void BootstrapBands::write_archive(std::ostream& out) const {
    out << "statistic,draw,value\n";
    for (std::size_t s = 0; s < statistics.size(); ++s)
        for (Eigen::Index b = 0; b < archive.rows(); ++b)
            out << statistics[s] << ',' << b << ',' << csv::fmt(archive(b, static_cast<Eigen::Index>(s))) << '\n';
}

std::vector<std::string> statistic_names(const VarEstimate& est, const PipelineSpec& spec) {
    std::vector<std::string> names{"a_g", "a_r", "b_gr"};
    auto variables = est.spec.endogenous;
    variables.push_back("bb");
    for (const auto& shock : {spec.identify.names.g, spec.identify.names.r})
        for (const auto& v : variables)
            for (int h = 0; h <= spec.horizon; ++h) names.push_back("irf:" + shock + ":" + v + ":" + std::to_string(h));
    for (int h = 0; h <= spec.horizon; ++h) names.push_back("mult:" + std::to_string(h));
    for (double a : spec.sweep_grid) names.push_back("sweep:" + csv::fmt(a));
    return names;
}

std::vector<double> compute_statistics(const VarEstimate& est, const std::vector<Eigen::MatrixXd>& lag_matrices,
                                       const Eigen::VectorXd& m_rows, const PipelineSpec& spec, bool allow_unstable) {
    const auto& names = spec.identify.names;
    const auto id = identify(est, m_rows, spec.scheme, spec.identify);
    IrfSet irf = compute_irf(lag_matrices, est.spec.endogenous, structural_impact(est, id.shocks.e_g, names.g),
                             spec.horizon, spec.shares, ShockKind::Spending, names, allow_unstable);
    irf.append(compute_irf(lag_matrices, est.spec.endogenous, structural_impact(est, id.shocks.e_r, names.r),
                           spec.horizon, spec.shares, ShockKind::Revenue, names, allow_unstable));

    std::vector<double> out{id.rule.a_g, id.rule.a_r, id.rule.b_gr};
    for (const auto& resp : irf.responses)
        for (Eigen::Index v = 0; v < resp.rows(); ++v)
            for (Eigen::Index h = 0; h < resp.cols(); ++h) out.push_back(resp(v, h));
    for (double m : cumulative_multiplier(irf, spec.horizon, names).values) out.push_back(m);
    for (double v : elasticity_sweep(est, spec.sweep_grid, spec.shares, names).values) out.push_back(v);
    return out;
}

BootstrapBands bootstrap_pipeline(const ModelDataset& data, const VarSpec& var_spec, const InstrumentSet& m,
                                  const PipelineSpec& spec, const BootstrapConfig& config) {
    config.validate();
    const VarEstimate est = fit_var(data, var_spec);
    const Eigen::VectorXd m_rows = align_instrument(est, m);

    BootstrapBands bands;
    bands.level = config.level;
    bands.statistics = statistic_names(est, spec);
    bands.point = compute_statistics(est, est.A, m_rows, spec, config.allow_unstable);
    const auto S = static_cast<Eigen::Index>(bands.statistics.size());

    PipelineSpec draw_spec = spec;
    draw_spec.identify.fwl_check = false;
    if (config.hold_a_g && spec.scheme == Scheme::CK) draw_spec.identify.fixed_a_g = bands.point[0];

    VarEstimate dgp = est;
    Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(est.coefficients.rows(), est.coefficients.cols());
    if (config.bias_correction) {
        const auto k = kilian_correct(data, est, config.pre_draws, config.block_length, config.seed);
        if (k.applied) dgp = with_slopes(est, k.coefficients);
        bias = k.bias;
    }

    Eigen::MatrixXd joint(est.residuals.rows(), est.n + 1);
    joint << est.residuals, m_rows;

    bands.archive = Eigen::MatrixXd::Constant(config.draws, S, kNaN);
    std::vector<char> failed(config.draws, 0);
    parallel_for(config.draws, config.threads, [&](int b) {
        auto rng = draw_rng(config.seed, 2, static_cast<std::uint64_t>(b));
        const Eigen::MatrixXd resampled = mbb_draw_panel(joint, est.design.row_country, config.block_length, rng);
        try {
            const auto star = fit_var(regenerate(data, dgp, resampled.leftCols(est.n)), var_spec);
            std::vector<Eigen::MatrixXd> lags = star.A;
            if (config.bias_correction && config.correct_each_draw) {
                const auto k = apply_bias(star, bias);
                lags = lag_matrices(k.coefficients, star.n, star.p);
            }
            const auto stats = compute_statistics(star, lags, resampled.col(est.n), draw_spec, config.allow_unstable);
            for (Eigen::Index s = 0; s < S; ++s) bands.archive(b, s) = stats[static_cast<std::size_t>(s)];
        } catch (const Error& e) {
            failed[b] = 1;
        }
    });

    for (char f : failed) bands.failed_draws += f;
    if (bands.failed_draws > config.max_failure_share * config.draws)
        fail(ErrorKind::Identification, std::to_string(bands.failed_draws) + " of " + std::to_string(config.draws) +
                                            " bootstrap draws failed (limit " +
                                            std::to_string(static_cast<int>(config.max_failure_share * 100)) + "%)");

    bands.valid.assign(S, 0);
    bands.lower.assign(S, kNaN);
    bands.upper.assign(S, kNaN);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index b = 0; b < bands.archive.rows(); ++b)
            if (std::isfinite(bands.archive(b, s))) ++bands.valid[s];
    return bands.at_level(config.level);
}

}  // namespace svariv
