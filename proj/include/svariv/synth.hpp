#pragma once

#include "svariv/dataio.hpp"
#include "svariv/instrument.hpp"
#include "svariv/svar.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace svariv {

// Known-truth data-generating process. Reduced-form residuals follow the
// fiscal rule
//   u_gdp = theta_g e_g + theta_r e_r + e_y
//   u_g   = a_g u_gdp + e_g
//   u_r   = a_r u_gdp + b_gr e_g + e_r
//   u_k   = loading_k u_gdp + e_k          (variables beyond the first three)
// and the proxy is m = gamma e_y + sigma_nu nu.
struct DgpSpec {
    std::vector<std::string> names{"g", "r", "gdp"};
    std::vector<Eigen::MatrixXd> lags;   // true A_1..A_p
    double a_g = -0.4;
    double a_r = 1.5;
    double b_gr = -0.5;
    double theta_g = 0.3;
    double theta_r = -0.2;
    std::vector<double> loadings;        // one per extra variable
    double sigma_g = 0.01;
    double sigma_r = 0.01;
    double sigma_y = 0.01;
    std::vector<double> sigma_extra;
    double gamma = 0.0;
    double sigma_nu = 0.01;
    Shares shares{0.2, 0.4};             // nominal G/GDP and R/GDP around which levels fluctuate
    double log_gdp_level = 4.605170185988091;  // ln 100
    int countries = 1;
    double country_offset = 0.02;        // mean shift in logs between consecutive countries
    int T = 2000;
    int burn_in = 200;
    std::uint64_t seed = 1;
    bool student_t = false;
    double t_dof = 5.0;

    int n() const { return static_cast<int>(names.size()); }
    void validate() const;

    // Contemporaneous response matrix: column j is the reduced-form response to
    // one unit of structural shock j, ordered [e_g, e_r, e_y, e_extra...].
    Eigen::MatrixXd impact_matrix() const;
    Eigen::MatrixXd sigma_u() const;
    double var_u_gdp() const;

    // Default desk-scale spec: 3 variables, one lag, gamma set for a
    // population effective F of 20 at the given sample.
    static DgpSpec desk_default(int T = 2000, std::uint64_t seed = 1);
};

// gamma such that the population first-stage F at T*countries observations is
// target_f (F ~ N rho^2 / (1 - rho^2), rho = corr(m, u_gdp)).
double instrument_strength_for_f(const DgpSpec& spec, double target_f);

struct SynthOutput {
    ModelDataset data;
    InstrumentSet instrument;
    std::vector<Eigen::MatrixXd> structural_shocks;   // per country: T x n, columns as impact_matrix()
    std::vector<Eigen::MatrixXd> residuals;           // per country: T x n reduced form
    IrfSet true_irfs;
    MultiplierPath true_multipliers;
    bool degenerate = false;                          // every shock scale is zero
};

SynthOutput simulate(const DgpSpec& spec, int H = 20);

// Companion-power IRFs of the true impact vectors, in % of GDP with the same
// normalization as compute_irf (g shock: g = +1 on impact; r shock: r = -1).
IrfSet true_irf(const DgpSpec& spec, int H);

// Writes panel.csv (dataio long format), series_spec.json, instrument.csv and
// fe_gdp.csv / fe_g.csv (reduced-form innovations, usable as pretest inputs).
void write_synth_files(const SynthOutput& out, const DgpSpec& spec, const std::string& directory);

}  // namespace svariv
