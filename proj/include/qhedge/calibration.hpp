#pragma once

#include "qhedge/binomial.hpp"
#include "qhedge/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qhedge {

/// Ordered (date, close) observations; the calibration inputs.
struct PriceSeries {
    std::vector<std::string> dates;  // ISO, strictly increasing
    std::vector<double> close;       // > 0

    static PriceSeries from_csv(std::istream& is);
    void validate() const;
    /// Daily log returns.
    std::vector<double> log_returns() const;
};

struct PhEstimate {
    double p_hat;      // fraction of positive daily returns
    double mu_hat;     // annualized mean log return (x252)
    double sigma_hat;  // annualized std of log returns (x sqrt(252))
};

/// Sample up-probability and annualized log-return moments; requires >= 30
/// observations, non-degenerate direction and non-zero variance.
PhEstimate estimate_ph(const PriceSeries& series);

struct NormalFit {
    double mean;
    double std;
};

/// Maximum-likelihood normal fit (sample mean, biased-n std); >= 100 samples.
NormalFit fit_residual_normal(const std::vector<double>& residuals);

struct CalibOptions {
    double gamma_min = 0.0;
    double gamma_max = 10.0;
    double gamma_init = 0.0;
    double tol_gamma = 1e-3;
    int max_iter = 50;
    double damping = 0.5;
    double rate = 0.02;  // riskless rate, per year
    std::size_t n_paths = 20000;
    std::uint64_t seed = 1;
    unsigned n_threads = 0;
};

struct CalibIteration {
    double gamma_initial;
    double gamma_end;
    double fit_mean;  // residual-fit means averaged over the tau grid
    double fit_std;   // residual-fit stds, rms over the tau grid
};

struct CalibrationResult {
    double gamma = 0.0;
    bool converged = false;
    std::vector<CalibIteration> iterations;
    std::vector<double> tau_grid;
    std::vector<double> psi_at_grid;  // implied psi from the final iteration

    std::string to_json() const;
};

/// Fixed-point calibration of the intensity gamma: simulate the hedge of
/// `payoff` along bootstrap-resampled paths of `series`, fit a normal to the
/// per-step residuals, invert the residual-std relation to an implied psi
/// curve and refit the one-parameter exponential family; iterate with
/// damping until the intensity reproduces itself.
CalibrationResult calibrate_gamma(const PriceSeries& series, const PayoffSpec& payoff,
                                  const TimeGrid& grid, const CalibOptions& options = {});

/// Rectangular value grid over two labelled axes.
struct SurfaceGrid {
    std::string axis1_name = "moneyness";
    std::string axis2_name = "maturity_days";
    std::vector<double> axis1;
    std::vector<double> axis2;
    /// cells[i][j] pairs axis1[i] with axis2[j]; NaN marks a failed cell.
    std::vector<std::vector<double>> cells;
    std::vector<std::string> log;  // per-cell failures and soft-check notes
};

/// Calibrated gamma per (moneyness, maturity) call-option cell; moneyness is
/// spot over strike, maturities are in trading days with daily rebalancing.
/// Failed cells carry NaN and a log entry; the grid always completes.
SurfaceGrid gamma_surface(const PriceSeries& series, const std::vector<double>& moneyness,
                          const std::vector<double>& maturity_days,
                          const CalibOptions& options = {});

/// psi(tau; gamma) of the exponential family over a (gamma, tau-days) grid.
SurfaceGrid psi_surface(const std::vector<double>& gammas, const std::vector<double>& tau_days,
                        double horizon_years);

/// CSV export, schema `<axis1_name>,<axis2_name>,value`.
void write_surface_csv(std::ostream& os, const SurfaceGrid& grid);

}  // namespace qhedge
