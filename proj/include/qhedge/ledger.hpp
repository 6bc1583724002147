#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

namespace qhedge {

/// Per-path record of a hedge simulation. Step k holds the mark at t_k and
/// the residual earned over (t_k, t_{k+1}]:
///   U_k = delta_k * (S_{k+1} - S_k) - (f_{k+1} - f_k) - (e^{r h} - 1) * P_k,
/// i.e. the step P&L of the held position in excess of riskless growth of
/// the marked portfolio P_k = delta_k * S_k - f_k.
struct HedgeLedger {
    std::vector<double> t;
    std::vector<double> tau;
    std::vector<double> spot;
    std::vector<double> delta;
    std::vector<double> option;
    std::vector<double> portfolio;
    std::vector<double> residual;

    // engine-specific columns; empty when unused
    std::vector<double> vol_state;
    std::vector<double> vov_state;
    std::vector<double> b_holding;
    std::vector<double> c_holding;
    std::vector<double> spot2;
    std::vector<double> delta2;
    std::vector<int> jumps_count;

    double terminal_spot = 0.0;
    double terminal_option = 0.0;
    /// Residual of the final step: the gap between the portfolio carried
    /// into T and riskless growth of its last mark.
    double terminal_hedge_error = 0.0;
    /// Future value at T of all step residuals (replication error of the
    /// self-financing hedge).
    double cumulative_hedge_error = 0.0;

    std::size_t n_records() const { return residual.size(); }
};

struct StepMoments {
    double t = 0.0;
    double tau = 0.0;
    double residual_mean = 0.0;
    double residual_std = 0.0;
    double theory_mean = 0.0;  // psi(tau) (mu - r) S h, averaged over paths
    double theory_std = 0.0;   // psi(tau) sigma S sqrt(h), rms over paths
};

struct HedgeSummary {
    std::string model;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    double premium = 0.0;
    std::vector<StepMoments> steps;
    double terminal_error_mean = 0.0;
    double terminal_error_rms = 0.0;
    double terminal_abs_error_mean = 0.0;
    double cumulative_error_mean = 0.0;
    double cumulative_error_rms = 0.0;
    double max_abs_residual = 0.0;
    std::string oracle_check;  // optional JSON fragment from engine-level oracles

    std::string to_json() const;
};

/// CSV export, schema `path,step,t,tau,spot,delta,option,portfolio,residual`
/// plus any engine columns present on the first ledger.
void write_ledgers_csv(std::ostream& os, const std::vector<HedgeLedger>& ledgers,
                       std::size_t max_paths = 100);

}  // namespace qhedge
