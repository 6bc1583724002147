#pragma once

#include "qhedge/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qhedge::detail {

/// Streaming per-step moment accumulator shared by the path simulators.
struct SimAccum {
    std::vector<double> sum_u, sum_u2, sum_tm, sum_ts2;
    double sum_term = 0.0, sum_term2 = 0.0, sum_abs_term = 0.0;
    double sum_cum = 0.0, sum_cum2 = 0.0;
    double max_abs_res = 0.0;
    std::vector<HedgeLedger> kept;

    explicit SimAccum(std::size_t n_steps = 0)
        : sum_u(n_steps, 0.0), sum_u2(n_steps, 0.0), sum_tm(n_steps, 0.0), sum_ts2(n_steps, 0.0) {}

    void add_step(std::size_t k, double u, double theory_mean, double theory_std) {
        sum_u[k] += u;
        sum_u2[k] += u * u;
        sum_tm[k] += theory_mean;
        sum_ts2[k] += theory_std * theory_std;
        max_abs_res = std::max(max_abs_res, std::abs(u));
    }

    void add_terminal(double last_u, double cumulative) {
        sum_term += last_u;
        sum_term2 += last_u * last_u;
        sum_abs_term += std::abs(last_u);
        sum_cum += cumulative;
        sum_cum2 += cumulative * cumulative;
    }

    void merge(SimAccum& other) {
        for (std::size_t k = 0; k < sum_u.size(); ++k) {
            sum_u[k] += other.sum_u[k];
            sum_u2[k] += other.sum_u2[k];
            sum_tm[k] += other.sum_tm[k];
            sum_ts2[k] += other.sum_ts2[k];
        }
        sum_term += other.sum_term;
        sum_term2 += other.sum_term2;
        sum_abs_term += other.sum_abs_term;
        sum_cum += other.sum_cum;
        sum_cum2 += other.sum_cum2;
        max_abs_res = std::max(max_abs_res, other.max_abs_res);
        for (auto& l : other.kept) kept.push_back(std::move(l));
    }

    void finalize(HedgeSummary& summary, std::size_t n_paths,
                  const std::vector<double>& times, const std::vector<double>& taus) const {
        double inv = 1.0 / static_cast<double>(n_paths);
        summary.n_paths = n_paths;
        summary.steps.resize(sum_u.size());
        for (std::size_t k = 0; k < sum_u.size(); ++k) {
            auto& s = summary.steps[k];
            s.t = times[k];
            s.tau = taus[k];
            s.residual_mean = sum_u[k] * inv;
            double var = std::max(0.0, sum_u2[k] * inv - s.residual_mean * s.residual_mean);
            s.residual_std = std::sqrt(var);
            s.theory_mean = sum_tm[k] * inv;
            s.theory_std = std::sqrt(sum_ts2[k] * inv);
        }
        summary.terminal_error_mean = sum_term * inv;
        summary.terminal_error_rms = std::sqrt(sum_term2 * inv);
        summary.terminal_abs_error_mean = sum_abs_term * inv;
        summary.cumulative_error_mean = sum_cum * inv;
        summary.cumulative_error_rms = std::sqrt(sum_cum2 * inv);
        summary.max_abs_residual = max_abs_res;
    }
};

}  // namespace qhedge::detail
