#pragma once

#include "qhedge/binomial.hpp"  // HedgeSimResult
#include "qhedge/core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

namespace qhedge {

/// Strictly increasing state map for the volatility / vol-of-vol factors.
struct StateFn {
    enum class Kind { Sqrt, Power, Log };
    Kind kind = Kind::Sqrt;
    double exponent = 0.5;  // Power only, in (0,1)

    static StateFn sqrt() { return {Kind::Sqrt, 0.5}; }
    static StateFn power(double a);
    static StateFn log();

    double operator()(double x) const;
};

/// Heston-style dynamics: dS = mu S dt + h(v) S dB, dv = alpha v dt + beta v dB^v.
struct SvModel {
    ParamSchedule drift;      // mu_t
    ParamSchedule vol_drift;  // alpha_t
    ParamSchedule vol_vol;    // beta_t
    ParamSchedule rate;       // r_t
    double rho;
    StateFn h_fn;
    double spot;
    double vol_state0;

    void validate() const;
};

/// Adds a third factor: dv = alpha v dt + g(w) v dB^v, dw = gamma w dt + delta w dB^w.
struct VovModel {
    ParamSchedule drift;       // mu_t
    ParamSchedule vol_drift;   // alpha_t
    ParamSchedule vov_drift;   // gamma_t
    ParamSchedule vov_vol;     // delta_t
    ParamSchedule rate;        // r_t
    double rho_v;              // corr(B, B^v)
    double rho_w;              // corr(B, B^w)
    double rho_vw;             // corr(B^v, B^w)
    StateFn h_fn;
    StateFn g_fn;
    double spot;
    double vol_state0;
    double vov_state0;

    void validate() const;
    std::array<std::array<double, 3>, 3> correlation() const;
};

struct Holdings2 {
    double a;  // shares of the asset
    double b;  // units of the volatility asset
};

struct Holdings3 {
    double a;
    double b;
    double c;  // units of the vol-of-vol asset
};

/// Optimal mean-variance holdings in (asset, volatility); infinite R gives
/// the instantaneously riskless pair (dC/dx, dC/dy).
Holdings2 sv_holdings(const SvModel& model, double dC_dx, double dC_dy, double spot,
                      double vol_state, const RiskAversion& risk_aversion, double t);

/// Printed closed form of the risk premium:
///   1/(2R(1-rho^2)) (mu/h(v)^2 + alpha/beta^2 - rho (mu+alpha)/(h(v) beta)).
double sv_risk_premium(const SvModel& model, double vol_state, const RiskAversion& risk_aversion,
                       double t);

/// Mean excess drift of the optimal portfolio over the riskless hedge,
/// derived from the first-order conditions; used by the simulator checks.
/// Coincides with sv_risk_premium when mu_t = alpha_t = 1.
double sv_tilt_drift(const SvModel& model, double vol_state, const RiskAversion& risk_aversion,
                     double t);

struct VovDeterminants {
    double d;    // correlation-matrix determinant
    double d_a;
    double d_b;
    double d_c;
};

struct VovDeterminantOptions {
    /// Restores the printed first entry (1 - C_t) mu_t / h(v_t) of the D_c
    /// column; the default drops the (1 - C_t) factor, matching D_a and D_b.
    bool literal_dc = false;
    double relative_risk_aversion = 0.0;  // C_t, literal form only
};

VovDeterminants vov_determinants(const VovModel& model, double vol_state, double vov_state,
                                 double t, const VovDeterminantOptions& options = {});

Holdings3 vov_holdings(const VovModel& model, double dC_dx, double dC_dy, double dC_dz,
                       double spot, double vol_state, double vov_state,
                       const RiskAversion& risk_aversion, double t);

/// Monte-Carlo pricing configuration; bumped and unbumped runs share the
/// same random streams.
struct McPriceModel {
    std::size_t n_paths = 20000;
    int n_steps = 64;
    std::uint64_t seed = 1;
    double bump_rel_spot = 0.01;
    double bump_rel_vol = 0.01;
    double bump_rel_vov = 0.01;
};

struct McPrice {
    double value;
    double d_spot;
    double d_vol;
    double d_vov;     // 0 for two-factor models
    double std_err;   // Monte-Carlo standard error of the value
};

McPrice mc_price_and_partials(const SvModel& model, const PayoffSpec& payoff,
                              const McPriceModel& pricing, double spot, double vol_state,
                              double t, double horizon);

McPrice mc_price_and_partials(const VovModel& model, const PayoffSpec& payoff,
                              const McPriceModel& pricing, double spot, double vol_state,
                              double vov_state, double t, double horizon);

/// Claim evaluators consumed by the hedge simulators.
struct ClaimEval2 {
    double value;
    double d_spot;
    double d_vol;
};
struct ClaimEval3 {
    double value;
    double d_spot;
    double d_vol;
    double d_vov;
};
using SvClaimFn = std::function<ClaimEval2(double spot, double vol_state, double t)>;
using VovClaimFn = std::function<ClaimEval3(double spot, double vol_state, double vov_state, double t)>;

/// MC-backed claim evaluators (common random numbers per evaluation point).
SvClaimFn make_mc_claim(const SvModel& model, const PayoffSpec& payoff,
                        const McPriceModel& pricing, double horizon);
VovClaimFn make_mc_claim(const VovModel& model, const PayoffSpec& payoff,
                         const McPriceModel& pricing, double horizon);

HedgeSimResult simulate_hedge_sv(const SvModel& model, const SvClaimFn& claim,
                                 const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed,
                                 std::size_t keep_ledgers = 100, unsigned n_threads = 0);

HedgeSimResult simulate_hedge_vov(const VovModel& model, const VovClaimFn& claim,
                                  const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                  std::size_t n_paths, std::uint64_t seed,
                                  std::size_t keep_ledgers = 100, unsigned n_threads = 0);

}  // namespace qhedge
