#pragma once

#include "qhedge/binomial.hpp"  // HedgeSimResult
#include "qhedge/core.hpp"
#include "qhedge/multifactor.hpp"  // McPriceModel

#include <cstdint>
#include <functional>
#include <utility>

namespace qhedge {

/// Two risky assets driven by one Brownian motion and one Poisson process.
/// dS^(j)/S^(j) = mu^(j) dt + sigma^(j) dB + gamma^(j) dN, j = 1,2.
struct JumpModel {
    ParamSchedule drift1;
    ParamSchedule drift2;
    ParamSchedule sigma1;  // > 0
    ParamSchedule sigma2;  // > 0
    ParamSchedule gamma1;  // > -1
    ParamSchedule gamma2;  // > -1
    ParamSchedule intensity;  // lambda_t > 0
    ParamSchedule rate;
    double spot1;
    double spot2;
    double maturity2;  // maturity of asset 2, must exceed the claim horizon

    /// sigma^(1) gamma^(2) - gamma^(1) sigma^(2): the two assets span the
    /// Brownian and Poisson risks iff this is bounded away from zero.
    double span(double t) const;

    /// Validates parameter signs, the spanning condition on [0, horizon],
    /// and maturity2 > horizon.
    void validate(double horizon) const;

    /// Whether claim jump displacement uses the additive form
    /// V(x1 + gamma1, x2 + gamma2) instead of the proportional
    /// V(x1 (1 + gamma1), x2 (1 + gamma2)).
    bool additive_jump_displacement = false;

    /// State pair after a jump at time t.
    std::pair<double, double> displaced(double s1, double s2, double t) const;
};

/// Claim data at a point: value, the two spatial partials and the value at
/// the jump-displaced state.
struct JumpClaimEval {
    double value;
    double d1;
    double d2;
    double jumped;
};

using JumpClaimFn = std::function<JumpClaimEval(double s1, double s2, double t)>;
using JumpTerminalFn = std::function<double(double s1, double s2)>;

struct JumpPrice {
    double value;
    double d1;
    double d2;
    double jumped;   // value at the jump-displaced initial state
    double std_err;  // Monte-Carlo standard error of value
};

struct Deltas2 {
    double d1;
    double d2;
};

/// Risk-neutral Monte-Carlo price of G(S1_T, S2_T) plus partials
/// (common-random-number central differences) and the jump-displaced value.
JumpPrice jump_price(const JumpModel& model, const JumpTerminalFn& terminal,
                     const McPriceModel& pricing, double s1, double s2, double t,
                     double horizon);

/// MC-backed claim evaluator for the hedge simulator.
JumpClaimFn make_mc_claim(const JumpModel& model, const JumpTerminalFn& terminal,
                          const McPriceModel& pricing, double horizon);

/// Riskless delta pair: the unique holdings cancelling both the Brownian
/// and the Poisson coefficient of the hedged portfolio increment.
Deltas2 rn_deltas_jump(const JumpModel& model, const JumpClaimEval& claim, double s1,
                       double s2, double t);

/// Mean-variance correction pair (E1, E2) solving the one-step quadratic
/// utility first-order conditions in closed form; scales as 1/R.
Deltas2 jump_corrections(const JumpModel& model, double risk_aversion, double s1, double s2,
                         double t);

/// Literal textbook form of the corrections; exactly twice jump_corrections
/// (it omits the 1/2 from differentiating the variance).  Kept for
/// reporting, the simulator uses the first-order-condition solution.
Deltas2 jump_corrections_printed(const JumpModel& model, double risk_aversion, double s1,
                                 double s2, double t);

/// rn deltas plus the mean-variance corrections; infinite R gives the rn
/// pair exactly.
Deltas2 optimal_deltas_jump(const JumpModel& model, const JumpClaimEval& claim, double s1,
                            double s2, const RiskAversion& risk_aversion, double t);

HedgeSimResult simulate_hedge_jump(const JumpModel& model, const JumpClaimFn& claim,
                                   const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                   std::size_t n_paths, std::uint64_t seed,
                                   std::size_t keep_ledgers = 100, unsigned n_threads = 0);

}  // namespace qhedge
