#pragma once

#include "qhedge/core.hpp"
#include "qhedge/ledger.hpp"

#include <cstdint>
#include <vector>

namespace qhedge {

/// One step of the generalized binomial model: free up-probability p_h with
///   u = 1 + mu h + sqrt((1-p)/p) sigma sqrt(h)
///   d = 1 + mu h - sqrt(p/(1-p)) sigma sqrt(h)
struct KsrfStepModel {
    double p_up;
    double up_factor;
    double down_factor;
    double step;

    static KsrfStepModel from_market(const MarketParams& market, double h, double p_up);
    void validate(double riskless_rate) const;

    /// Risk-neutral up-probability q = (e^{r h} - d) / (u - d).
    double q(double riskless_rate) const;
};

/// CRR-matching up-probability 1/2 + (mu - sigma^2/2)/(2 sigma) sqrt(h).
double crr_probability(const MarketParams& market, double h);

/// Recombining tree of prices, risk-neutral option values and deltas.
class BinomialLattice {
public:
    static constexpr int kMaxSteps = 5000;

    BinomialLattice(const MarketParams& market, const TimeGrid& grid, double p_up,
                    const PayoffSpec& payoff);

    const MarketParams& market() const { return market_; }
    const TimeGrid& grid() const { return grid_; }
    const KsrfStepModel& step_model() const { return step_; }
    const PayoffSpec& payoff() const { return payoff_; }

    double node_price(int k, int j) const { return prices_[index(k, j)]; }
    double option_value(int k, int j) const { return values_[index(k, j)]; }
    /// (f^u - f^d) / (S (u - d)); defined for k < n.
    double rn_delta(int k, int j) const { return rn_deltas_[index(k, j)]; }
    double price() const { return values_[0]; }

private:
    std::size_t index(int k, int j) const;

    MarketParams market_;
    TimeGrid grid_;
    KsrfStepModel step_;
    PayoffSpec payoff_;
    std::vector<double> prices_;
    std::vector<double> values_;
    std::vector<double> rn_deltas_;
};

inline BinomialLattice build_lattice(const MarketParams& market, const TimeGrid& grid,
                                     double p_up, const PayoffSpec& payoff) {
    return BinomialLattice(market, grid, p_up, payoff);
}

/// Mean-variance-optimal one-step delta:
///   (p u + (1-p) d) / (2 R p (1-p) S (u-d)^2) + (f^u - f^d) / (S (u-d)).
/// Infinite R collapses to the risk-neutral delta.
double delta_one_step(double spot, const KsrfStepModel& model, double f_up, double f_down,
                      const RiskAversion& risk_aversion);

/// psi(tau_k) + rn_delta(k, j).
double delta_at_node(const BinomialLattice& lattice, int k, int j,
                     const RiskAversionSchedule& schedule);

struct HedgeSimResult {
    std::vector<HedgeLedger> ledgers;  // first `keep_ledgers` paths
    HedgeSummary summary;
};

HedgeSimResult simulate_hedge(const BinomialLattice& lattice, const RiskAversionSchedule& schedule,
                              std::size_t n_paths, std::uint64_t seed,
                              std::size_t keep_ledgers = 100, unsigned n_threads = 0);

}  // namespace qhedge
