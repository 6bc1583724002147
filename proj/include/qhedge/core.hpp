#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qhedge {

constexpr double kTradingDaysPerYear = 252.0;

/// Uniform rebalancing grid t_k = k*h, k = 0..n, n*h = T.
struct TimeGrid {
    int n_steps;
    double horizon;

    TimeGrid(int n, double T) : n_steps(n), horizon(T) {
        if (n < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    }

    double step() const { return horizon / n_steps; }
    double time_at(int k) const { return k * step(); }
    double tau_at(int k) const { return horizon - k * step(); }
};

/// Constant market parameters of the single-asset engines.
struct MarketParams {
    double drift;           // mu, per year
    double volatility;      // sigma, per sqrt(year)
    double riskless_rate;   // r, per year
    double spot;            // S_0
    double numeraire_start = 1.0;  // beta_0

    void validate() const {
        if (!(volatility > 0.0)) throw std::invalid_argument("volatility must be > 0");
        if (!(spot > 0.0)) throw std::invalid_argument("spot must be > 0");
        if (!(drift > riskless_rate) || !(riskless_rate > 0.0))
            throw std::invalid_argument("require drift > riskless_rate > 0");
        if (!(numeraire_start > 0.0)) throw std::invalid_argument("numeraire_start must be > 0");
    }
};

/// Piecewise-constant-left schedule of a time-varying parameter.
/// A constant is a one-knot schedule at time 0.
class ParamSchedule {
public:
    ParamSchedule(double constant) : knots_{{0.0, constant}} {}
    explicit ParamSchedule(std::vector<std::pair<double, double>> knots)
        : knots_(std::move(knots)) {
        if (knots_.empty()) throw std::invalid_argument("ParamSchedule: no knots");
        if (knots_.front().first != 0.0)
            throw std::invalid_argument("ParamSchedule: first knot must be at time 0");
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (!(knots_[i].first > knots_[i - 1].first))
                throw std::invalid_argument("ParamSchedule: knot times must be strictly increasing");
    }

    double operator()(double t) const {
        if (t < 0.0) throw std::domain_error("ParamSchedule: t < 0");
        double v = knots_.front().second;
        for (const auto& [kt, kv] : knots_) {
            if (kt <= t) v = kv; else break;
        }
        return v;
    }

    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    bool all_satisfy(const std::function<bool(double)>& pred) const {
        for (const auto& [kt, kv] : knots_)
            if (!pred(kv)) return false;
        return true;
    }

private:
    std::vector<std::pair<double, double>> knots_;
};

enum class PayoffKind { Call, Put, Custom };

/// Terminal claim G(S_T).
struct PayoffSpec {
    PayoffKind kind = PayoffKind::Call;
    double strike = 0.0;
    std::function<double(double)> terminal_fn;

    static PayoffSpec call(double strike) {
        PayoffSpec p;
        p.kind = PayoffKind::Call;
        p.strike = strike;
        p.terminal_fn = [strike](double s) { return std::max(s - strike, 0.0); };
        return p;
    }
    static PayoffSpec put(double strike) {
        PayoffSpec p;
        p.kind = PayoffKind::Put;
        p.strike = strike;
        p.terminal_fn = [strike](double s) { return std::max(strike - s, 0.0); };
        return p;
    }
    static PayoffSpec custom(std::function<double(double)> fn) {
        PayoffSpec p;
        p.kind = PayoffKind::Custom;
        p.terminal_fn = std::move(fn);
        return p;
    }

    double operator()(double terminal_state) const {
        double g = terminal_fn(terminal_state);
        if (!std::isfinite(g) || g < 0.0)
            throw std::domain_error("PayoffSpec: payoff must be finite and non-negative");
        return g;
    }
};

enum class PsiFamily { Zero, Exponential, DelayedExponential };

/// Deterministic delta-tilt schedule psi(tau) with psi(0) = 0.
struct RiskAversionSchedule {
    PsiFamily family = PsiFamily::Zero;
    double gamma = 0.0;   // intensity
    double delay = 0.0;   // dead zone a, delayed family only
    double horizon = 1.0; // T

    static RiskAversionSchedule zero(double T) { return {PsiFamily::Zero, 0.0, 0.0, T}; }
    static RiskAversionSchedule exponential(double gamma, double T) {
        if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
        return {PsiFamily::Exponential, gamma, 0.0, T};
    }
    static RiskAversionSchedule delayed(double delay, double gamma, double T) {
        if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
        if (delay < 0.0) throw std::invalid_argument("delay must be >= 0");
        return {PsiFamily::DelayedExponential, gamma, delay, T};
    }
};

double psi_eval(const RiskAversionSchedule& schedule, double tau);

/// First-order expansion gamma^2 * tau / T of the exponential family.
double psi_small_tau_asymptotic(const RiskAversionSchedule& schedule, double tau);

/// Absolute risk aversion R, with a distinguished infinite state (psi = 0).
/// Every delta formula accepts the infinite state and returns the
/// risk-neutral holding exactly.
class RiskAversion {
public:
    static RiskAversion infinite() { return RiskAversion(true, 0.0); }
    static RiskAversion finite(double r) {
        if (!(r >= 0.0)) throw std::invalid_argument("R must be >= 0");
        return RiskAversion(false, r);
    }

    bool is_infinite() const { return infinite_; }
    double value() const {
        if (infinite_) throw std::logic_error("RiskAversion: infinite");
        return r_;
    }
    /// Relative risk aversion C = R/(1+R); 1 in the infinite state.
    double relative() const { return infinite_ ? 1.0 : r_ / (1.0 + r_); }
    /// Adjustment weight 1/(2R); 0 in the infinite state.
    double half_inverse() const { return infinite_ ? 0.0 : 0.5 / r_; }

private:
    RiskAversion(bool inf, double r) : infinite_(inf), r_(r) {}
    bool infinite_;
    double r_;
};

/// Inversion R = mu / (2 psi S sigma^2); psi = 0 maps to the infinite state.
RiskAversion risk_aversion_from_psi(double psi, double spot, double drift, double volatility);

}  // namespace qhedge
