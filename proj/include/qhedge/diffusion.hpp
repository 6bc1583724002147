#pragma once

#include "qhedge/binomial.hpp"  // HedgeSimResult
#include "qhedge/core.hpp"

#include <cstdint>
#include <memory>

namespace qhedge {

/// Geometric diffusion dS = mu_t S dt + sigma_t S dB with deterministic
/// piecewise-constant coefficient schedules.
struct DiffusionModel {
    ParamSchedule drift;
    ParamSchedule volatility;
    ParamSchedule rate;
    double spot;

    void validate() const;
};

struct BsGreeks {
    double value;
    double delta;
    double gamma;
    double theta;
};

/// Closed-form European call/put value and partials. At tau = 0 returns the
/// payoff with delta = 1{S>K} (0.5 at the kink).
BsGreeks bs_price(double spot, double strike, double vol, double rate, double tau,
                  PayoffKind kind);

struct SurfaceEval {
    double value;
    double delta;   // dV/dx
    double gamma;   // d2V/dx2
    double theta;   // dV/dt
};

/// Option value surface V(x, t) with partials.
class PricingSurface {
public:
    enum class Method { ClosedForm, Grid };

    virtual ~PricingSurface() = default;
    virtual SurfaceEval operator()(double spot, double t) const = 0;
    virtual Method method() const = 0;
    virtual double horizon() const = 0;
};

/// Exact vanilla surface under deterministic schedules, via the
/// root-mean-square volatility and average rate over [t, T].
std::unique_ptr<PricingSurface> closed_form_surface(const DiffusionModel& model,
                                                    const PayoffSpec& payoff, double horizon);

struct PdeGridParams {
    int n_space = 400;
    int n_time = 400;
    double x_max_mult = 5.0;  // x_max = mult * spot; must be >= 5
};

/// Fully implicit finite-difference solve of the pricing PDE, all time
/// slices retained; partials by central differences on the grid.
std::unique_ptr<PricingSurface> pde_price_grid(const DiffusionModel& model,
                                               const PayoffSpec& payoff, double horizon,
                                               const PdeGridParams& params);

/// psi(T - t) + dV/dx(spot, t).
double delta_optimal_diffusion(const PricingSurface& surface, const DiffusionModel& model,
                               const RiskAversionSchedule& schedule, double spot, double t);

HedgeSimResult simulate_hedge_diffusion(const DiffusionModel& model,
                                        const PricingSurface& surface,
                                        const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                        std::size_t n_paths, std::uint64_t seed,
                                        std::size_t keep_ledgers = 100, unsigned n_threads = 0);

}  // namespace qhedge
