#include "qhedge/core.hpp"

namespace qhedge {

double psi_eval(const RiskAversionSchedule& schedule, double tau) {
    if (tau < 0.0 || tau > schedule.horizon * (1.0 + 1e-12))
        throw std::domain_error("psi_eval: tau outside [0, horizon]");
    switch (schedule.family) {
        case PsiFamily::Zero:
            return 0.0;
        case PsiFamily::Exponential:
            return schedule.gamma * (1.0 - std::exp(-schedule.gamma * tau / schedule.horizon));
        case PsiFamily::DelayedExponential:
            if (tau <= schedule.delay) return 0.0;
            return schedule.delay * (1.0 - std::exp(-schedule.gamma * (tau - schedule.delay)));
    }
    throw std::logic_error("psi_eval: unknown family");
}

double psi_small_tau_asymptotic(const RiskAversionSchedule& schedule, double tau) {
    if (schedule.family != PsiFamily::Exponential)
        throw std::domain_error("psi_small_tau_asymptotic: exponential family only");
    if (tau < 0.0) throw std::domain_error("psi_small_tau_asymptotic: tau < 0");
    return schedule.gamma * schedule.gamma * tau / schedule.horizon;
}

RiskAversion risk_aversion_from_psi(double psi, double spot, double drift, double volatility) {
    if (!(spot > 0.0) || !(volatility > 0.0))
        throw std::invalid_argument("risk_aversion_from_psi: spot and volatility must be > 0");
    if (psi < 0.0) throw std::domain_error("risk_aversion_from_psi: psi < 0");
    if (psi == 0.0) return RiskAversion::infinite();
    return RiskAversion::finite(drift / (2.0 * psi * spot * volatility * volatility));
}

}  // namespace qhedge
