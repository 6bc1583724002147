#include "qhedge/ledger.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>

namespace qhedge {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::string HedgeSummary::to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["seed"] = seed;
    j["n_paths"] = n_paths;
    j["premium"] = premium;
    nlohmann::json t = nlohmann::json::array(), tau = nlohmann::json::array(),
                   rm = nlohmann::json::array(), rs = nlohmann::json::array(),
                   tm = nlohmann::json::array(), ts = nlohmann::json::array();
    for (const auto& s : steps) {
        t.push_back(s.t);
        tau.push_back(s.tau);
        rm.push_back(s.residual_mean);
        rs.push_back(s.residual_std);
        tm.push_back(s.theory_mean);
        ts.push_back(s.theory_std);
    }
    j["step_times"] = std::move(t);
    j["step_taus"] = std::move(tau);
    j["residual_mean"] = std::move(rm);
    j["residual_std"] = std::move(rs);
    j["theory_mean"] = std::move(tm);
    j["theory_std"] = std::move(ts);
    j["terminal_error_mean"] = terminal_error_mean;
    j["terminal_error_rms"] = terminal_error_rms;
    j["terminal_abs_error_mean"] = terminal_abs_error_mean;
    j["cumulative_error_mean"] = cumulative_error_mean;
    j["cumulative_error_rms"] = cumulative_error_rms;
    j["max_abs_residual"] = max_abs_residual;
    if (!oracle_check.empty()) j["oracle_check"] = nlohmann::json::parse(oracle_check);
    return j.dump(2);
}

void write_ledgers_csv(std::ostream& os, const std::vector<HedgeLedger>& ledgers,
                       std::size_t max_paths) {
    bool has_mf = !ledgers.empty() && !ledgers.front().vol_state.empty();
    bool has_vov = !ledgers.empty() && !ledgers.front().vov_state.empty();
    bool has_jump = !ledgers.empty() && !ledgers.front().spot2.empty();

    os << "path,step,t,tau,spot,delta,option,portfolio,residual";
    if (has_mf) os << ",vol_state,b_holding";
    if (has_vov) os << ",vov_state,c_holding";
    if (has_jump) os << ",spot2,delta2,jumps_count";
    os << "\n";

    std::size_t n = std::min(max_paths, ledgers.size());
    for (std::size_t p = 0; p < n; ++p) {
        const auto& l = ledgers[p];
        for (std::size_t k = 0; k < l.n_records(); ++k) {
            os << p << ',' << k << ',' << fmt(l.t[k]) << ',' << fmt(l.tau[k]) << ','
               << fmt(l.spot[k]) << ',' << fmt(l.delta[k]) << ',' << fmt(l.option[k]) << ','
               << fmt(l.portfolio[k]) << ',' << fmt(l.residual[k]);
            if (has_mf) os << ',' << fmt(l.vol_state[k]) << ',' << fmt(l.b_holding[k]);
            if (has_vov) os << ',' << fmt(l.vov_state[k]) << ',' << fmt(l.c_holding[k]);
            if (has_jump) os << ',' << fmt(l.spot2[k]) << ',' << fmt(l.delta2[k]) << ',' << l.jumps_count[k];
            os << "\n";
        }
    }
}

}  // namespace qhedge
