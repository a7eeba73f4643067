#pragma once

#include <string>
#include <vector>

#include "hjblab/candidates.hpp"
#include "hjblab/model.hpp"

#include "json.hpp"

namespace hjblab {

// Finite-horizon, time-discretized backward induction on a state grid.
// Independent of every closed form in the candidate layer: this is the
// ground-truth estimator the analytic machinery is checked against.
struct DPConfig {
    double dt = 0.01;
    double T = 30.0;
    std::vector<double> k_grid;            // increasing, positive
    double c_max = 8.0;                    // finite cap: bias is downward
    int c_grid_size = 801;
    enum class Terminal { Zero, Bound } terminal = Terminal::Zero;
    double c_floor = 0.0;  // > 0 opts in to models with u(0) = -inf

    nlohmann::json to_json() const;
};

struct ValueTable {
    std::vector<double> k_grid;
    std::vector<double> values;
    std::vector<double> policy;
    struct Diagnostics {
        bool monotone_in_k = false;
        bool concave_on_grid = false;
    } diagnostics;
    DPConfig config;

    double value_at(double k) const;   // linear interpolation
    double policy_at(double k) const;  // linear interpolation
    std::string to_csv() const;        // columns k, value, policy
};

// Backward induction
//   V_n(k) = max over the c grid of
//            u(c) (1 - e^{-rho dt}) / rho + e^{-rho dt} V_{n+1}(k')
//   k' = clamp(k + (f(k) - c) dt),
// with linear interpolation between knots, an absorbing state at k = 0
// (f(0) = 0 and c = 0 thereafter), and the terminal slice set by
// cfg.terminal (Zero, or the bound k + 1/(4 rho^2) used to sandwich the
// linear-utility model from above). Throws ConfigError when u(0) = -inf and
// no consumption floor is configured.
ValueTable dp_solve(const ModelSpec& model, const DPConfig& cfg);

struct RefineStudy {
    std::vector<double> probes;
    std::vector<std::vector<double>> estimates;    // [config][probe]
    std::vector<std::vector<double>> differences;  // successive, [config-1][probe]
    bool monotone_refinement = true;  // |differences| shrinking at every probe
    std::string to_csv() const;
};

// Probes the estimate under a refinement ladder of configurations.
RefineStudy dp_refine_study(const ModelSpec& model, const std::vector<DPConfig>& cfgs,
                            const std::vector<double>& probes);

// Simulates the table's greedy policy forward with the same discrete update
// and reports |achieved payoff - table value at k0|.
double dp_policy_rollout_crosscheck(const ModelSpec& model, const ValueTable& table,
                                    double k0, const DPConfig& cfg);

// Grid candidate over the table values (monotone cubic slopes), for feeding
// the estimate to the residual and viscosity checkers.
CandidateValueFn table_to_candidate(const ValueTable& table);

}  // namespace hjblab
