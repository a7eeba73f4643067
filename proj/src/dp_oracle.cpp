#include "hjblab/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "hjblab/errors.hpp"
#include "hjblab/io.hpp"

namespace hjblab {

namespace {

struct UniformGridIndex {
    double k0 = 0.0;
    double inv_h = 0.0;
    bool uniform = false;
};

UniformGridIndex detect_uniform(const std::vector<double>& grid) {
    UniformGridIndex idx;
    if (grid.size() < 2) return idx;
    const double h = (grid.back() - grid.front()) / (grid.size() - 1);
    for (size_t i = 0; i < grid.size(); ++i) {
        if (std::fabs(grid[i] - (grid.front() + h * i)) > 1e-9 * std::max(1.0, grid[i]))
            return idx;
    }
    idx.k0 = grid.front();
    idx.inv_h = 1.0 / h;
    idx.uniform = true;
    return idx;
}

double interp_on_grid(const std::vector<double>& grid, const std::vector<double>& values,
                      const UniformGridIndex& idx, double k, double below_value) {
    if (k <= 0) return below_value;
    if (k <= grid.front()) {
        // Between the absorbing state at 0 and the first knot.
        const double w = k / grid.front();
        return below_value + w * (values.front() - below_value);
    }
    if (k >= grid.back()) return values.back();
    size_t i;
    if (idx.uniform) {
        i = static_cast<size_t>((k - idx.k0) * idx.inv_h);
        if (i + 1 >= grid.size()) i = grid.size() - 2;
        // Guard rounding at cell edges.
        if (k < grid[i]) --i;
        else if (k > grid[i + 1]) ++i;
    } else {
        i = static_cast<size_t>(std::upper_bound(grid.begin(), grid.end(), k) - grid.begin());
        if (i > 0) --i;
        if (i + 1 >= grid.size()) i = grid.size() - 2;
    }
    const double w = (k - grid[i]) / (grid[i + 1] - grid[i]);
    return values[i] + w * (values[i + 1] - values[i]);
}

void validate(const ModelSpec& model, const DPConfig& cfg) {
    if (!(model.rho > 0)) throw ConfigError("dp: rho must be positive");
    if (cfg.k_grid.size() < 2) throw ConfigError("dp: k_grid needs >= 2 knots");
    for (size_t i = 0; i < cfg.k_grid.size(); ++i) {
        if (!(cfg.k_grid[i] > 0)) throw ConfigError("dp: k_grid must be positive");
        if (i > 0 && !(cfg.k_grid[i] > cfg.k_grid[i - 1]))
            throw ConfigError("dp: k_grid must be strictly increasing");
    }
    if (!(cfg.dt > 0) || !(cfg.T >= cfg.dt)) throw ConfigError("dp: need 0 < dt <= T");
    if (!(cfg.c_max > 0) || cfg.c_grid_size < 2) throw ConfigError("dp: bad c grid");
    if (cfg.c_floor < 0 || cfg.c_floor >= cfg.c_max) throw ConfigError("dp: bad c_floor");
    if (u_eval(model.utility, cfg.c_floor).is_minus_inf())
        throw ConfigError("dp: u(" + fmt_double(cfg.c_floor) +
                          ") = -inf; configure a positive consumption floor");
}

double terminal_value(const ModelSpec& model, const DPConfig& cfg, double k) {
    switch (cfg.terminal) {
        case DPConfig::Terminal::Zero: return 0.0;
        case DPConfig::Terminal::Bound: return k + 1.0 / (4 * model.rho * model.rho);
    }
    return 0.0;
}

}  // namespace

nlohmann::json DPConfig::to_json() const {
    nlohmann::json j;
    j["dt"] = dt;
    j["T"] = T;
    j["k_grid"] = {{"lo", k_grid.front()}, {"hi", k_grid.back()},
                   {"n", k_grid.size()}};
    j["c_max"] = c_max;
    j["c_grid_size"] = c_grid_size;
    j["terminal"] = terminal == Terminal::Zero ? "Zero" : "Bound";
    j["c_floor"] = c_floor;
    return j;
}

double ValueTable::value_at(double k) const {
    const UniformGridIndex idx = detect_uniform(k_grid);
    return interp_on_grid(k_grid, values, idx, k, 0.0);
}

double ValueTable::policy_at(double k) const {
    const UniformGridIndex idx = detect_uniform(k_grid);
    return interp_on_grid(k_grid, policy, idx, k, 0.0);
}

std::string ValueTable::to_csv() const {
    std::ostringstream out;
    out << "k,value,policy\n";
    for (size_t i = 0; i < k_grid.size(); ++i)
        out << fmt_double(k_grid[i]) << ',' << fmt_double(values[i]) << ','
            << fmt_double(policy[i]) << '\n';
    return out.str();
}

ValueTable dp_solve(const ModelSpec& model, const DPConfig& cfg) {
    validate(model, cfg);
    const size_t nk = cfg.k_grid.size();
    const int steps = static_cast<int>(std::llround(cfg.T / cfg.dt));
    const double beta = std::exp(-model.rho * cfg.dt);
    // Exact one-step annuity: constant consumption over a step contributes
    // u(c) (1 - e^{-rho dt}) / rho, which removes the left-sum bias of a
    // plain u(c) dt reward.
    const double annuity = (1.0 - beta) / model.rho;

    std::vector<double> c_grid(cfg.c_grid_size), reward(cfg.c_grid_size),
        cdt(cfg.c_grid_size);
    for (int j = 0; j < cfg.c_grid_size; ++j) {
        const double c =
            cfg.c_floor + (cfg.c_max - cfg.c_floor) * j / (cfg.c_grid_size - 1);
        c_grid[j] = c;
        reward[j] = u_eval(model.utility, c).value() * annuity;
        cdt[j] = c * cfg.dt;
    }
    const double u_floor = u_eval(model.utility, cfg.c_floor).value();

    std::vector<double> drift(nk);  // k + f(k) dt per knot
    for (size_t i = 0; i < nk; ++i)
        drift[i] = cfg.k_grid[i] + f_eval(model.production, cfg.k_grid[i]) * cfg.dt;
    const UniformGridIndex idx = detect_uniform(cfg.k_grid);

    std::vector<double> v_next(nk), v_here(nk), policy(nk, 0.0);
    for (size_t i = 0; i < nk; ++i) v_next[i] = terminal_value(model, cfg, cfg.k_grid[i]);
    // Absorbing state at k = 0: zero output forces zero (or floor)
    // consumption for the remaining time.
    double absorb_next = terminal_value(model, cfg, 0.0);

    // Each backward slice is a parallel map over the state grid; every point
    // is an independent max-reduction, so the result does not depend on the
    // thread count.
    const unsigned n_threads =
        std::min(4u, std::max(1u, std::thread::hardware_concurrency()));
    auto sweep_range = [&](size_t begin, size_t end, double absorb) {
        for (size_t i = begin; i < end; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            double best_c = c_grid.front();
            const double a = drift[i];
            for (int j = 0; j < cfg.c_grid_size; ++j) {
                const double k_next = a - cdt[j];
                const double cont =
                    k_next <= 0 ? absorb
                                : interp_on_grid(cfg.k_grid, v_next, idx, k_next, absorb);
                const double val = reward[j] + beta * cont;
                if (val > best) {
                    best = val;
                    best_c = c_grid[j];
                }
            }
            v_here[i] = best;
            policy[i] = best_c;
        }
    };
    for (int n = steps - 1; n >= 0; --n) {
        const double absorb_here = u_floor * annuity + beta * absorb_next;
        if (n_threads == 1 || nk < 64) {
            sweep_range(0, nk, absorb_next);
        } else {
            std::vector<std::thread> workers;
            const size_t chunk = (nk + n_threads - 1) / n_threads;
            for (unsigned w = 0; w < n_threads; ++w) {
                const size_t begin = w * chunk;
                const size_t end = std::min(nk, begin + chunk);
                if (begin >= end) break;
                workers.emplace_back(sweep_range, begin, end, absorb_next);
            }
            for (std::thread& worker : workers) worker.join();
        }
        v_next.swap(v_here);
        absorb_next = absorb_here;
    }

    ValueTable table;
    table.k_grid = cfg.k_grid;
    table.values = std::move(v_next);
    table.policy = std::move(policy);
    table.config = cfg;

    table.diagnostics.monotone_in_k = true;
    for (size_t i = 0; i + 1 < nk; ++i)
        if (table.values[i + 1] < table.values[i] - 1e-10) {
            table.diagnostics.monotone_in_k = false;
            break;
        }
    table.diagnostics.concave_on_grid = true;
    for (size_t i = 1; i + 1 < nk; ++i) {
        const double h0 = table.k_grid[i] - table.k_grid[i - 1];
        const double h1 = table.k_grid[i + 1] - table.k_grid[i];
        const double interp =
            (table.values[i - 1] * h1 + table.values[i + 1] * h0) / (h0 + h1);
        const double tol = 1e-7 * std::max(1.0, std::fabs(table.values[i]));
        if (table.values[i] < interp - tol) {
            table.diagnostics.concave_on_grid = false;
            break;
        }
    }
    return table;
}

RefineStudy dp_refine_study(const ModelSpec& model, const std::vector<DPConfig>& cfgs,
                            const std::vector<double>& probes) {
    if (cfgs.empty() || probes.empty()) throw ConfigError("refine study: empty inputs");
    RefineStudy study;
    study.probes = probes;
    for (const DPConfig& cfg : cfgs) {
        const ValueTable table = dp_solve(model, cfg);
        std::vector<double> row;
        for (double k : probes) row.push_back(table.value_at(k));
        study.estimates.push_back(std::move(row));
    }
    for (size_t r = 1; r < study.estimates.size(); ++r) {
        std::vector<double> diff;
        for (size_t p = 0; p < probes.size(); ++p)
            diff.push_back(study.estimates[r][p] - study.estimates[r - 1][p]);
        study.differences.push_back(std::move(diff));
    }
    for (size_t r = 1; r < study.differences.size(); ++r)
        for (size_t p = 0; p < probes.size(); ++p)
            if (std::fabs(study.differences[r][p]) >
                std::fabs(study.differences[r - 1][p]) + 1e-12)
                study.monotone_refinement = false;
    return study;
}

std::string RefineStudy::to_csv() const {
    std::ostringstream out;
    out << "config";
    for (double p : probes) out << ",V(" << fmt_double(p) << ")";
    out << '\n';
    for (size_t r = 0; r < estimates.size(); ++r) {
        out << r;
        for (double v : estimates[r]) out << ',' << fmt_double(v);
        out << '\n';
    }
    return out.str();
}

double dp_policy_rollout_crosscheck(const ModelSpec& model, const ValueTable& table,
                                    double k0, const DPConfig& cfg) {
    if (!(k0 >= cfg.k_grid.front() && k0 <= cfg.k_grid.back()))
        throw DomainError("crosscheck: k0 outside the grid hull");
    const UniformGridIndex idx = detect_uniform(cfg.k_grid);
    const int steps = static_cast<int>(std::llround(cfg.T / cfg.dt));
    const double beta = std::exp(-model.rho * cfg.dt);
    const double annuity = (1.0 - beta) / model.rho;

    double k = k0, payoff = 0.0, discount = 1.0;
    bool absorbed = false;
    for (int n = 0; n < steps; ++n) {
        double c;
        if (absorbed) {
            c = cfg.c_floor;
        } else {
            c = interp_on_grid(cfg.k_grid, table.policy, idx, k, cfg.c_floor);
            c = std::clamp(c, cfg.c_floor, cfg.c_max);
        }
        payoff += discount * u_eval(model.utility, c).value() * annuity;
        if (!absorbed) {
            k = k + (f_eval(model.production, std::max(k, 0.0)) - c) * cfg.dt;
            if (k <= 0) {
                absorbed = true;
                k = 0.0;
            } else if (k > cfg.k_grid.back()) {
                k = cfg.k_grid.back();
            }
        }
        discount *= beta;
    }
    payoff += discount * (absorbed ? terminal_value(model, cfg, 0.0)
                                   : terminal_value(model, cfg, k));
    return std::fabs(payoff - table.value_at(k0));
}

CandidateValueFn table_to_candidate(const ValueTable& table) {
    return CandidateValueFn(GridFn::from_values(table.k_grid, table.values));
}

}  // namespace hjblab
