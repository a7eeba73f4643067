#include "hjblab/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "hjblab/errors.hpp"
#include "hjblab/hamiltonian.hpp"
#include "hjblab/io.hpp"

namespace hjblab {

namespace {

using Rhs = std::function<double(double)>;  // kdot as a function of k

// One RK4 step.
double rk4_step(const Rhs& f, double k, double h) {
    const double s1 = f(k);
    const double s2 = f(k + 0.5 * h * s1);
    const double s3 = f(k + 0.5 * h * s2);
    const double s4 = f(k + h * s3);
    return k + h / 6.0 * (s1 + 2 * s2 + 2 * s3 + s4);
}

// Cash-Karp 4(5) embedded pair, one adaptive step. Returns the accepted step
// size actually taken through `h_used` and suggests the next one in `h`.
double rk45_step(const Rhs& f, double k, double& h, double rel_tol, double* h_used) {
    // Cash-Karp pair; the node fractions drop out for autonomous dynamics.
    static const double b21 = 0.2;
    static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
    static const double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static const double b51 = -11.0 / 54, b52 = 2.5, b53 = -70.0 / 27, b54 = 35.0 / 27;
    static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                        b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
    static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594,
                        c6 = 512.0 / 1771;
    static const double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                        d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336, d6 = c6 - 0.25;

    for (int attempt = 0; attempt < 60; ++attempt) {
        const double k1 = f(k);
        const double k2 = f(k + h * b21 * k1);
        const double k3 = f(k + h * (b31 * k1 + b32 * k2));
        const double k4 = f(k + h * (b41 * k1 + b42 * k2 + b43 * k3));
        const double k5 = f(k + h * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
        const double k6 = f(k + h * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
        const double next = k + h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
        const double err =
            std::fabs(h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6));
        const double scale = rel_tol * std::max(1.0, std::fabs(k));
        if (err <= scale || h <= 1e-12) {
            *h_used = h;
            const double grow = err > 0 ? 0.9 * std::pow(scale / err, 0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
            return next;
        }
        h *= std::max(0.2, 0.9 * std::pow(scale / err, 0.25));
    }
    *h_used = h;
    return rk4_step(f, k, h);
}

// Integrates kdot = rhs(k) from k0 over [0, T], sampling c = control(k) and
// accumulating the discounted-utility trapezoid as it goes. Terminates early
// at the positivity floor.
Trajectory integrate_flow(const ModelSpec& model, const Rhs& rhs,
                          const std::function<double(double)>& control, double k0,
                          const IntegratorConfig& cfg) {
    if (!(k0 > 0)) throw DomainError("integrate: k0 must be positive");
    if (!(model.rho > 0)) throw DomainError("integrate: rho must be positive");
    if (!(cfg.dt > 0) || !(cfg.T > 0) || !(cfg.k_floor > 0))
        throw DomainError("integrate: dt, T, k_floor must be positive");

    Trajectory traj;
    auto push_with_c = [&](double t, double k, double c) {
        const ExtendedReal u = u_eval(model.utility, c);
        const double uv = u.is_minus_inf() ? -std::numeric_limits<double>::infinity()
                                           : u.value();
        double inc = 0.0;
        if (!traj.t.empty()) {
            const double t0 = traj.t.back();
            const double g0 = std::exp(-model.rho * t0) * traj.u_of_c.back();
            const double g1 = std::exp(-model.rho * t) * uv;
            inc = 0.5 * (t - t0) * (g0 + g1);
        }
        traj.t.push_back(t);
        traj.k.push_back(k);
        traj.c.push_back(c);
        traj.u_of_c.push_back(uv);
        traj.payoff_partial.push_back(traj.payoff_partial.empty()
                                          ? 0.0
                                          : traj.payoff_partial.back() + inc);
    };
    auto push = [&](double t, double k) { push_with_c(t, k, control(k)); };

    push(0.0, k0);
    double t = 0.0, k = k0;
    double h_adapt = cfg.dt;
    const size_t max_nodes = 50'000'000;
    // Stages must never evaluate the dynamics at or below the floor; the
    // signal aborts the step and the crossing time is estimated instead.
    struct FloorSignal {};
    auto guarded = [&](double kk) {
        if (kk <= cfg.k_floor) throw FloorSignal{};
        return rhs(kk);
    };
    while (t < cfg.T) {
        if (traj.t.size() > max_nodes) throw Error("integrate: node budget exhausted");
        double h = cfg.method == StepMethod::RK4 ? cfg.dt : h_adapt;
        if (t + h > cfg.T) h = cfg.T - t;

        double k_next;
        bool stage_floor = false;
        try {
            if (cfg.method == StepMethod::RK4) {
                k_next = rk4_step(guarded, k, h);
            } else {
                double h_io = h, h_used = 0.0;
                k_next = rk45_step(guarded, k, h_io, cfg.rel_tol, &h_used);
                h = h_used;
                h_adapt = h_io;
            }
        } catch (const FloorSignal&) {
            stage_floor = true;
            k_next = cfg.k_floor;  // placeholder; crossing time computed below
        }

        if (stage_floor || k_next <= cfg.k_floor) {
            // Estimate the crossing time from the local slope; the control at
            // the crossing node reuses the last safe sample so the dynamics
            // are never queried below the floor.
            const double kdot = rhs(k);
            double t_cross = t + h;
            if (kdot < 0) t_cross = std::min(t_cross, t + (k - cfg.k_floor) / (-kdot));
            traj.terminated = Trajectory::End::HitFloor;
            traj.t_stop = t_cross;
            push_with_c(t_cross, cfg.k_floor, traj.c.back());
            return traj;
        }
        t += h;
        k = k_next;
        push(t, k);
    }
    traj.terminated = Trajectory::End::HorizonReached;
    traj.t_stop = t;
    return traj;
}

}  // namespace

std::string Trajectory::to_csv() const {
    std::ostringstream out;
    out << "t,k,c,payoff_partial\n";
    for (size_t i = 0; i < t.size(); ++i)
        out << fmt_double(t[i]) << ',' << fmt_double(k[i]) << ',' << fmt_double(c[i]) << ','
            << fmt_double(payoff_partial[i]) << '\n';
    return out.str();
}

Trajectory integrate_policy(const ModelSpec& model, const CandidateValueFn& candidate,
                            double k0, const IntegratorConfig& cfg) {
    // The feedback is the literal inverse marginal utility at the candidate's
    // slope, not the Hamiltonian maximizer: with linear utility the maximizer
    // may exist (c = 0) while the policy ODE itself is undefined.
    auto control = [&](double k) {
        const double kk = std::max(k, cfg.k_floor);
        try {
            return u_prime_inverse(model.utility, candidate.deriv(kk));
        } catch (const NotInvertibleError& e) {
            throw PolicyUndefinedError(
                std::string("feedback control undefined at k=") + fmt_double(kk) + ": " +
                    e.what(), kk);
        }
    };
    auto rhs = [&](double k) {
        const double kk = std::max(k, cfg.k_floor);
        return f_eval(model.production, kk) - control(kk);
    };
    return integrate_flow(model, rhs, control, k0, cfg);
}

double accumulated_payoff(const Trajectory& traj, double rho) {
    if (traj.t.empty() || traj.u_of_c.size() != traj.t.size())
        throw DomainError("accumulated_payoff: trajectory lacks utility samples");
    double total = 0.0;
    for (size_t i = 0; i + 1 < traj.t.size(); ++i) {
        if (std::isinf(traj.u_of_c[i]) || std::isinf(traj.u_of_c[i + 1]))
            throw MinusInfinitePayoffError("u(c) = -inf on the path at t=" +
                                           fmt_double(traj.t[i]));
        const double g0 = std::exp(-rho * traj.t[i]) * traj.u_of_c[i];
        const double g1 = std::exp(-rho * traj.t[i + 1]) * traj.u_of_c[i + 1];
        total += 0.5 * (traj.t[i + 1] - traj.t[i]) * (g0 + g1);
    }
    return total;
}

Trajectory pure_accumulation(const ModelSpec& model, double k0, const IntegratorConfig& cfg) {
    auto control = [](double) { return 0.0; };
    auto rhs = [&](double k) { return f_eval(model.production, std::max(k, 0.0)); };
    return integrate_flow(model, rhs, control, k0, cfg);
}

double accumulation_upper_bound(const ModelSpec& model, double k2, double p2, double k0,
                                double t) {
    if (!(k2 > 0) || !(k0 > 0) || !(t >= 0))
        throw DomainError("accumulation_upper_bound: bad arguments");
    const SubdifferentialInterval sub = f_subdifferential(model.production, k2);
    const double tol = 1e-12 * std::max(1.0, std::fabs(p2));
    if (p2 < sub.lower - tol || p2 > sub.upper + tol)
        throw DomainError("accumulation_upper_bound: p2 not in the subdifferential at k2");
    if (!(p2 > 0)) throw DomainError("accumulation_upper_bound: p2 must be positive");
    const double A = (f_eval(model.production, k2) - p2 * k2) / p2;
    return std::exp(p2 * t) * (k0 + A * (1 - std::exp(-p2 * t)));
}

ComparisonResult comparison_check(const ConstControlDynamics& lo_dyn,
                                  const ConstControlDynamics& hi_dyn, double k0_lo,
                                  double k0_hi, const IntegratorConfig& cfg) {
    if (!(k0_lo <= k0_hi)) throw DomainError("comparison_check: need k0_lo <= k0_hi");
    // Verify the right-hand-side ordering on a sample grid before trusting
    // the trajectory ordering to mean anything.
    for (double k : log_grid(1e-6, 1e6, 200)) {
        const double h_lo = f_eval(lo_dyn.production, k) - lo_dyn.c;
        const double h_hi = f_eval(hi_dyn.production, k) - hi_dyn.c;
        if (h_lo > h_hi + 1e-12 * std::max(1.0, std::fabs(h_hi)))
            throw DomainError("comparison_check: dynamics not ordered at k=" + fmt_double(k));
    }
    ModelSpec lo_model{1.0, UtilitySpec::linear(), lo_dyn.production};
    ModelSpec hi_model{1.0, UtilitySpec::linear(), hi_dyn.production};
    auto rhs_lo = [&](double k) {
        return f_eval(lo_model.production, std::max(k, 0.0)) - lo_dyn.c;
    };
    auto rhs_hi = [&](double k) {
        return f_eval(hi_model.production, std::max(k, 0.0)) - hi_dyn.c;
    };
    auto zero = [](double) { return 0.0; };
    IntegratorConfig fixed = cfg;
    fixed.method = StepMethod::RK4;  // shared nodes
    const Trajectory lo = integrate_flow(lo_model, rhs_lo, zero, k0_lo, fixed);
    const Trajectory hi = integrate_flow(hi_model, rhs_hi, zero, k0_hi, fixed);

    ComparisonResult result;
    const size_t n = std::min(lo.t.size(), hi.t.size());
    for (size_t i = 0; i < n; ++i) {
        result.max_violation = std::max(result.max_violation, lo.k[i] - hi.k[i]);
    }
    const double tol = 10 * std::max(cfg.rel_tol, cfg.dt * cfg.dt * cfg.dt * cfg.dt);
    result.ordered = result.max_violation <= tol * std::max(1.0, k0_hi);
    return result;
}

GrowthCheck growth_condition_check(const ModelSpec& model, const CandidateValueFn& candidate,
                                   double k0, double T) {
    GrowthCheck check;
    // Geometric sample times T / 2^j, finest first.
    std::vector<double> times;
    for (int j = 16; j >= 0; --j) times.push_back(T / std::pow(2.0, j));

    IntegratorConfig cfg;
    cfg.dt = std::min(1e-2, times.front() / 8);
    cfg.T = T;
    double k = k0, t = 0.0;
    for (double target : times) {
        // March the pure-accumulation flow exactly to each sample time.
        while (t < target) {
            double h = std::min(cfg.dt, target - t);
            const double s1 = f_eval(model.production, k);
            const double s2 = f_eval(model.production, k + 0.5 * h * s1);
            const double s3 = f_eval(model.production, k + 0.5 * h * s2);
            const double s4 = f_eval(model.production, k + h * s3);
            k += h / 6.0 * (s1 + 2 * s2 + 2 * s3 + s4);
            t += h;
        }
        check.times.push_back(target);
        check.tail.push_back(std::exp(-model.rho * target) * candidate.eval(k));
    }

    const double last = check.tail.back();
    bool decreasing_tail = true;
    const size_t n = check.tail.size();
    for (size_t i = n - 3; i + 1 < n; ++i)
        if (check.tail[i + 1] > check.tail[i] + 1e-15) decreasing_tail = false;
    if (std::fabs(last) < 1e-6 && decreasing_tail) {
        check.verdict = GrowthCheck::Verdict::Converges0;
        check.limit_estimate = 0.0;
    } else {
        check.verdict = GrowthCheck::Verdict::ReportsLimit;
        check.limit_estimate = last;
    }
    return check;
}

double transversality_tail(const CandidateValueFn& candidate, const Trajectory& traj,
                           double rho) {
    if (traj.terminated != Trajectory::End::HorizonReached)
        throw DomainError("transversality_tail: trajectory did not reach the horizon");
    return std::exp(-rho * traj.t.back()) * candidate.eval(traj.k.back());
}

std::optional<double> euler_residual(const ModelSpec& model, const Trajectory& traj) {
    const size_t n = traj.t.size();
    if (n < 3) return 0.0;
    double sup = 0.0;
    for (size_t i = 1; i + 1 < n; ++i) {
        if (!(traj.c[i - 1] > 0) || !(traj.c[i] > 0) || !(traj.c[i + 1] > 0))
            return std::nullopt;
        const double up_prev = u_prime(model.utility, traj.c[i - 1]);
        const double up_here = u_prime(model.utility, traj.c[i]);
        const double up_next = u_prime(model.utility, traj.c[i + 1]);
        const double dmu = (up_next - up_prev) / (traj.t[i + 1] - traj.t[i - 1]);
        const SubdifferentialInterval sub = f_subdifferential(model.production, traj.k[i]);
        const double fprime = 0.5 * (sub.lower + sub.upper);
        const double r = dmu - up_here * (model.rho - fprime);
        sup = std::max(sup, std::fabs(r));
    }
    return sup;
}

nlohmann::json CertificationReport::to_json() const {
    nlohmann::json j;
    j["verdict"] = accepted() ? "ACCEPT" : "REJECT";
    j["reason"] = reason;
    j["k0"] = k0;
    j["value_at_k0"] = value_at_k0;
    j["payoff"] = payoff;
    j["payoff_gap"] = payoff_gap;
    j["transversality_tail"] = transversality_tail;
    j["residual_on_path"] = residual_on_path;
    j["infinite_residuals"] = infinite_residuals;
    if (euler_residual_norm) j["euler_residual_norm"] = *euler_residual_norm;
    else j["euler_residual_norm"] = nullptr;
    j["terminated"] =
        trajectory.terminated == Trajectory::End::HorizonReached ? "horizon" : "floor";
    j["t_stop"] = trajectory.t_stop;
    return j;
}

CertificationReport certify(const ModelSpec& model, const CandidateValueFn& candidate,
                            double k0, const IntegratorConfig& cfg,
                            const CertifyTolerances& tol) {
    CertificationReport report;
    report.k0 = k0;
    report.value_at_k0 = candidate.eval(k0);

    try {
        report.trajectory = integrate_policy(model, candidate, k0, cfg);
    } catch (const PolicyUndefinedError& e) {
        report.verdict = CertificationReport::Verdict::REJECT;
        report.reason = std::string("PolicyUndefined: ") + e.what();
        return report;
    }
    const Trajectory& traj = report.trajectory;

    // Residual along the visited states.
    for (size_t i = 0; i < traj.k.size(); ++i) {
        const ExtendedReal r = hjb_residual(model, candidate, traj.k[i]);
        if (r.is_finite())
            report.residual_on_path = std::max(report.residual_on_path, std::fabs(r.value()));
        else
            ++report.infinite_residuals;
    }
    report.euler_residual_norm = euler_residual(model, traj);
    report.payoff = accumulated_payoff(traj, model.rho);
    report.payoff_gap = report.payoff - report.value_at_k0;
    if (traj.terminated == Trajectory::End::HorizonReached)
        report.transversality_tail = transversality_tail(candidate, traj, model.rho);
    else
        report.transversality_tail =
            std::exp(-model.rho * traj.t.back()) * candidate.eval(std::max(traj.k.back(), 1e-12));

    const double tol_g = tol.tol_g_rel * std::max(1.0, std::fabs(report.value_at_k0));

    if (traj.terminated == Trajectory::End::HitFloor) {
        report.verdict = CertificationReport::Verdict::REJECT;
        report.reason = "HitFloor: path hit the positivity floor at t=" +
                        fmt_double(traj.t_stop);
        return report;
    }
    if (report.infinite_residuals > 0 || report.residual_on_path > tol.tol_r) {
        report.verdict = CertificationReport::Verdict::REJECT;
        report.reason = "residual: optimality equation violated along the path";
        return report;
    }
    if (std::fabs(report.payoff_gap) > tol_g) {
        report.verdict = CertificationReport::Verdict::REJECT;
        report.reason = "payoff-gap: achieved " + fmt_double(report.payoff) + " vs V(k0)=" +
                        fmt_double(report.value_at_k0);
        return report;
    }
    if (std::fabs(report.transversality_tail) > tol.tol_t) {
        report.verdict = CertificationReport::Verdict::REJECT;
        report.reason = "transversality: tail " + fmt_double(report.transversality_tail);
        return report;
    }
    report.verdict = CertificationReport::Verdict::ACCEPT;
    report.reason = "all criteria within tolerance";
    return report;
}

double dpp_check(const ModelSpec& model, const CandidateValueFn& value_estimate,
                 const Trajectory& traj, double t) {
    if (traj.t.empty()) throw DomainError("dpp_check: empty trajectory");
    if (!(t > 0)) throw DomainError("dpp_check: t must be positive");
    // Nearest node; the caller controls node placement.
    size_t best = 0;
    for (size_t i = 1; i < traj.t.size(); ++i)
        if (std::fabs(traj.t[i] - t) < std::fabs(traj.t[best] - t)) best = i;
    const double v0 = value_estimate.eval(traj.k.front());
    const double vt = value_estimate.eval(traj.k[best]);
    return v0 - (traj.payoff_partial[best] + std::exp(-model.rho * traj.t[best]) * vt);
}

}  // namespace hjblab
