#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hjblab/candidates.hpp"
#include "hjblab/model.hpp"

#include "json.hpp"

namespace hjblab {

enum class StepMethod { RK4, RK45 };

struct IntegratorConfig {
    StepMethod method = StepMethod::RK4;
    double dt = 1e-2;       // RK4 step
    double rel_tol = 1e-9;  // RK45 error target per unit step
    double T = 30.0;        // horizon
    double k_floor = 1e-9;  // positivity floor; hitting it terminates the path
};

// Sampled closed-loop path. payoff_partial[i] is the trapezoid quadrature of
// e^{-rho s} u(c(s)) up to t[i] on the integrator nodes. u_of_c caches the
// utility samples so the payoff can be re-integrated without the model
// (-inf marks u(c) = -inf, e.g. CRRA at c = 0).
struct Trajectory {
    std::vector<double> t;
    std::vector<double> k;
    std::vector<double> c;
    std::vector<double> u_of_c;
    std::vector<double> payoff_partial;
    enum class End { HorizonReached, HitFloor } terminated = End::HorizonReached;
    double t_stop = 0.0;  // floor-crossing time when HitFloor

    std::string to_csv() const;  // columns t, k, c, payoff_partial
};

// Closed-loop dynamics kdot = f(k) - c with c = (u')^{-1}(V'(k)).
// Throws PolicyUndefinedError when that inverse is undefined along the path
// (degenerate maximizer, e.g. linear utility).
Trajectory integrate_policy(const ModelSpec& model, const CandidateValueFn& candidate,
                            double k0, const IntegratorConfig& cfg);

// Trapezoid value of the discounted-utility integral on the trajectory nodes
// (O(dt^2), same error budget as the state integration). Throws
// MinusInfinitePayoffError if u(c) = -inf at a node.
double accumulated_payoff(const Trajectory& traj, double rho);

// Zero-consumption path kdot = f(k).
Trajectory pure_accumulation(const ModelSpec& model, double k0, const IntegratorConfig& cfg);

// Closed-form majorant of the pure accumulation path grown along the tangent
// line at k2: k+(t) = e^{p2 t} (k0 + A (1 - e^{-p2 t})), A = (f(k2) - p2 k2)/p2.
// Requires p2 in the subdifferential of f at k2.
double accumulation_upper_bound(const ModelSpec& model, double k2, double p2, double k0,
                                double t);

// Ordering of two scalar flows kdot = f_i(k) - c_i from ordered starts.
// The pointwise ordering of the right-hand sides is verified on a sample
// grid before integrating.
struct ConstControlDynamics {
    ProductionSpec production;
    double c = 0.0;  // >= 0
};

struct ComparisonResult {
    bool ordered = true;
    double max_violation = 0.0;  // max over shared nodes of k_lo - k_hi
};

ComparisonResult comparison_check(const ConstControlDynamics& lo_dyn,
                                  const ConstControlDynamics& hi_dyn, double k0_lo,
                                  double k0_hi, const IntegratorConfig& cfg);

// Tail e^{-rho t} V(khat(t, k0)) sampled at geometrically spaced times.
// Converges0 when the tail ends below 1e-6 and is nonincreasing over its
// last few doublings; otherwise the last sample is reported as the limit
// estimate.
struct GrowthCheck {
    enum class Verdict { Converges0, ReportsLimit } verdict = Verdict::Converges0;
    double limit_estimate = 0.0;
    std::vector<double> times;
    std::vector<double> tail;
};

GrowthCheck growth_condition_check(const ModelSpec& model, const CandidateValueFn& candidate,
                                   double k0, double T);

// e^{-rho T} V(k(T)); requires the horizon to have been reached.
double transversality_tail(const CandidateValueFn& candidate, const Trajectory& traj,
                           double rho);

// Sup norm over interior nodes of d/dt[u'(c)] - u'(c) (rho - f'(k)) by finite
// differences along the path. Diagnostic only: it can vanish on suboptimal
// paths when f' is identically rho. nullopt when c touches 0 on the path.
std::optional<double> euler_residual(const ModelSpec& model, const Trajectory& traj);

struct CertifyTolerances {
    double tol_r = 1e-6;      // optimality-equation residual along the path
    double tol_g_rel = 1e-4;  // payoff gap, scaled by max(1, |V(k0)|)
    double tol_t = 1e-4;      // transversality tail
};

struct CertificationReport {
    enum class Verdict { ACCEPT, REJECT } verdict = Verdict::REJECT;
    std::string reason;  // first failed criterion when rejected
    double k0 = 0.0;
    double value_at_k0 = 0.0;
    double payoff = 0.0;
    double payoff_gap = 0.0;
    double transversality_tail = 0.0;
    double residual_on_path = 0.0;
    int infinite_residuals = 0;
    std::optional<double> euler_residual_norm;
    Trajectory trajectory;

    bool accepted() const { return verdict == Verdict::ACCEPT; }
    nlohmann::json to_json() const;
};

// Rolls the candidate's own policy out of k0 and accepts only if the path
// that the candidate promises actually delivers the candidate's value:
// residual small at every visited state, achieved payoff equal to V(k0) up
// to tolerance, vanishing tail, and no positivity-floor hit. ACCEPT asserts
// "equals the value function at k0 up to tolerance".
CertificationReport certify(const ModelSpec& model, const CandidateValueFn& candidate,
                            double k0, const IntegratorConfig& cfg,
                            const CertifyTolerances& tol = {});

// Dynamic-programming gap V(k(0)) - [payoff_partial(t) + e^{-rho t} V(k(t))],
// evaluated at the trajectory node nearest to t. Nonnegative (up to error)
// for any feasible path, zero along an optimal one.
double dpp_check(const ModelSpec& model, const CandidateValueFn& value_estimate,
                 const Trajectory& traj, double t);

}  // namespace hjblab
