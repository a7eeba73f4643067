#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hjblab/model.hpp"

namespace hjblab {

class CandidateValueFn;

// V(k) = A e^{2 rho (sqrt(k) - 1)}, the exponential family that solves the
// optimality equation classically in the linear-utility model once A clears
// prop1_min_A(rho). Carries its own rho so it can be evaluated against any
// model. V'(k) = rho V(k) / sqrt(k) exactly.
struct Prop1Family {
    double A = 1.0;    // > 0
    double rho = 1.0;  // > 0
};

// V(k) = A k + 1 / (4 (A - 1)), A > 1: the line family of the Clairaut form
// of the optimality equation in the shifted-sqrt model.
struct ClairautGeneral {
    double A = 2.0;
};

// V(k) = k + sqrt(k): the envelope of the line family above, and the true
// value function of that model.
struct Prop2Singular {};

struct AffineLine {
    double slope = 0.0;
    double intercept = 0.0;
};

// Tabulated candidate with cubic Hermite interpolation. The stored slopes are
// the interpolant's derivative; evaluation outside the knot span is an error.
class GridFn {
public:
    GridFn(std::vector<double> knots, std::vector<double> values,
           std::vector<double> derivatives);

    // Derivatives from monotonicity-preserving (Fritsch-Carlson) slopes.
    static GridFn from_values(std::vector<double> knots, std::vector<double> values);

    double eval(double k) const;
    double deriv(double k) const;
    Interval domain() const { return {knots_.front(), knots_.back()}; }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& derivatives() const { return derivatives_; }

    std::string to_csv() const;  // columns k, V, Vprime
    static GridFn from_csv(const std::string& text);

private:
    size_t locate(double k) const;
    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> derivatives_;
};

// Pointwise minimum of candidates. Derivative queries at a kink are an
// error; the viscosity checker reads the kink through its one-sided slopes.
struct MinOf {
    std::vector<CandidateValueFn> parts;
    std::vector<double> kinks;  // crossing points found at construction
};

class CandidateValueFn {
public:
    using Form =
        std::variant<Prop1Family, ClairautGeneral, Prop2Singular, AffineLine, GridFn, MinOf>;

    CandidateValueFn(Prop1Family f);
    CandidateValueFn(ClairautGeneral f);
    CandidateValueFn(Prop2Singular f);
    CandidateValueFn(AffineLine f);
    CandidateValueFn(GridFn f);
    CandidateValueFn(MinOf f);

    double eval(double k) const;
    double deriv(double k) const;

    // Knot span for tabulated forms, nullopt when the domain is all k > 0.
    std::optional<Interval> domain() const;

    const Form& form() const { return form_; }
    template <class T> const T* get_if() const { return std::get_if<T>(&form_); }

    std::string describe() const;

private:
    Form form_;
};

// Least A such that the exponential family's slope stays >= 1 everywhere
// (the slope-to-A ratio is minimized at k = 1 / (4 rho^2)).
double prop1_min_A(double rho);

// Witnesses for the family's divergent slope at both ends of the state space
// and for its failure to be concave.
struct DivergenceReport {
    struct Threshold {
        double m = 0.0;        // slope level
        double k_small = 0.0;  // V' > m for k <= k_small
        double k_large = 0.0;  // V' > m for k >= k_large
        bool pass = false;
    };
    std::vector<Threshold> thresholds;
    double chord_triple[3] = {0, 0, 0};  // k values exhibiting a chord violation
    double chord_gap = 0.0;              // amount by which the chord test fails
    bool non_concave = false;
    bool all_pass() const;
};

DivergenceReport divergence_check(const Prop1Family& family);

enum class HjbSolveStrategy {
    SteadyStateAnchor,  // default: integrate outward from (k*, u(f(k*))/rho)
    ShootFromLeft,      // fallback: bisect on V(k_lo) until the left segment hits the anchor
};

struct HjbSolveResult {
    GridFn grid_fn;
    double k_star = 0.0;
    double v_star = 0.0;
    double p_star = 0.0;
    double residual_sup = 0.0;  // self-check: |H(k, p) - rho V| over the knots
};

// Integrates the optimality equation as an implicit ODE for V. The co-state
// at each step is the root of H(k, p) = rho V(k) selected by continuity from
// the previous step, starting at the double root above the steady state.
// Preconditions: the audit passes (i) and (ii) and the steady state inside
// k_range is isolated; otherwise ConditionFailedError. Root bracket loss is
// SolveFailedError carrying the last good k.
HjbSolveResult solve_hjb_from_steady_state(const ModelSpec& model, Interval k_range,
                                           double step = 0.0,  // <= 0: 1e-3 * k_star
                                           HjbSolveStrategy strategy =
                                               HjbSolveStrategy::SteadyStateAnchor);

// MinOf wrapper over >= 2 candidates; kink locations are found by pairwise
// root-finding on differences.
CandidateValueFn min_combine(std::vector<CandidateValueFn> parts);

// Compact descriptor strings: "prop1:A=2", "prop1:A=2,rho=0.5", "clairaut:A=1.5",
// "prop2-singular", "affine:slope=1,intercept=0", "grid:path.csv",
// "min(desc, desc, ...)". The model supplies the default rho for "prop1".
CandidateValueFn parse_candidate(const std::string& descriptor, const ModelSpec& model);

}  // namespace hjblab
