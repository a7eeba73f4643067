#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hjblab/extended_real.hpp"

#include "json.hpp"

namespace hjblab {

// ---------------------------------------------------------------------------
// Utility catalog. Every member is continuous, concave and increasing on the
// nonnegative reals, and continuously differentiable on the positive reals.
// Closed forms only, so conjugates and inverse marginal utilities stay exact.
// ---------------------------------------------------------------------------

enum class UtilityKind { Linear, SqrtShift, CRRA, ScaledSqrt };

struct UtilitySpec {
    UtilityKind kind = UtilityKind::Linear;
    double theta = 1.0;  // CRRA only, > 0
    double a = 1.0;      // ScaledSqrt only, > 0

    static UtilitySpec linear() { return {UtilityKind::Linear, 0.0, 0.0}; }
    static UtilitySpec sqrt_shift() { return {UtilityKind::SqrtShift, 0.0, 0.0}; }
    static UtilitySpec crra(double theta);
    static UtilitySpec scaled_sqrt(double a);

    std::string describe() const;
};

// Range of u' on the positive reals, as an interval with open/closed ends.
struct MarginalRange {
    double lo = 0.0;
    double hi = 0.0;  // may be +infinity
    bool lo_open = true;
    bool hi_open = true;
    bool contains(double p) const;
    std::string describe() const;
};

ExtendedReal u_eval(const UtilitySpec& u, double c);
double u_prime(const UtilitySpec& u, double c);
MarginalRange u_prime_range(const UtilitySpec& u);

// Solves u'(c) = p. Throws NotInvertibleError (carrying the range of u')
// when p is outside the range or the inverse is not single-valued.
double u_prime_inverse(const UtilitySpec& u, double p);

// Concave conjugate u*(p) = sup_{c>=0} { u(c) - p c }, p > 0.
// +inf is a legitimate result (it drives the divergence mechanism of the
// Hamiltonian); p <= 0 is a DomainError so callers handle that region
// explicitly.
ExtendedReal u_conjugate(const UtilitySpec& u, double p);

// Infimum of { p > 0 : u*(p) finite }, with openness flag.
// Linear: [1, inf). SqrtShift: (1, inf). CRRA / ScaledSqrt: (0, inf).
struct ConjugateDomain {
    double p_lo = 0.0;
    bool lo_open = true;
    bool finite_at(double p) const { return lo_open ? p > p_lo : p >= p_lo; }
};
ConjugateDomain u_conjugate_domain(const UtilitySpec& u);

// ---------------------------------------------------------------------------
// Production catalog. Concave; f(0) = 0 for every primitive technology.
// AffineCapped is the tangent majorant g(k) = p2 (k - k2) + f(k2) used by the
// accumulation bounds; it is allowed to violate g(0) = 0 because it never
// models a primitive technology.
// ---------------------------------------------------------------------------

enum class ProductionKind { Sqrt, LinearProd, AffineCapped, PiecewiseLinearConcave };

struct AffinePiece {
    double slope = 0.0;
    double intercept = 0.0;
    double at(double k) const { return slope * k + intercept; }
};

struct ProductionSpec {
    ProductionKind kind = ProductionKind::Sqrt;

    // AffineCapped
    double k2 = 0.0;
    double p2 = 0.0;
    std::shared_ptr<const ProductionSpec> base;

    // PiecewiseLinearConcave, slopes strictly decreasing.
    std::vector<AffinePiece> pieces;

    static ProductionSpec sqrt_prod() { return {}; }
    static ProductionSpec linear_prod();
    static ProductionSpec affine_capped(double k2, double p2, ProductionSpec base);
    static ProductionSpec piecewise_linear(std::vector<AffinePiece> pieces);

    std::string describe() const;
};

double f_eval(const ProductionSpec& f, double k);

// Supporting-slope interval [D+ f(k), D- f(k)] of the concave f at k > 0.
// Exact for every catalog member; both ends are finite at interior points.
struct SubdifferentialInterval {
    double lower = 0.0;  // D+
    double upper = 0.0;  // D-
    bool contains(double p) const { return lower <= p && p <= upper; }
    bool is_singleton() const { return lower == upper; }
};

SubdifferentialInterval f_subdifferential(const ProductionSpec& f, double k);

// ---------------------------------------------------------------------------
// Model = (rho, u, f).
// ---------------------------------------------------------------------------

struct ModelSpec {
    double rho = 1.0;  // > 0
    UtilitySpec utility;
    ProductionSpec production;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Modified-golden-rule state: k* with rho in the subdifferential of f at k*.
struct SteadyStateResult {
    enum class Status { Found, NotIsolated };
    Status status = Status::Found;
    double k_star = 0.0;           // Found
    Interval flat = {0.0, 0.0};    // NotIsolated: where rho stays in the subdifferential
    bool found() const { return status == Status::Found; }
};

// Bisection on the monotone map k -> subdifferential(f, k) over `search`,
// resolved exactly for the piecewise-affine members, to 1e-10 in k for Sqrt.
// Throws ConditionFailedError when the bracketing inequalities
// D+ f(k_lo) > rho > D+ f(k_hi) fail on the search interval.
SteadyStateResult find_steady_state(const ModelSpec& model, Interval search);

// ---------------------------------------------------------------------------
// Assumption audit: discount positivity, utility shape, technology shape,
// plus the two sufficiency conditions for rollout certification:
//   (i)  u' decreasing with full positive range,
//   (ii) some k1, k2, p2 with D+ f(k1) > rho > p2 > 0 and p2 supporting f at k2.
// Condition (ii) is probed on `search` (defaults to the oracle grid hull).
// ---------------------------------------------------------------------------

struct AuditCondition {
    std::string name;
    bool pass = false;
    std::string witness;
};

struct AuditReport {
    std::vector<AuditCondition> conditions;
    bool all_pass() const;
    const AuditCondition& operator[](const std::string& name) const;
};

AuditReport audit_assumptions(const ModelSpec& model, Interval search = {0.01, 4.0});

// ---------------------------------------------------------------------------
// JSON document form:
// {"rho": x, "utility": {"kind": s, "params": {...}},
//  "production": {"kind": s, "params": {...}}}
// Unknown kinds or bad parameters throw ParseError carrying the field path.
// ---------------------------------------------------------------------------

ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& model);
ModelSpec model_from_file(const std::string& path);

}  // namespace hjblab
