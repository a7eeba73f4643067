#pragma once

#include <string>
#include <vector>

#include "hjblab/candidates.hpp"
#include "hjblab/extended_real.hpp"
#include "hjblab/model.hpp"

namespace hjblab {

// One-sided slopes of a concave candidate: D+ V(k) <= D- V(k).
// MinOf kinks are read off the active parts analytically; everything else is
// differentiable and both sides coincide with the derivative. Throws
// NotConcaveError when a shrinking-stencil chord test fails at k.
struct OneSidedDerivatives {
    double d_plus = 0.0;
    double d_minus = 0.0;
    bool kink() const { return d_plus < d_minus; }
};

OneSidedDerivatives one_sided_derivatives(const CandidateValueFn& candidate, double k);

// Maximization-oriented weak-solution tests. A smooth test function touching
// the candidate from below must satisfy H(k, phi'(k)) <= rho V(k); touching
// from above, H(k, phi'(k)) >= rho V(k). At a concave kink no smooth function
// touches from below, so the below-test is vacuously satisfied; every slope
// in [D+, D-] touches from above, so the above-test minimizes H over the
// supporting interval.

enum class SubStatus { Holds, Violated, Vacuous };
enum class SuperStatus { Holds, Violated };

struct SubsolutionVerdict {
    SubStatus status = SubStatus::Holds;
    ExtendedReal gap = 0.0;  // H - rho V when violated; may be +inf
};

struct SupersolutionVerdict {
    SuperStatus status = SuperStatus::Holds;
    double gap = 0.0;      // rho V - min_p H when violated
    double worst_p = 0.0;  // argmin over [D+, D-]
};

struct ViscosityVerdict {
    double k = 0.0;
    double d_plus = 0.0;
    double d_minus = 0.0;
    SubsolutionVerdict sub;
    SupersolutionVerdict super;
    bool clean() const {
        return sub.status != SubStatus::Violated && super.status != SuperStatus::Violated;
    }
};

struct ViscosityOptions {
    double tol = 1e-7;  // absolute, on the Hamiltonian scale
};

SubsolutionVerdict check_subsolution_at(const ModelSpec& model,
                                        const CandidateValueFn& candidate, double k,
                                        const ViscosityOptions& opts = {});

SupersolutionVerdict check_supersolution_at(const ModelSpec& model,
                                            const CandidateValueFn& candidate, double k,
                                            const ViscosityOptions& opts = {});

ViscosityVerdict check_viscosity_at(const ModelSpec& model, const CandidateValueFn& candidate,
                                    double k, const ViscosityOptions& opts = {});

// Verdicts at every grid point. A grid can only refute: `consistent_on_grid`
// means "no violation found on this grid", never "is a weak solution".
struct ViscosityReport {
    std::vector<ViscosityVerdict> verdicts;
    int violations = 0;
    int vacuous = 0;
    bool consistent_on_grid = true;
};

ViscosityReport viscosity_report(const ModelSpec& model, const CandidateValueFn& candidate,
                                 const std::vector<double>& grid,
                                 const ViscosityOptions& opts = {});

// CSV columns: k, d_plus, d_minus, sub_status, super_status, gap, worst_p.
std::string viscosity_report_csv(const ViscosityReport& report);

// Minimum of the convex map p -> H(k, p) over [p_lo, p_hi] by golden-section
// plus endpoint checks. Exposed for the checker's own validation.
struct ConvexMinResult {
    double p = 0.0;
    ExtendedReal value = 0.0;
};
ConvexMinResult minimize_hamiltonian_over(const ModelSpec& model, double k, double p_lo,
                                          double p_hi);

}  // namespace hjblab
