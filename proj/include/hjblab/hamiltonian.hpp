#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hjblab/extended_real.hpp"
#include "hjblab/model.hpp"

namespace hjblab {

class CandidateValueFn;

// Left-hand side of the stationary optimality equation as a function of the
// state and the co-state:
//   H(k, p) = sup_{c>=0} { (f(k) - c) p + u(c) } = f(k) p + u*(p).
// For p <= 0 the supremum genuinely diverges, so the result is +inf rather
// than an error: the viscosity checker has to observe divergence as a value.
ExtendedReal hamiltonian(const ModelSpec& model, double k, double p);

// Maximizing consumption of the supremum above. nullopt means degenerate:
// the maximizer is not unique or the supremum is not attained (linear
// utility with p <= 1, or any utility with p <= 0).
std::optional<double> optimal_control(const ModelSpec& model, double k, double p);

// H(k, V'(k)) - rho V(k), extended-real. Uses the candidate's own derivative
// (analytic or interpolant), never a finite difference, so classical-solution
// checks at 1e-9 tolerances stay meaningful.
ExtendedReal hjb_residual(const ModelSpec& model, const CandidateValueFn& candidate, double k);

struct ResidualProfile {
    std::vector<double> grid;
    std::vector<ExtendedReal> residual;
    std::vector<double> value;       // V(k) per grid point
    std::vector<double> derivative;  // V'(k) per grid point
    double sup_norm_finite = 0.0;    // max |residual| over finite entries
    int count_infinite = 0;
};

ResidualProfile residual_profile(const ModelSpec& model, const CandidateValueFn& candidate,
                                 const std::vector<double>& grid);

// CSV columns: k, residual, V, Vprime. Infinite residuals are written as the
// literals "+inf" / "-inf".
std::string residual_profile_csv(const ResidualProfile& profile);

}  // namespace hjblab
