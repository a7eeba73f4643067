#include "hjblab/hamiltonian.hpp"

#include <cmath>
#include <sstream>

#include "hjblab/candidates.hpp"
#include "hjblab/errors.hpp"
#include "hjblab/io.hpp"

namespace hjblab {

ExtendedReal hamiltonian(const ModelSpec& model, double k, double p) {
    if (!(k > 0)) throw DomainError("hamiltonian: k must be positive");
    if (p <= 0) return ExtendedReal::plus_inf();
    const ExtendedReal conj = u_conjugate(model.utility, p);
    if (conj.is_plus_inf()) return ExtendedReal::plus_inf();
    return f_eval(model.production, k) * p + conj.value();
}

std::optional<double> optimal_control(const ModelSpec& model, double k, double p) {
    if (!(k > 0)) throw DomainError("optimal_control: k must be positive");
    if (p <= 0) return std::nullopt;  // supremum not attained
    try {
        return u_prime_inverse(model.utility, p);
    } catch (const NotInvertibleError& e) {
        // Above the whole range of u': marginal utility never catches up
        // with p, so c = 0 is the unique maximizer. At or below the range,
        // the maximizer is non-unique or the supremum is not attained.
        if (std::isfinite(e.range_hi) && p > e.range_hi) return 0.0;
        return std::nullopt;
    }
}

ExtendedReal hjb_residual(const ModelSpec& model, const CandidateValueFn& candidate, double k) {
    const ExtendedReal h = hamiltonian(model, k, candidate.deriv(k));
    return h - ExtendedReal(model.rho * candidate.eval(k));
}

ResidualProfile residual_profile(const ModelSpec& model, const CandidateValueFn& candidate,
                                 const std::vector<double>& grid) {
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0) || (i > 0 && !(grid[i] > grid[i - 1])))
            throw DomainError("residual_profile: grid must be positive and strictly increasing");
    }
    ResidualProfile profile;
    profile.grid = grid;
    profile.residual.reserve(grid.size());
    profile.value.reserve(grid.size());
    profile.derivative.reserve(grid.size());
    for (double k : grid) {
        const double v = candidate.eval(k);
        const double p = candidate.deriv(k);
        const ExtendedReal h = hamiltonian(model, k, p);
        const ExtendedReal r = h - ExtendedReal(model.rho * v);
        profile.residual.push_back(r);
        profile.value.push_back(v);
        profile.derivative.push_back(p);
        if (r.is_finite())
            profile.sup_norm_finite = std::max(profile.sup_norm_finite, std::fabs(r.value()));
        else
            ++profile.count_infinite;
    }
    return profile;
}

std::string residual_profile_csv(const ResidualProfile& profile) {
    std::ostringstream out;
    out << "k,residual,V,Vprime\n";
    for (size_t i = 0; i < profile.grid.size(); ++i) {
        out << fmt_double(profile.grid[i]) << ',' << fmt_extended(profile.residual[i]) << ','
            << fmt_double(profile.value[i]) << ',' << fmt_double(profile.derivative[i]) << '\n';
    }
    return out.str();
}

}  // namespace hjblab
