#include "hjblab/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjblab/errors.hpp"
#include "hjblab/hamiltonian.hpp"
#include "hjblab/io.hpp"

namespace hjblab {

namespace {

// Chord test on shrinking symmetric stencils around k. Concave means
// V(k) >= (V(k-h) + V(k+h)) / 2 up to rounding noise.
void require_locally_concave(const CandidateValueFn& candidate, double k) {
    Interval dom{0.0, std::numeric_limits<double>::infinity()};
    if (auto d = candidate.domain()) dom = *d;
    const double vk = candidate.eval(k);
    const double tol = 1e-9 * std::max(1.0, std::fabs(vk));
    for (double rel : {1e-2, 1e-3, 1e-4}) {
        const double h = rel * std::max(1.0, k);
        if (k - h <= dom.lo || k + h >= dom.hi || k - h <= 0) continue;
        const double mid = 0.5 * (candidate.eval(k - h) + candidate.eval(k + h));
        if (mid > vk + tol) throw NotConcaveError(k);
    }
}

}  // namespace

OneSidedDerivatives one_sided_derivatives(const CandidateValueFn& candidate, double k) {
    if (!(k > 0)) throw DomainError("one_sided_derivatives: k must be positive");
    require_locally_concave(candidate, k);

    if (const MinOf* m = candidate.get_if<MinOf>()) {
        const double v = candidate.eval(k);
        const double tol_active = 1e-12 * std::max(1.0, std::fabs(v));
        // At a kink of the pointwise min the right slope is the flattest
        // active one and the left slope the steepest. Parts may themselves
        // be kinked; recurse on their one-sided slopes.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const CandidateValueFn& part : m->parts) {
            if (part.eval(k) <= v + tol_active) {
                const OneSidedDerivatives inner = one_sided_derivatives(part, k);
                lo = std::min(lo, inner.d_plus);
                hi = std::max(hi, inner.d_minus);
            }
        }
        return {lo, hi};
    }

    const double d = candidate.deriv(k);
    return {d, d};
}

SubsolutionVerdict check_subsolution_at(const ModelSpec& model,
                                        const CandidateValueFn& candidate, double k,
                                        const ViscosityOptions& opts) {
    const OneSidedDerivatives d = one_sided_derivatives(candidate, k);
    if (d.kink()) {
        // A smooth minorant phi with phi(k) = V(k) would need
        // phi'(k) >= D- and phi'(k) <= D+ at once; no such test function
        // exists at a concave kink.
        return {SubStatus::Vacuous, 0.0};
    }
    const ExtendedReal h = hamiltonian(model, k, d.d_plus);
    const ExtendedReal gap = h - ExtendedReal(model.rho * candidate.eval(k));
    if (gap <= ExtendedReal(opts.tol)) return {SubStatus::Holds, gap};
    return {SubStatus::Violated, gap};
}

ConvexMinResult minimize_hamiltonian_over(const ModelSpec& model, double k, double p_lo,
                                          double p_hi) {
    if (!(p_lo <= p_hi)) throw DomainError("minimize_hamiltonian_over: bad interval");

    // Clip away the region where the conjugate diverges; H is +inf there, so
    // it never carries the minimum. If nothing is left, the minimum is +inf.
    const ConjugateDomain dom = u_conjugate_domain(model.utility);
    double lo = p_lo, hi = p_hi;
    if (!dom.finite_at(hi)) return {p_hi, ExtendedReal::plus_inf()};
    if (!dom.finite_at(lo)) {
        lo = dom.p_lo;
        if (dom.lo_open) lo = std::nextafter(lo, hi);
    }

    auto h_at = [&](double p) { return hamiltonian(model, k, p); };

    // Golden-section on the convex section; sampled checks can miss an
    // interior minimum, the section search cannot.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    ExtendedReal f1 = h_at(x1), f2 = h_at(x2);
    for (int i = 0; i < 200 && (b - a) > 1e-12 * std::max(1.0, std::fabs(b)); ++i) {
        if (f2 < f1) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = h_at(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = h_at(x1);
        }
    }
    double best_p = 0.5 * (a + b);
    ExtendedReal best = h_at(best_p);
    for (double p : {p_lo, p_hi, lo, hi}) {
        if (!dom.finite_at(p)) continue;
        const ExtendedReal h = h_at(p);
        if (h < best) {
            best = h;
            best_p = p;
        }
    }
    return {best_p, best};
}

SupersolutionVerdict check_supersolution_at(const ModelSpec& model,
                                            const CandidateValueFn& candidate, double k,
                                            const ViscosityOptions& opts) {
    const OneSidedDerivatives d = one_sided_derivatives(candidate, k);
    const double target = model.rho * candidate.eval(k);
    const ConvexMinResult min_h = minimize_hamiltonian_over(model, k, d.d_plus, d.d_minus);
    if (min_h.value >= ExtendedReal(target - opts.tol)) return {SuperStatus::Holds, 0.0, min_h.p};
    return {SuperStatus::Violated, target - min_h.value.value(), min_h.p};
}

ViscosityVerdict check_viscosity_at(const ModelSpec& model, const CandidateValueFn& candidate,
                                    double k, const ViscosityOptions& opts) {
    ViscosityVerdict verdict;
    verdict.k = k;
    const OneSidedDerivatives d = one_sided_derivatives(candidate, k);
    verdict.d_plus = d.d_plus;
    verdict.d_minus = d.d_minus;
    verdict.sub = check_subsolution_at(model, candidate, k, opts);
    verdict.super = check_supersolution_at(model, candidate, k, opts);
    return verdict;
}

ViscosityReport viscosity_report(const ModelSpec& model, const CandidateValueFn& candidate,
                                 const std::vector<double>& grid,
                                 const ViscosityOptions& opts) {
    ViscosityReport report;
    report.verdicts.reserve(grid.size());
    for (double k : grid) {
        const ViscosityVerdict verdict = check_viscosity_at(model, candidate, k, opts);
        if (!verdict.clean()) {
            ++report.violations;
            report.consistent_on_grid = false;
        }
        if (verdict.sub.status == SubStatus::Vacuous) ++report.vacuous;
        report.verdicts.push_back(verdict);
    }
    return report;
}

namespace {
const char* sub_status_name(SubStatus s) {
    switch (s) {
        case SubStatus::Holds: return "holds";
        case SubStatus::Violated: return "violated";
        case SubStatus::Vacuous: return "vacuous";
    }
    return "?";
}
}  // namespace

std::string viscosity_report_csv(const ViscosityReport& report) {
    std::ostringstream out;
    out << "k,d_plus,d_minus,sub_status,super_status,gap,worst_p\n";
    for (const ViscosityVerdict& v : report.verdicts) {
        std::string gap, worst_p;
        if (v.super.status == SuperStatus::Violated) {
            gap = fmt_double(v.super.gap);
            worst_p = fmt_double(v.super.worst_p);
        } else if (v.sub.status == SubStatus::Violated) {
            gap = fmt_extended(v.sub.gap);
        }
        out << fmt_double(v.k) << ',' << fmt_double(v.d_plus) << ',' << fmt_double(v.d_minus)
            << ',' << sub_status_name(v.sub.status) << ','
            << (v.super.status == SuperStatus::Holds ? "holds" : "violated") << ',' << gap
            << ',' << worst_p << '\n';
    }
    return out.str();
}

}  // namespace hjblab
