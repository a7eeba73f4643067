#include "hjblab/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjblab/errors.hpp"
#include "hjblab/hamiltonian.hpp"
#include "hjblab/io.hpp"

namespace hjblab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// GridFn
// ---------------------------------------------------------------------------

GridFn::GridFn(std::vector<double> knots, std::vector<double> values,
               std::vector<double> derivatives)
    : knots_(std::move(knots)), values_(std::move(values)),
      derivatives_(std::move(derivatives)) {
    if (knots_.size() < 2 || knots_.size() != values_.size() ||
        knots_.size() != derivatives_.size())
        throw DomainError("GridFn: need >= 2 knots with matching values/derivatives");
    for (size_t i = 0; i < knots_.size(); ++i) {
        if (!(knots_[i] > 0)) throw DomainError("GridFn: knots must be positive");
        if (i > 0 && !(knots_[i] > knots_[i - 1]))
            throw DomainError("GridFn: knots must be strictly increasing");
    }
}

GridFn GridFn::from_values(std::vector<double> knots, std::vector<double> values) {
    const size_t n = knots.size();
    if (n < 2 || values.size() != n) throw DomainError("GridFn: need >= 2 knots");
    std::vector<double> h(n - 1), s(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = knots[i + 1] - knots[i];
        s[i] = (values[i + 1] - values[i]) / h[i];
    }
    std::vector<double> d(n);
    if (n == 2) {
        d[0] = d[1] = s[0];
    } else {
        // Fritsch-Carlson slopes: weighted harmonic means inside, shape-limited
        // three-point estimates at the ends. Monotone data stays monotone.
        for (size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] * s[i] <= 0) {
                d[i] = 0.0;
            } else {
                const double w1 = 2 * h[i] + h[i - 1];
                const double w2 = h[i] + 2 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
            }
        }
        auto endpoint = [](double h0, double h1, double s0, double s1) {
            double d0 = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if (d0 * s0 <= 0) return 0.0;
            if (s0 * s1 < 0 && std::fabs(d0) > 3 * std::fabs(s0)) return 3 * s0;
            return d0;
        };
        d[0] = endpoint(h[0], h[1], s[0], s[1]);
        d[n - 1] = endpoint(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    }
    return GridFn(std::move(knots), std::move(values), std::move(d));
}

size_t GridFn::locate(double k) const {
    if (k < knots_.front() || k > knots_.back())
        throw DomainError("GridFn: k=" + fmt_double(k) + " outside knot span [" +
                          fmt_double(knots_.front()) + ", " + fmt_double(knots_.back()) + "]");
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), k);
    size_t i = static_cast<size_t>(it - knots_.begin());
    if (i > 0) --i;
    if (i + 1 >= knots_.size()) i = knots_.size() - 2;
    return i;
}

double GridFn::eval(double k) const {
    const size_t i = locate(k);
    const double h = knots_[i + 1] - knots_[i];
    const double t = (k - knots_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * values_[i] + (t3 - 2 * t2 + t) * h * derivatives_[i] +
           (-2 * t3 + 3 * t2) * values_[i + 1] + (t3 - t2) * h * derivatives_[i + 1];
}

double GridFn::deriv(double k) const {
    const size_t i = locate(k);
    const double h = knots_[i + 1] - knots_[i];
    const double t = (k - knots_[i]) / h;
    const double t2 = t * t;
    return (6 * t2 - 6 * t) * (values_[i] - values_[i + 1]) / h +
           (3 * t2 - 4 * t + 1) * derivatives_[i] + (3 * t2 - 2 * t) * derivatives_[i + 1];
}

std::string GridFn::to_csv() const {
    std::ostringstream out;
    out << "k,V,Vprime\n";
    for (size_t i = 0; i < knots_.size(); ++i)
        out << fmt_double(knots_[i]) << ',' << fmt_double(values_[i]) << ','
            << fmt_double(derivatives_[i]) << '\n';
    return out.str();
}

GridFn GridFn::from_csv(const std::string& text) {
    std::vector<double> k, v, d;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("k,", 0) == 0) continue;  // header
        }
        double a = 0, b = 0, c = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
            throw ParseError("grid CSV row must be k,V,Vprime", line);
        k.push_back(a);
        v.push_back(b);
        d.push_back(c);
    }
    return GridFn(std::move(k), std::move(v), std::move(d));
}

// ---------------------------------------------------------------------------
// CandidateValueFn
// ---------------------------------------------------------------------------

CandidateValueFn::CandidateValueFn(Prop1Family f) : form_(std::move(f)) {
    const auto& p = std::get<Prop1Family>(form_);
    if (!(p.A > 0) || !(p.rho > 0)) throw DomainError("prop1 family: A, rho must be positive");
}
CandidateValueFn::CandidateValueFn(ClairautGeneral f) : form_(std::move(f)) {
    if (!(std::get<ClairautGeneral>(form_).A > 1))
        throw DomainError("clairaut line: A must exceed 1");
}
CandidateValueFn::CandidateValueFn(Prop2Singular f) : form_(std::move(f)) {}
CandidateValueFn::CandidateValueFn(AffineLine f) : form_(std::move(f)) {}
CandidateValueFn::CandidateValueFn(GridFn f) : form_(std::move(f)) {}
CandidateValueFn::CandidateValueFn(MinOf f) : form_(std::move(f)) {
    if (std::get<MinOf>(form_).parts.size() < 2)
        throw DomainError("min candidate needs >= 2 parts");
}

namespace {

double prop1_eval(const Prop1Family& f, double k) {
    return f.A * std::exp(2 * f.rho * (std::sqrt(k) - 1));
}

struct EvalVisitor {
    double k;
    double operator()(const Prop1Family& f) const { return prop1_eval(f, k); }
    double operator()(const ClairautGeneral& f) const { return f.A * k + 0.25 / (f.A - 1); }
    double operator()(const Prop2Singular&) const { return k + std::sqrt(k); }
    double operator()(const AffineLine& f) const { return f.slope * k + f.intercept; }
    double operator()(const GridFn& f) const { return f.eval(k); }
    double operator()(const MinOf& f) const {
        double v = f.parts.front().eval(k);
        for (size_t i = 1; i < f.parts.size(); ++i) v = std::min(v, f.parts[i].eval(k));
        return v;
    }
};

struct DerivVisitor {
    double k;
    double operator()(const Prop1Family& f) const {
        return f.rho * prop1_eval(f, k) / std::sqrt(k);
    }
    double operator()(const ClairautGeneral& f) const { return f.A; }
    double operator()(const Prop2Singular&) const { return 1 + 0.5 / std::sqrt(k); }
    double operator()(const AffineLine& f) const { return f.slope; }
    double operator()(const GridFn& f) const { return f.deriv(k); }
    double operator()(const MinOf& f) const {
        const double v = EvalVisitor{k}(f);
        const double tol = 1e-12 * std::max(1.0, std::fabs(v));
        double slope = 0.0;
        bool have = false;
        for (const CandidateValueFn& part : f.parts) {
            if (part.eval(k) <= v + tol) {
                const double s = part.deriv(k);
                if (have && std::fabs(s - slope) > 1e-12 * std::max(1.0, std::fabs(slope)))
                    throw DomainError("min candidate: derivative queried at a kink, k=" +
                                      fmt_double(k));
                slope = s;
                have = true;
            }
        }
        return slope;
    }
};

}  // namespace

double CandidateValueFn::eval(double k) const {
    if (!(k > 0)) throw DomainError("candidate eval: k must be positive");
    return std::visit(EvalVisitor{k}, form_);
}

double CandidateValueFn::deriv(double k) const {
    if (!(k > 0)) throw DomainError("candidate deriv: k must be positive");
    return std::visit(DerivVisitor{k}, form_);
}

std::optional<Interval> CandidateValueFn::domain() const {
    if (const GridFn* g = std::get_if<GridFn>(&form_)) return g->domain();
    if (const MinOf* m = std::get_if<MinOf>(&form_)) {
        std::optional<Interval> dom;
        for (const CandidateValueFn& part : m->parts) {
            if (auto d = part.domain()) {
                if (!dom) dom = d;
                else dom = Interval{std::max(dom->lo, d->lo), std::min(dom->hi, d->hi)};
            }
        }
        return dom;
    }
    return std::nullopt;
}

std::string CandidateValueFn::describe() const {
    struct Visitor {
        std::string operator()(const Prop1Family& f) const {
            return "prop1:A=" + fmt_double(f.A) + ",rho=" + fmt_double(f.rho);
        }
        std::string operator()(const ClairautGeneral& f) const {
            return "clairaut:A=" + fmt_double(f.A);
        }
        std::string operator()(const Prop2Singular&) const { return "prop2-singular"; }
        std::string operator()(const AffineLine& f) const {
            return "affine:slope=" + fmt_double(f.slope) +
                   ",intercept=" + fmt_double(f.intercept);
        }
        std::string operator()(const GridFn& f) const {
            return "grid[" + std::to_string(f.knots().size()) + " knots on " +
                   fmt_double(f.knots().front()) + ".." + fmt_double(f.knots().back()) + "]";
        }
        std::string operator()(const MinOf& f) const {
            std::string s = "min(";
            for (size_t i = 0; i < f.parts.size(); ++i) {
                if (i) s += ",";
                s += f.parts[i].describe();
            }
            return s + ")";
        }
    };
    return std::visit(Visitor{}, form_);
}

// ---------------------------------------------------------------------------
// Family analysis
// ---------------------------------------------------------------------------

double prop1_min_A(double rho) {
    if (!(rho > 0)) throw DomainError("prop1_min_A: rho must be positive");
    // V'(k)/A = rho e^{2 rho (sqrt k - 1)} / sqrt k is minimized at
    // k = 1 / (4 rho^2); invert the minimum.
    const double k_hat = 1.0 / (4 * rho * rho);
    const double min_ratio = rho * std::exp(2 * rho * (std::sqrt(k_hat) - 1)) / std::sqrt(k_hat);
    return 1.0 / min_ratio;
}

bool DivergenceReport::all_pass() const {
    if (!non_concave) return false;
    return std::all_of(thresholds.begin(), thresholds.end(),
                       [](const Threshold& t) { return t.pass; });
}

DivergenceReport divergence_check(const Prop1Family& family) {
    const CandidateValueFn v{family};
    DivergenceReport report;
    for (double m : {10.0, 100.0, 1000.0}) {
        DivergenceReport::Threshold t;
        t.m = m;
        // The slope is monotone on each side of its minimum at 1/(4 rho^2),
        // so one witness per side certifies the whole tail.
        for (int j = 1; j <= 300; ++j) {
            const double k = std::pow(10.0, -j);
            if (v.deriv(k) > m) {
                t.k_small = k;
                break;
            }
        }
        for (int j = 1; j <= 300; ++j) {
            const double k = std::pow(10.0, j);
            if (v.deriv(k) > m) {
                t.k_large = k;
                break;
            }
        }
        t.pass = t.k_small > 0 && t.k_large > 0 && v.deriv(t.k_small / 10) > m &&
                 v.deriv(t.k_large * 10) > m;
        report.thresholds.push_back(t);
    }
    // Hunt a chord violation on log triples around the slope minimum.
    const double k_hat = 1.0 / (4 * family.rho * family.rho);
    for (double span : {3.0, 10.0, 30.0, 100.0}) {
        const double a = k_hat / span, b = k_hat, c = k_hat * span * span / 4;
        const double chord = v.eval(a) + (v.eval(c) - v.eval(a)) * (b - a) / (c - a);
        if (v.eval(b) < chord - 1e-9) {
            report.chord_triple[0] = a;
            report.chord_triple[1] = b;
            report.chord_triple[2] = c;
            report.chord_gap = chord - v.eval(b);
            report.non_concave = true;
            break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Implicit-ODE construction of a grid candidate
// ---------------------------------------------------------------------------

namespace {

// Root of H(k, p) = target in p, on the branch dictated by the side of the
// steady state. H(k, .) is convex with its minimum at p_m = u'(f(k)); right
// of k* the solution slope lies on the decreasing branch (0, p_m], left of
// k* on the increasing branch [p_m, inf). Near the anchor the equation has a
// double root and rho V - min_p H vanishes quadratically, so stage noise of
// the outer integrator can push it a shade negative there; the near window
// clamps that to the minimizer instead of treating it as bracket loss.
double costate_root(const ModelSpec& model, double k, double target, bool right_of_star,
                    double k_star, double near_window) {
    const double p_m = u_prime(model.utility, f_eval(model.production, k));
    const double h_min = hamiltonian(model, k, p_m).value();
    const double scale = std::max({1.0, std::fabs(target), std::fabs(h_min)});
    const double gap = target - h_min;
    if (gap <= 0) {
        const bool near_anchor = std::fabs(k - k_star) <= near_window;
        const double tol = near_anchor ? 2e-6 : 1e-9;
        if (gap < -tol * scale)
            throw SolveFailedError("costate root lost: rho V dropped below min_p H at k=" +
                                       fmt_double(k), k);
        return p_m;  // double root, up to rounding
    }

    auto h_at = [&](double p) { return hamiltonian(model, k, p); };

    double lo, hi;
    if (right_of_star) {
        // Bracket downward: H rises toward +inf (or the conjugate domain
        // edge) as p falls off the minimum.
        hi = p_m;
        lo = p_m;
        const ConjugateDomain dom = u_conjugate_domain(model.utility);
        bool bracketed = false;
        for (int i = 0; i < 200; ++i) {
            lo = 0.5 * (lo + dom.p_lo);
            const ExtendedReal h = h_at(lo);
            if (!h.is_finite() || h.value() >= target) {
                bracketed = true;
                break;
            }
        }
        if (!bracketed)
            throw SolveFailedError("costate root: no lower bracket at k=" + fmt_double(k), k);
    } else {
        lo = p_m;
        hi = p_m;
        bool bracketed = false;
        for (int i = 0; i < 200; ++i) {
            hi = hi * 2;
            if (h_at(hi).value() >= target) {
                bracketed = true;
                break;
            }
        }
        if (!bracketed)
            throw SolveFailedError("costate root: no upper bracket at k=" + fmt_double(k), k);
    }

    // Bisection; H is monotone on the bracketed branch.
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        const ExtendedReal h = h_at(mid);
        const bool below_target = h.is_finite() && h.value() < target;
        // On the right branch H decreases in p; on the left it increases.
        if (right_of_star) {
            if (below_target) hi = mid;
            else lo = mid;
        } else {
            if (below_target) lo = mid;
            else hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct OdeSide {
    std::vector<double> k, v;
};

// RK4 march of dV/dk = p(k, V) from (k_start, v_start) to k_end.
OdeSide integrate_value_ode(const ModelSpec& model, double k_star, double k_start,
                            double v_start, double k_end, double step) {
    OdeSide side;
    const double dir = k_end > k_start ? 1.0 : -1.0;
    double k = k_start, v = v_start;
    side.k.push_back(k);
    side.v.push_back(v);
    const double near_window = 16 * step;
    auto slope = [&](double kk, double vv) {
        const bool right = kk >= k_star;
        return costate_root(model, kk, model.rho * vv, right, k_star, near_window);
    };
    const size_t max_steps = 20'000'000;
    while (dir * (k_end - k) > 1e-15 * std::max(1.0, std::fabs(k_end))) {
        if (side.k.size() > max_steps)
            throw SolveFailedError("value ODE: step budget exhausted", k);
        double h = dir * step;
        if (dir * (k + h - k_end) > 0) h = k_end - k;
        if (std::fabs(h) < 1e-9 * step) {
            // Accumulated rounding left a sliver; snap the endpoint instead
            // of emitting a near-duplicate knot.
            side.k.back() = k_end;
            break;
        }
        const double s1 = slope(k, v);
        const double s2 = slope(k + 0.5 * h, v + 0.5 * h * s1);
        const double s3 = slope(k + 0.5 * h, v + 0.5 * h * s2);
        const double s4 = slope(k + h, v + h * s3);
        v += h / 6.0 * (s1 + 2 * s2 + 2 * s3 + s4);
        k += h;
        side.k.push_back(k);
        side.v.push_back(v);
    }
    return side;
}

GridFn assemble_grid(const ModelSpec& model, double k_star, double near_window,
                     const OdeSide& left, const OdeSide& right, double* residual_sup) {
    std::vector<double> knots, values, derivs;
    knots.reserve(left.k.size() + right.k.size());
    // left side was integrated downward; reverse it, drop its duplicate k*.
    for (size_t i = left.k.size(); i-- > 1;) {
        knots.push_back(left.k[i]);
        values.push_back(left.v[i]);
    }
    for (size_t i = 0; i < right.k.size(); ++i) {
        knots.push_back(right.k[i]);
        values.push_back(right.v[i]);
    }
    derivs.resize(knots.size());
    double sup = 0.0;
    for (size_t i = 0; i < knots.size(); ++i) {
        const bool right_side = knots[i] >= k_star;
        derivs[i] =
            costate_root(model, knots[i], model.rho * values[i], right_side, k_star, near_window);
        const ExtendedReal h = hamiltonian(model, knots[i], derivs[i]);
        if (h.is_finite())
            sup = std::max(sup, std::fabs(h.value() - model.rho * values[i]));
        else
            sup = kInf;
    }
    if (residual_sup) *residual_sup = sup;
    return GridFn(std::move(knots), std::move(values), std::move(derivs));
}

}  // namespace

HjbSolveResult solve_hjb_from_steady_state(const ModelSpec& model, Interval k_range,
                                           double step, HjbSolveStrategy strategy) {
    const AuditReport audit = audit_assumptions(model, k_range);
    if (!audit["Thm2(i)"].pass)
        throw ConditionFailedError("Thm2(i)", audit["Thm2(i)"].witness);
    if (!audit["Thm2(ii)"].pass)
        throw ConditionFailedError("Thm2(ii)", audit["Thm2(ii)"].witness);

    const SteadyStateResult ss = find_steady_state(model, k_range);
    if (!ss.found())
        throw ConditionFailedError("isolated steady state",
                                   "rho stays in the subdifferential on [" +
                                       fmt_double(ss.flat.lo) + ", " + fmt_double(ss.flat.hi) +
                                       "]");
    const double k_star = ss.k_star;
    if (!(k_range.lo < k_star && k_star < k_range.hi))
        throw ConditionFailedError("steady state interior",
                                   "k*=" + fmt_double(k_star) + " not inside range");

    const double v_star = u_eval(model.utility, f_eval(model.production, k_star)).value() /
                          model.rho;
    const double p_star = u_prime(model.utility, f_eval(model.production, k_star));
    if (step <= 0) step = 1e-3 * k_star;

    OdeSide left;
    if (strategy == HjbSolveStrategy::SteadyStateAnchor) {
        left = integrate_value_ode(model, k_star, k_star, v_star, k_range.lo, step);
    } else {
        // Shooting fallback: bisect on V(k_lo) so that integrating the left
        // branch up to k* lands on the anchor value. Overshoot / undershoot
        // is monotone in the initial value.
        const double k_lo = k_range.lo;
        double v_lo = 1e-8, v_hi = v_star;  // V is increasing, so V(k_lo) < v*
        auto shoot = [&](double v0) {
            try {
                const OdeSide up = integrate_value_ode(model, k_star, k_lo, v0, k_star, step);
                return up.v.back() - v_star;
            } catch (const SolveFailedError&) {
                return -kInf;  // rho V fell below min H: initial value too small
            }
        };
        if (shoot(v_hi) < 0)
            throw SolveFailedError("shooting: no overshoot bracket", k_lo);
        for (int i = 0; i < 100 && v_hi - v_lo > 1e-14 * std::max(1.0, v_hi); ++i) {
            const double mid = 0.5 * (v_lo + v_hi);
            if (shoot(mid) < 0) v_lo = mid;
            else v_hi = mid;
        }
        const OdeSide up =
            integrate_value_ode(model, k_star, k_lo, 0.5 * (v_lo + v_hi), k_star, step);
        // Store in the downward orientation expected by assemble_grid.
        left.k.assign(up.k.rbegin(), up.k.rend());
        left.v.assign(up.v.rbegin(), up.v.rend());
        // Snap the anchor end exactly.
        left.k.front() = k_star;
        left.v.front() = v_star;
    }
    const OdeSide right = integrate_value_ode(model, k_star, k_star, v_star, k_range.hi, step);

    double residual_sup = 0.0;
    GridFn grid = assemble_grid(model, k_star, 16 * step, left, right, &residual_sup);
    return HjbSolveResult{std::move(grid), k_star, v_star, p_star, residual_sup};
}

// ---------------------------------------------------------------------------
// min_combine
// ---------------------------------------------------------------------------

CandidateValueFn min_combine(std::vector<CandidateValueFn> parts) {
    if (parts.size() < 2) throw DomainError("min_combine: need >= 2 candidates");
    MinOf combined;
    combined.parts = std::move(parts);

    // Common scan window.
    double lo = 1e-3, hi = 1e3;
    for (const CandidateValueFn& part : combined.parts) {
        if (auto d = part.domain()) {
            lo = std::max(lo, d->lo);
            hi = std::min(hi, d->hi);
        }
    }
    if (lo < hi) {
        const std::vector<double> scan = log_grid(lo, hi, 2048);
        auto min_at = [&](double k) {
            double v = combined.parts.front().eval(k);
            for (size_t i = 1; i < combined.parts.size(); ++i)
                v = std::min(v, combined.parts[i].eval(k));
            return v;
        };
        for (size_t a = 0; a < combined.parts.size(); ++a) {
            for (size_t b = a + 1; b < combined.parts.size(); ++b) {
                auto diff = [&](double k) {
                    return combined.parts[a].eval(k) - combined.parts[b].eval(k);
                };
                for (size_t i = 0; i + 1 < scan.size(); ++i) {
                    const double d0 = diff(scan[i]), d1 = diff(scan[i + 1]);
                    if (d0 == 0.0 || d0 * d1 >= 0) continue;
                    double x0 = scan[i], x1 = scan[i + 1];
                    for (int it = 0; it < 200 && x1 - x0 > 1e-15 * x1; ++it) {
                        const double xm = 0.5 * (x0 + x1);
                        (diff(x0) * diff(xm) <= 0 ? x1 : x0) = xm;
                    }
                    const double kink = 0.5 * (x0 + x1);
                    // Only a kink of the min if the crossing pair is active there.
                    const double v = min_at(kink);
                    if (combined.parts[a].eval(kink) <= v + 1e-9 * std::max(1.0, std::fabs(v)))
                        combined.kinks.push_back(kink);
                }
            }
        }
        std::sort(combined.kinks.begin(), combined.kinks.end());
        combined.kinks.erase(std::unique(combined.kinks.begin(), combined.kinks.end(),
                                         [](double x, double y) {
                                             return std::fabs(x - y) <= 1e-9 * std::max(1.0, y);
                                         }),
                             combined.kinks.end());
    }
    return CandidateValueFn(std::move(combined));
}

// ---------------------------------------------------------------------------
// Descriptor parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::vector<std::pair<std::string, std::string>> parse_params(const std::string& text,
                                                              const std::string& desc) {
    std::vector<std::pair<std::string, std::string>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key=value in candidate parameters", desc);
        out.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    }
    return out;
}

double parse_num(const std::string& text, const std::string& desc) {
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad number '" + text + "'", desc);
    }
}

std::vector<std::string> split_top_level(const std::string& inner, const std::string& desc) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char ch : inner) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (depth != 0) throw ParseError("unbalanced parentheses", desc);
    parts.push_back(trim(cur));
    return parts;
}

}  // namespace

CandidateValueFn parse_candidate(const std::string& descriptor, const ModelSpec& model) {
    const std::string desc = trim(descriptor);
    if (desc.empty()) throw ParseError("empty candidate descriptor", descriptor);

    if (desc == "prop2-singular") return CandidateValueFn(Prop2Singular{});

    if (desc.rfind("min(", 0) == 0) {
        if (desc.back() != ')') throw ParseError("min(...) not closed", desc);
        const std::string inner = desc.substr(4, desc.size() - 5);
        std::vector<CandidateValueFn> parts;
        for (const std::string& part : split_top_level(inner, desc))
            parts.push_back(parse_candidate(part, model));
        return min_combine(std::move(parts));
    }

    const size_t colon = desc.find(':');
    if (colon == std::string::npos)
        throw ParseError("unknown candidate descriptor '" + desc + "'", desc);
    const std::string head = desc.substr(0, colon);
    const std::string rest = desc.substr(colon + 1);

    if (head == "prop1") {
        Prop1Family family{0.0, model.rho};
        bool have_a = false;
        for (const auto& [key, value] : parse_params(rest, desc)) {
            if (key == "A") {
                family.A = parse_num(value, desc);
                have_a = true;
            } else if (key == "rho") {
                family.rho = parse_num(value, desc);
            } else {
                throw ParseError("unknown parameter '" + key + "' for prop1", desc);
            }
        }
        if (!have_a) throw ParseError("prop1 needs A=", desc);
        return CandidateValueFn(family);
    }
    if (head == "clairaut") {
        ClairautGeneral line{0.0};
        bool have_a = false;
        for (const auto& [key, value] : parse_params(rest, desc)) {
            if (key == "A") {
                line.A = parse_num(value, desc);
                have_a = true;
            } else {
                throw ParseError("unknown parameter '" + key + "' for clairaut", desc);
            }
        }
        if (!have_a) throw ParseError("clairaut needs A=", desc);
        if (!(line.A > 1)) throw ParseError("clairaut needs A > 1", desc);
        return CandidateValueFn(line);
    }
    if (head == "affine") {
        AffineLine line{0.0, 0.0};
        bool have_slope = false;
        for (const auto& [key, value] : parse_params(rest, desc)) {
            if (key == "slope") {
                line.slope = parse_num(value, desc);
                have_slope = true;
            } else if (key == "intercept") {
                line.intercept = parse_num(value, desc);
            } else {
                throw ParseError("unknown parameter '" + key + "' for affine", desc);
            }
        }
        if (!have_slope) throw ParseError("affine needs slope=", desc);
        return CandidateValueFn(line);
    }
    if (head == "grid") {
        return CandidateValueFn(GridFn::from_csv(read_text_file(rest)));
    }
    throw ParseError("unknown candidate kind '" + head + "'", desc);
}

}  // namespace hjblab
