#include "hjblab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjblab/errors.hpp"
#include "hjblab/io.hpp"

namespace hjblab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Utility catalog
// ---------------------------------------------------------------------------

UtilitySpec UtilitySpec::crra(double theta) {
    if (!(theta > 0)) throw DomainError("CRRA: theta must be positive");
    return {UtilityKind::CRRA, theta, 0.0};
}

UtilitySpec UtilitySpec::scaled_sqrt(double a) {
    if (!(a > 0)) throw DomainError("ScaledSqrt: a must be positive");
    return {UtilityKind::ScaledSqrt, 0.0, a};
}

std::string UtilitySpec::describe() const {
    switch (kind) {
        case UtilityKind::Linear: return "u(c)=c";
        case UtilityKind::SqrtShift: return "u(c)=c+sqrt(c)";
        case UtilityKind::CRRA: return "CRRA(theta=" + fmt_double(theta) + ")";
        case UtilityKind::ScaledSqrt: return "u(c)=" + fmt_double(a) + "*sqrt(c)";
    }
    return "?";
}

ExtendedReal u_eval(const UtilitySpec& u, double c) {
    if (!(c >= 0)) throw DomainError("u_eval: c must be nonnegative");
    switch (u.kind) {
        case UtilityKind::Linear:
            return c;
        case UtilityKind::SqrtShift:
            return c + std::sqrt(c);
        case UtilityKind::CRRA:
            if (c == 0 && u.theta >= 1) return ExtendedReal::minus_inf();
            if (u.theta == 1) return std::log(c);
            return (std::pow(c, 1 - u.theta) - 1) / (1 - u.theta);
        case UtilityKind::ScaledSqrt:
            return u.a * std::sqrt(c);
    }
    throw DomainError("u_eval: unknown kind");
}

double u_prime(const UtilitySpec& u, double c) {
    if (!(c > 0)) throw DomainError("u_prime: c must be positive");
    switch (u.kind) {
        case UtilityKind::Linear: return 1.0;
        case UtilityKind::SqrtShift: return 1.0 + 0.5 / std::sqrt(c);
        case UtilityKind::CRRA: return std::pow(c, -u.theta);
        case UtilityKind::ScaledSqrt: return 0.5 * u.a / std::sqrt(c);
    }
    throw DomainError("u_prime: unknown kind");
}

bool MarginalRange::contains(double p) const {
    if (p < lo || (lo_open && p == lo)) return false;
    if (p > hi || (hi_open && p == hi)) return false;
    return true;
}

std::string MarginalRange::describe() const {
    std::ostringstream ss;
    ss << (lo_open ? "(" : "[") << fmt_double(lo) << ", ";
    if (hi == kInf) ss << "inf)";
    else ss << fmt_double(hi) << (hi_open ? ")" : "]");
    return ss.str();
}

MarginalRange u_prime_range(const UtilitySpec& u) {
    switch (u.kind) {
        case UtilityKind::Linear: return {1.0, 1.0, false, false};
        case UtilityKind::SqrtShift: return {1.0, kInf, true, true};
        case UtilityKind::CRRA: return {0.0, kInf, true, true};
        case UtilityKind::ScaledSqrt: return {0.0, kInf, true, true};
    }
    throw DomainError("u_prime_range: unknown kind");
}

double u_prime_inverse(const UtilitySpec& u, double p) {
    const MarginalRange range = u_prime_range(u);
    if (u.kind == UtilityKind::Linear)
        throw NotInvertibleError("u' is constant, inverse undefined", range.lo, range.hi,
                                 range.lo_open, range.hi_open);
    if (!range.contains(p))
        throw NotInvertibleError("p outside range of u' " + range.describe(), range.lo,
                                 range.hi, range.lo_open, range.hi_open);
    switch (u.kind) {
        case UtilityKind::SqrtShift: {
            const double d = 2 * (p - 1);
            return 1.0 / (d * d);
        }
        case UtilityKind::CRRA:
            return std::pow(p, -1.0 / u.theta);
        case UtilityKind::ScaledSqrt: {
            const double s = 0.5 * u.a / p;
            return s * s;
        }
        default:
            throw DomainError("u_prime_inverse: unknown kind");
    }
}

ExtendedReal u_conjugate(const UtilitySpec& u, double p) {
    if (!(p > 0))
        throw DomainError("u_conjugate: p must be positive (the supremum diverges for p <= 0)");
    switch (u.kind) {
        case UtilityKind::Linear:
            // sup (1 - p) c: 0 at p >= 1, divergent below.
            return p >= 1 ? ExtendedReal(0.0) : ExtendedReal::plus_inf();
        case UtilityKind::SqrtShift:
            // optimum at c = 1 / (2(p-1))^2 for p > 1.
            return p > 1 ? ExtendedReal(0.25 / (p - 1)) : ExtendedReal::plus_inf();
        case UtilityKind::CRRA: {
            // optimum at c = p^{-1/theta}.
            if (u.theta == 1) return -std::log(p) - 1.0;
            const double q = std::pow(p, (u.theta - 1) / u.theta);
            return q * u.theta / (1 - u.theta) - 1.0 / (1 - u.theta);
        }
        case UtilityKind::ScaledSqrt:
            // optimum at c = (a / 2p)^2, value a^2 / (4p).
            return u.a * u.a / (4 * p);
    }
    throw DomainError("u_conjugate: unknown kind");
}

ConjugateDomain u_conjugate_domain(const UtilitySpec& u) {
    switch (u.kind) {
        case UtilityKind::Linear: return {1.0, false};
        case UtilityKind::SqrtShift: return {1.0, true};
        case UtilityKind::CRRA: return {0.0, true};
        case UtilityKind::ScaledSqrt: return {0.0, true};
    }
    throw DomainError("u_conjugate_domain: unknown kind");
}

// ---------------------------------------------------------------------------
// Production catalog
// ---------------------------------------------------------------------------

ProductionSpec ProductionSpec::linear_prod() {
    ProductionSpec f;
    f.kind = ProductionKind::LinearProd;
    return f;
}

ProductionSpec ProductionSpec::affine_capped(double k2, double p2, ProductionSpec base) {
    if (!(k2 > 0) || !(p2 > 0)) throw DomainError("AffineCapped: k2, p2 must be positive");
    ProductionSpec f;
    f.kind = ProductionKind::AffineCapped;
    f.k2 = k2;
    f.p2 = p2;
    f.base = std::make_shared<const ProductionSpec>(std::move(base));
    return f;
}

ProductionSpec ProductionSpec::piecewise_linear(std::vector<AffinePiece> pieces) {
    if (pieces.empty()) throw DomainError("PiecewiseLinearConcave: no pieces");
    std::sort(pieces.begin(), pieces.end(),
              [](const AffinePiece& a, const AffinePiece& b) { return a.slope > b.slope; });
    for (size_t i = 1; i < pieces.size(); ++i)
        if (!(pieces[i].slope < pieces[i - 1].slope))
            throw DomainError("PiecewiseLinearConcave: slopes must be strictly decreasing");
    ProductionSpec f;
    f.kind = ProductionKind::PiecewiseLinearConcave;
    f.pieces = std::move(pieces);
    if (f_eval(f, 0.0) != 0.0)
        throw DomainError("PiecewiseLinearConcave: f(0) must be 0");
    return f;
}

std::string ProductionSpec::describe() const {
    switch (kind) {
        case ProductionKind::Sqrt: return "f(k)=sqrt(k)";
        case ProductionKind::LinearProd: return "f(k)=k";
        case ProductionKind::AffineCapped:
            return "g(k)=" + fmt_double(p2) + "*(k-" + fmt_double(k2) + ")+f(" +
                   fmt_double(k2) + ")";
        case ProductionKind::PiecewiseLinearConcave: {
            std::string s = "min(";
            for (size_t i = 0; i < pieces.size(); ++i) {
                if (i) s += ", ";
                s += fmt_double(pieces[i].slope) + "*k+" + fmt_double(pieces[i].intercept);
            }
            return s + ")";
        }
    }
    return "?";
}

double f_eval(const ProductionSpec& f, double k) {
    if (!(k >= 0)) throw DomainError("f_eval: k must be nonnegative");
    switch (f.kind) {
        case ProductionKind::Sqrt: return std::sqrt(k);
        case ProductionKind::LinearProd: return k;
        case ProductionKind::AffineCapped:
            return f.p2 * (k - f.k2) + f_eval(*f.base, f.k2);
        case ProductionKind::PiecewiseLinearConcave: {
            double v = f.pieces.front().at(k);
            for (size_t i = 1; i < f.pieces.size(); ++i) v = std::min(v, f.pieces[i].at(k));
            return v;
        }
    }
    throw DomainError("f_eval: unknown kind");
}

SubdifferentialInterval f_subdifferential(const ProductionSpec& f, double k) {
    if (!(k > 0)) throw DomainError("f_subdifferential: k must be positive");
    switch (f.kind) {
        case ProductionKind::Sqrt: {
            const double d = 0.5 / std::sqrt(k);
            return {d, d};
        }
        case ProductionKind::LinearProd: return {1.0, 1.0};
        case ProductionKind::AffineCapped: return {f.p2, f.p2};
        case ProductionKind::PiecewiseLinearConcave: {
            const double v = f_eval(f, k);
            // Active pieces at k; ties mark a kink. Exact arithmetic on the
            // affine pieces keeps the interval exact.
            double lo = kInf, hi = -kInf;
            for (const AffinePiece& piece : f.pieces) {
                if (piece.at(k) == v) {
                    lo = std::min(lo, piece.slope);
                    hi = std::max(hi, piece.slope);
                }
            }
            return {lo, hi};
        }
    }
    throw DomainError("f_subdifferential: unknown kind");
}

// ---------------------------------------------------------------------------
// Steady state
// ---------------------------------------------------------------------------

namespace {

// Piecewise-affine view of f where one exists; lets the steady-state search
// resolve kinks and flat segments exactly.
std::optional<std::vector<AffinePiece>> affine_pieces_of(const ProductionSpec& f) {
    switch (f.kind) {
        case ProductionKind::LinearProd: return std::vector<AffinePiece>{{1.0, 0.0}};
        case ProductionKind::AffineCapped: {
            const double intercept = f_eval(f, 0.0);
            return std::vector<AffinePiece>{{f.p2, intercept}};
        }
        case ProductionKind::PiecewiseLinearConcave: return f.pieces;
        default: return std::nullopt;
    }
}

}  // namespace

SteadyStateResult find_steady_state(const ModelSpec& model, Interval search) {
    const double rho = model.rho;
    const ProductionSpec& f = model.production;
    if (!(search.lo > 0) || !(search.lo < search.hi))
        throw DomainError("find_steady_state: search interval must be positive and ordered");

    const SubdifferentialInterval at_lo = f_subdifferential(f, search.lo);
    const SubdifferentialInterval at_hi = f_subdifferential(f, search.hi);

    // Flat segments first: if rho is carried by a whole affine piece the
    // steady state is a nondegenerate interval, not a point.
    if (auto pieces = affine_pieces_of(f)) {
        for (const AffinePiece& piece : *pieces) {
            if (piece.slope == rho) {
                // Segment of k where this piece is the active minimum.
                double lo = search.lo, hi = search.hi;
                for (const AffinePiece& other : *pieces) {
                    if (other.slope == piece.slope) continue;
                    // piece <= other  <=>  (slope - slope') k <= i' - i
                    const double bound =
                        (other.intercept - piece.intercept) / (piece.slope - other.slope);
                    if (other.slope < piece.slope) hi = std::min(hi, bound);
                    else lo = std::max(lo, bound);
                }
                if (lo < hi) {
                    SteadyStateResult r;
                    r.status = SteadyStateResult::Status::NotIsolated;
                    r.flat = {lo, hi};
                    return r;
                }
            }
        }
    }

    if (at_lo.contains(rho)) return {SteadyStateResult::Status::Found, search.lo, {}};
    if (at_hi.contains(rho)) return {SteadyStateResult::Status::Found, search.hi, {}};

    if (at_lo.lower <= rho)
        throw ConditionFailedError("D+f(k1) > rho",
                                   "D+f(" + fmt_double(search.lo) + ")=" +
                                       fmt_double(at_lo.lower) + " <= rho=" + fmt_double(rho));
    if (at_hi.lower >= rho)
        throw ConditionFailedError("p2 < rho",
                                   "min of subdifferential at k2=" + fmt_double(search.hi) +
                                       " is " + fmt_double(at_hi.lower) +
                                       " >= rho=" + fmt_double(rho));

    // Exact kink resolution for piecewise-affine f. A pairwise intersection
    // is only a kink of the envelope if both pieces are active there, so
    // membership is confirmed through the subdifferential (pieces may be
    // dominated everywhere and never touch the min).
    if (auto pieces = affine_pieces_of(f)) {
        for (size_t i = 0; i < pieces->size(); ++i) {
            for (size_t j = i + 1; j < pieces->size(); ++j) {
                const AffinePiece& a = (*pieces)[i];  // steeper
                const AffinePiece& b = (*pieces)[j];
                if (!(a.slope > rho && rho > b.slope)) continue;
                const double kink = (b.intercept - a.intercept) / (a.slope - b.slope);
                if (kink < search.lo || kink > search.hi) continue;
                if (f_subdifferential(f, kink).contains(rho))
                    return {SteadyStateResult::Status::Found, kink, {}};
            }
        }
        throw ConditionFailedError("rho in subdifferential",
                                   "no active kink carries rho on the search interval");
    }

    // Smooth strictly-decreasing derivative (Sqrt): plain bisection to 1e-10.
    double lo = search.lo, hi = search.hi;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const SubdifferentialInterval s = f_subdifferential(f, mid);
        if (s.contains(rho)) return {SteadyStateResult::Status::Found, mid, {}};
        if (s.lower > rho) lo = mid;
        else hi = mid;
    }
    return {SteadyStateResult::Status::Found, 0.5 * (lo + hi), {}};
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

bool AuditReport::all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const AuditCondition& c) { return c.pass; });
}

const AuditCondition& AuditReport::operator[](const std::string& name) const {
    for (const AuditCondition& c : conditions)
        if (c.name == name) return c;
    throw Error("audit condition not found: " + name);
}

AuditReport audit_assumptions(const ModelSpec& model, Interval search) {
    AuditReport report;

    report.conditions.push_back(
        {"R", model.rho > 0, "rho=" + fmt_double(model.rho)});

    // U and F hold by catalog construction; the witness names the member.
    report.conditions.push_back({"U", true, model.utility.describe()});

    const bool f_zero_ok = model.production.kind == ProductionKind::AffineCapped
                               ? false
                               : f_eval(model.production, 0.0) == 0.0;
    report.conditions.push_back(
        {"F", f_zero_ok,
         model.production.describe() + ", f(0)=" + fmt_double(f_eval(model.production, 0.0))});

    // (i) u' decreasing with range equal to the whole positive half-line.
    {
        bool pass = false;
        std::string witness;
        if (model.utility.kind == UtilityKind::Linear) {
            witness = "u' constant";
        } else {
            const MarginalRange r = u_prime_range(model.utility);
            const bool full = r.lo == 0.0 && r.lo_open && r.hi == kInf;
            pass = full;
            witness = "range(u')=" + r.describe();
        }
        report.conditions.push_back({"Thm2(i)", pass, witness});
    }

    // (ii) probed at the ends of the search interval.
    {
        const SubdifferentialInterval at_lo = f_subdifferential(model.production, search.lo);
        const SubdifferentialInterval at_hi = f_subdifferential(model.production, search.hi);
        const double p2 = at_hi.lower;
        const bool pass = at_lo.lower > model.rho && model.rho > p2 && p2 > 0;
        std::ostringstream witness;
        witness << "k1=" << fmt_double(search.lo) << " D+f(k1)=" << fmt_double(at_lo.lower)
                << ", k2=" << fmt_double(search.hi) << " p2=" << fmt_double(p2);
        if (!pass) {
            if (!(at_lo.lower > model.rho)) witness << "; D+f(k1) <= rho fails";
            if (!(model.rho > p2)) witness << "; no p2 < rho";
            if (!(p2 > 0)) witness << "; p2 <= 0";
        }
        report.conditions.push_back({"Thm2(ii)", pass, witness.str()});
    }

    return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

double require_number(const nlohmann::json& j, const std::string& key,
                      const std::string& path) {
    if (!j.contains(key) || !j[key].is_number())
        throw ParseError("expected number field '" + key + "'", path);
    return j[key].get<double>();
}

UtilitySpec utility_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ParseError("expected string field 'kind'", path + ".kind");
    const std::string kind = j["kind"].get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    if (kind == "Linear") return UtilitySpec::linear();
    if (kind == "SqrtShift") return UtilitySpec::sqrt_shift();
    if (kind == "CRRA") return UtilitySpec::crra(require_number(params, "theta", path + ".params"));
    if (kind == "ScaledSqrt")
        return UtilitySpec::scaled_sqrt(require_number(params, "a", path + ".params"));
    throw ParseError("unknown utility kind '" + kind + "'", path + ".kind");
}

ProductionSpec production_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ParseError("expected string field 'kind'", path + ".kind");
    const std::string kind = j["kind"].get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    if (kind == "Sqrt") return ProductionSpec::sqrt_prod();
    if (kind == "LinearProd") return ProductionSpec::linear_prod();
    if (kind == "AffineCapped") {
        if (!params.contains("base"))
            throw ParseError("AffineCapped needs 'base'", path + ".params.base");
        return ProductionSpec::affine_capped(
            require_number(params, "k2", path + ".params"),
            require_number(params, "p2", path + ".params"),
            production_from_json(params["base"], path + ".params.base"));
    }
    if (kind == "PiecewiseLinearConcave") {
        if (!params.contains("pieces") || !params["pieces"].is_array())
            throw ParseError("PiecewiseLinearConcave needs array 'pieces'",
                             path + ".params.pieces");
        std::vector<AffinePiece> pieces;
        int idx = 0;
        for (const auto& pj : params["pieces"]) {
            const std::string ppath = path + ".params.pieces[" + std::to_string(idx++) + "]";
            pieces.push_back({require_number(pj, "slope", ppath),
                              require_number(pj, "intercept", ppath)});
        }
        try {
            return ProductionSpec::piecewise_linear(std::move(pieces));
        } catch (const DomainError& e) {
            throw ParseError(e.what(), path + ".params.pieces");
        }
    }
    throw ParseError("unknown production kind '" + kind + "'", path + ".kind");
}

nlohmann::json production_to_json(const ProductionSpec& f) {
    nlohmann::json j;
    switch (f.kind) {
        case ProductionKind::Sqrt:
            j["kind"] = "Sqrt";
            j["params"] = nlohmann::json::object();
            break;
        case ProductionKind::LinearProd:
            j["kind"] = "LinearProd";
            j["params"] = nlohmann::json::object();
            break;
        case ProductionKind::AffineCapped:
            j["kind"] = "AffineCapped";
            j["params"]["k2"] = f.k2;
            j["params"]["p2"] = f.p2;
            j["params"]["base"] = production_to_json(*f.base);
            break;
        case ProductionKind::PiecewiseLinearConcave: {
            j["kind"] = "PiecewiseLinearConcave";
            auto arr = nlohmann::json::array();
            for (const AffinePiece& p : f.pieces)
                arr.push_back({{"slope", p.slope}, {"intercept", p.intercept}});
            j["params"]["pieces"] = arr;
            break;
        }
    }
    return j;
}

}  // namespace

ModelSpec model_from_json(const nlohmann::json& j) {
    ModelSpec model;
    if (!j.contains("rho") || !j["rho"].is_number())
        throw ParseError("expected number field 'rho'", "rho");
    model.rho = j["rho"].get<double>();
    if (!(model.rho > 0)) throw ParseError("rho must be positive", "rho");
    if (!j.contains("utility")) throw ParseError("missing 'utility'", "utility");
    if (!j.contains("production")) throw ParseError("missing 'production'", "production");
    model.utility = utility_from_json(j["utility"], "utility");
    model.production = production_from_json(j["production"], "production");
    return model;
}

nlohmann::json model_to_json(const ModelSpec& model) {
    nlohmann::json j;
    j["rho"] = model.rho;
    switch (model.utility.kind) {
        case UtilityKind::Linear:
            j["utility"] = {{"kind", "Linear"}, {"params", nlohmann::json::object()}};
            break;
        case UtilityKind::SqrtShift:
            j["utility"] = {{"kind", "SqrtShift"}, {"params", nlohmann::json::object()}};
            break;
        case UtilityKind::CRRA:
            j["utility"] = {{"kind", "CRRA"}, {"params", {{"theta", model.utility.theta}}}};
            break;
        case UtilityKind::ScaledSqrt:
            j["utility"] = {{"kind", "ScaledSqrt"}, {"params", {{"a", model.utility.a}}}};
            break;
    }
    j["production"] = production_to_json(model.production);
    return j;
}

ModelSpec model_from_file(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw ParseError(e.what(), path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), path);
    }
    return model_from_json(j);
}

}  // namespace hjblab
