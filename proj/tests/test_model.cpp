#include "doctest.h"

#include <cmath>
#include <vector>

#include "hjblab/io.hpp"
#include "hjblab/model.hpp"
#include "oracles.hpp"

using namespace hjblab;

namespace {
const UtilitySpec kLinear = UtilitySpec::linear();
const UtilitySpec kSqrtShift = UtilitySpec::sqrt_shift();
const UtilitySpec kScaledSqrt2 = UtilitySpec::scaled_sqrt(2.0);

ProductionSpec min_k_halfk_plus1() {
    return ProductionSpec::piecewise_linear({{1.0, 0.0}, {0.5, 1.0}});
}
}  // namespace

TEST_CASE("utility evaluation") {
    CHECK(u_eval(kLinear, 2.0).value() == 2.0);
    CHECK(u_eval(kSqrtShift, 4.0).value() == 6.0);
    CHECK(u_eval(UtilitySpec::crra(1.0), 1.0).value() == 0.0);
    CHECK(u_eval(UtilitySpec::crra(1.0), 0.0).is_minus_inf());
    CHECK(u_eval(UtilitySpec::crra(2.0), 0.0).is_minus_inf());
    CHECK(u_eval(UtilitySpec::crra(0.5), 0.0).value() == doctest::Approx(-2.0));
    CHECK_THROWS_AS(u_eval(kLinear, -1.0), DomainError);
}

TEST_CASE("marginal utility") {
    CHECK(u_prime(kSqrtShift, 0.25) == doctest::Approx(2.0));
    CHECK(u_prime(kLinear, 17.0) == 1.0);
    CHECK(u_prime(kScaledSqrt2, 4.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(u_prime(kLinear, 0.0), DomainError);
}

TEST_CASE("inverse marginal utility") {
    CHECK(u_prime_inverse(kScaledSqrt2, 2.0) == doctest::Approx(0.25));
    CHECK(u_prime_inverse(kSqrtShift, 2.0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(u_prime_inverse(kLinear, 0.9), NotInvertibleError);
    // The error carries the range so callers can reason about the failure.
    try {
        u_prime_inverse(kSqrtShift, 0.5);
        FAIL("expected NotInvertibleError");
    } catch (const NotInvertibleError& e) {
        CHECK(e.range_lo == 1.0);
        CHECK(e.lo_open);
    }
}

TEST_CASE("inverse consistency where invertible") {
    for (const UtilitySpec& u : {kSqrtShift, kScaledSqrt2, UtilitySpec::crra(0.5),
                                 UtilitySpec::crra(1.0), UtilitySpec::crra(3.0)}) {
        for (double p : log_grid(u.kind == UtilityKind::SqrtShift ? 1.001 : 1e-3, 1e3, 60)) {
            const double c = u_prime_inverse(u, p);
            CHECK(u_prime(u, c) == doctest::Approx(p).epsilon(1e-10));
        }
    }
}

TEST_CASE("concave conjugate matches the grid-maximization oracle") {
    auto conj_oracle = [](const UtilitySpec& u, double p) {
        return oracles::grid_maximize(
            [&](double c) { return u_eval(u, c).value() - p * c; }, 0.0, 1e6);
    };
    CHECK(u_conjugate(kSqrtShift, 1.5).value() == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(conj_oracle(kSqrtShift, 1.5) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(u_conjugate(kScaledSqrt2, 1.0).value() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(conj_oracle(kScaledSqrt2, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(u_conjugate(kLinear, 0.9).is_plus_inf());
    CHECK(u_conjugate(kLinear, 1.0).value() == 0.0);
    CHECK_THROWS_AS(u_conjugate(kSqrtShift, 0.0), DomainError);
    CHECK_THROWS_AS(u_conjugate(kSqrtShift, -1.0), DomainError);

    // Conjugate correctness across a log grid of p, against the oracle.
    for (const UtilitySpec& u : {kSqrtShift, kScaledSqrt2}) {
        const double p_min = u_conjugate_domain(u).p_lo;
        for (double p : log_grid(p_min + 1e-3, 1e3, 40)) {
            const double exact = u_conjugate(u, p).value();
            const double scanned = conj_oracle(u, p);
            CHECK(std::fabs(exact - scanned) <= 1e-8 * std::max(1.0, std::fabs(exact)));
        }
    }
}

TEST_CASE("production evaluation and subdifferentials") {
    const ProductionSpec sqrt_f = ProductionSpec::sqrt_prod();
    const ProductionSpec lin = ProductionSpec::linear_prod();
    CHECK(f_eval(sqrt_f, 4.0) == 2.0);
    CHECK(f_eval(lin, 3.0) == 3.0);
    const ProductionSpec capped = ProductionSpec::affine_capped(1.0, 0.5, sqrt_f);
    CHECK(f_eval(capped, 0.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(f_eval(sqrt_f, -1.0), DomainError);

    CHECK(f_subdifferential(sqrt_f, 4.0).lower == doctest::Approx(0.25));
    CHECK(f_subdifferential(sqrt_f, 4.0).upper == doctest::Approx(0.25));
    const SubdifferentialInterval kink = f_subdifferential(min_k_halfk_plus1(), 2.0);
    CHECK(kink.lower == 0.5);
    CHECK(kink.upper == 1.0);
    CHECK(f_subdifferential(lin, 1.0).lower == 1.0);
    CHECK(f_subdifferential(lin, 1.0).upper == 1.0);
}

TEST_CASE("catalog members pass the chord concavity test") {
    std::vector<ProductionSpec> prods = {ProductionSpec::sqrt_prod(),
                                         ProductionSpec::linear_prod(), min_k_halfk_plus1()};
    for (const ProductionSpec& f : prods) {
        const std::vector<double> grid = log_grid(1e-3, 1e3, 40);
        for (size_t i = 0; i + 2 < grid.size(); ++i) {
            const double x = grid[i], y = grid[i + 1], z = grid[i + 2];
            const double chord =
                f_eval(f, x) + (f_eval(f, z) - f_eval(f, x)) * (y - x) / (z - x);
            CHECK(f_eval(f, y) >= chord - 1e-9 * std::max(1.0, std::fabs(chord)));
        }
    }
    for (const UtilitySpec& u : {kLinear, kSqrtShift, kScaledSqrt2, UtilitySpec::crra(2.0)}) {
        const std::vector<double> grid = log_grid(1e-2, 1e2, 40);
        for (size_t i = 0; i + 2 < grid.size(); ++i) {
            const double x = grid[i], y = grid[i + 1], z = grid[i + 2];
            const double ux = u_eval(u, x).value(), uz = u_eval(u, z).value();
            const double chord = ux + (uz - ux) * (y - x) / (z - x);
            CHECK(u_eval(u, y).value() >= chord - 1e-9 * std::max(1.0, std::fabs(chord)));
            CHECK(u_eval(u, z) > u_eval(u, x));  // increasing
        }
    }
}

TEST_CASE("steady state: smooth, kinked, and flat technologies") {
    const ModelSpec sqrt_model{1.0, kLinear, ProductionSpec::sqrt_prod()};
    const SteadyStateResult smooth = find_steady_state(sqrt_model, {0.01, 4.0});
    REQUIRE(smooth.found());
    CHECK(smooth.k_star == doctest::Approx(0.25).epsilon(1e-9));
    // Membership at the returned point, 1e-10 in k for the smooth member.
    const SubdifferentialInterval at_star =
        f_subdifferential(sqrt_model.production, smooth.k_star);
    CHECK(std::fabs(at_star.lower - 1.0) <= 1e-8);

    const ModelSpec kinked{0.75, kLinear, min_k_halfk_plus1()};
    const SteadyStateResult at_kink = find_steady_state(kinked, {0.1, 10.0});
    REQUIRE(at_kink.found());
    CHECK(at_kink.k_star == 2.0);  // exact for the piecewise-affine member
    CHECK(f_subdifferential(kinked.production, at_kink.k_star).contains(0.75));

    const ModelSpec flat{1.0, kLinear, ProductionSpec::linear_prod()};
    const SteadyStateResult not_isolated = find_steady_state(flat, {0.1, 10.0});
    CHECK(not_isolated.status == SteadyStateResult::Status::NotIsolated);

    const ModelSpec no_cross{2.0, kLinear, ProductionSpec::linear_prod()};
    CHECK_THROWS_AS(find_steady_state(no_cross, {0.1, 10.0}), ConditionFailedError);

    // A dominated piece never touches the envelope; its intersections with
    // other pieces are not kinks and must not be reported as steady states.
    const ProductionSpec with_dominated =
        ProductionSpec::piecewise_linear({{2.0, 0.0}, {1.0, 10.0}, {0.5, 1.0}});
    CHECK(f_eval(with_dominated, 10.0) == 6.0);  // the middle piece is inactive
    const ModelSpec dominated_model{0.8, kLinear, with_dominated};
    const SteadyStateResult at_real_kink = find_steady_state(dominated_model, {0.1, 20.0});
    REQUIRE(at_real_kink.found());
    CHECK(at_real_kink.k_star == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(f_subdifferential(with_dominated, at_real_kink.k_star).contains(0.8));
}

TEST_CASE("assumption audit on the three reference models") {
    const ModelSpec prop1{1.0, kLinear, ProductionSpec::sqrt_prod()};
    const AuditReport a1 = audit_assumptions(prop1);
    CHECK_FALSE(a1["Thm2(i)"].pass);
    CHECK(a1["Thm2(i)"].witness == "u' constant");
    CHECK(a1["Thm2(ii)"].pass);  // sqrt technology brackets rho = 1 on [0.01, 4]

    const ModelSpec prop2{1.0, kSqrtShift, ProductionSpec::linear_prod()};
    const AuditReport a2 = audit_assumptions(prop2);
    CHECK_FALSE(a2["Thm2(i)"].pass);
    CHECK(a2["Thm2(i)"].witness.find("(1, inf)") != std::string::npos);
    CHECK_FALSE(a2["Thm2(ii)"].pass);

    const ModelSpec thm2{1.0, kScaledSqrt2, ProductionSpec::sqrt_prod()};
    const AuditReport a3 = audit_assumptions(thm2);
    CHECK(a3.all_pass());
    CHECK(a3["Thm2(ii)"].witness.find("k1=0.01") != std::string::npos);
    CHECK(a3["Thm2(ii)"].witness.find("k2=4") != std::string::npos);
    CHECK(a3["Thm2(ii)"].witness.find("p2=0.25") != std::string::npos);
}

TEST_CASE("model JSON round-trips and rejects unknown kinds") {
    const ModelSpec thm2{1.0, kScaledSqrt2, ProductionSpec::sqrt_prod()};
    const ModelSpec back = model_from_json(model_to_json(thm2));
    CHECK(back.rho == thm2.rho);
    CHECK(back.utility.kind == UtilityKind::ScaledSqrt);
    CHECK(back.utility.a == 2.0);
    CHECK(back.production.kind == ProductionKind::Sqrt);

    const ModelSpec pwl{0.75, kLinear, min_k_halfk_plus1()};
    const ModelSpec back2 = model_from_json(model_to_json(pwl));
    CHECK(back2.production.pieces.size() == 2);
    CHECK(f_eval(back2.production, 2.0) == 2.0);

    nlohmann::json bad = model_to_json(thm2);
    bad["utility"]["kind"] = "Cobb";
    try {
        model_from_json(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.path == "utility.kind");
    }
    nlohmann::json bad_rho = model_to_json(thm2);
    bad_rho["rho"] = -1.0;
    CHECK_THROWS_AS(model_from_json(bad_rho), ParseError);
}
