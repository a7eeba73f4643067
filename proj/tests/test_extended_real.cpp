#include "doctest.h"

#include <cmath>

#include "hjblab/extended_real.hpp"
#include "hjblab/io.hpp"

using namespace hjblab;

TEST_CASE("finite arithmetic and total order") {
    const ExtendedReal a(1.5), b(-2.0);
    CHECK((a + b).value() == doctest::Approx(-0.5));
    CHECK((a - b).value() == doctest::Approx(3.5));
    CHECK(b < a);
    CHECK(a <= a);
    CHECK(abs(b).value() == doctest::Approx(2.0));
}

TEST_CASE("infinities absorb finite values") {
    const ExtendedReal inf = ExtendedReal::plus_inf();
    const ExtendedReal ninf = ExtendedReal::minus_inf();
    CHECK((inf + ExtendedReal(5.0)).is_plus_inf());
    CHECK((ExtendedReal(5.0) - inf).is_minus_inf());
    CHECK(ninf < ExtendedReal(-1e300));
    CHECK(ExtendedReal(1e300) < inf);
    CHECK(abs(ninf).is_plus_inf());
}

TEST_CASE("invalid arithmetic is an error, never NaN") {
    CHECK_THROWS_AS(ExtendedReal(std::nan("")), DomainError);
    CHECK_THROWS_AS(ExtendedReal::plus_inf() + ExtendedReal::minus_inf(), DomainError);
    CHECK_THROWS_AS(ExtendedReal::plus_inf() - ExtendedReal::plus_inf(), DomainError);
    CHECK_THROWS_AS(ExtendedReal::plus_inf().value(), DomainError);
}

TEST_CASE("formatting emits the inf literals") {
    CHECK(fmt_extended(ExtendedReal::plus_inf()) == "+inf");
    CHECK(fmt_extended(ExtendedReal::minus_inf()) == "-inf");
    CHECK(fmt_extended(ExtendedReal(0.5)) == "0.5");
}

TEST_CASE("doubles round-trip through fmt_double") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -2.718281828459045}) {
        const std::string s = fmt_double(v);
        CHECK(std::stod(s) == v);
    }
}
