#pragma once

#include <cmath>
#include <string>

#include "hjblab/errors.hpp"

namespace hjblab {

// A real number extended with +inf / -inf. The Hamiltonian and the utility
// at zero genuinely take infinite values, so infinities are first-class here
// rather than sentinel doubles. NaN is never stored: constructing from NaN or
// forming inf - inf throws DomainError.
class ExtendedReal {
public:
    ExtendedReal() : v_(0.0), kind_(Kind::Finite) {}

    ExtendedReal(double v) : v_(v), kind_(Kind::Finite) {  // implicit: doubles promote
        if (std::isnan(v)) throw DomainError("ExtendedReal: NaN is not a value");
        if (std::isinf(v)) kind_ = v > 0 ? Kind::PlusInf : Kind::MinusInf;
    }

    static ExtendedReal plus_inf() {
        ExtendedReal x;
        x.kind_ = Kind::PlusInf;
        return x;
    }
    static ExtendedReal minus_inf() {
        ExtendedReal x;
        x.kind_ = Kind::MinusInf;
        return x;
    }

    bool is_finite() const { return kind_ == Kind::Finite; }
    bool is_plus_inf() const { return kind_ == Kind::PlusInf; }
    bool is_minus_inf() const { return kind_ == Kind::MinusInf; }

    // Finite value; throws if infinite.
    double value() const {
        if (!is_finite()) throw DomainError("ExtendedReal: value() on " + to_string());
        return v_;
    }

    ExtendedReal operator-() const {
        if (is_plus_inf()) return minus_inf();
        if (is_minus_inf()) return plus_inf();
        return ExtendedReal(-v_);
    }

    friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
        if (a.is_finite() && b.is_finite()) return ExtendedReal(a.v_ + b.v_);
        if ((a.is_plus_inf() && b.is_minus_inf()) || (a.is_minus_inf() && b.is_plus_inf()))
            throw DomainError("ExtendedReal: inf + (-inf) is undefined");
        return a.is_finite() ? b : a;
    }

    friend ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) {
        return a + (-b);
    }

    friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
        if (a.kind_ != b.kind_) return false;
        return !a.is_finite() || a.v_ == b.v_;
    }
    friend bool operator!=(const ExtendedReal& a, const ExtendedReal& b) { return !(a == b); }
    friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
        if (a.kind_ == b.kind_) return a.is_finite() && a.v_ < b.v_;
        if (a.is_minus_inf()) return true;
        if (b.is_minus_inf()) return false;
        return b.is_plus_inf();
    }
    friend bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }
    friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return !(b < a); }
    friend bool operator>=(const ExtendedReal& a, const ExtendedReal& b) { return !(a < b); }

    friend ExtendedReal abs(const ExtendedReal& a) {
        if (a.is_finite()) return ExtendedReal(std::fabs(a.v_));
        return plus_inf();
    }

    // "+inf", "-inf" or the shortest round-trip decimal form.
    std::string to_string() const;

private:
    enum class Kind { Finite, PlusInf, MinusInf };
    double v_;
    Kind kind_;
};

}  // namespace hjblab
