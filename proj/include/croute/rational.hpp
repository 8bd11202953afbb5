#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <cstdint>
#include <string>

namespace croute {

using Int = boost::multiprecision::mpz_int;
using Rat = boost::multiprecision::mpq_rational;

inline Int rat_floor(const Rat& r) {
    Int q = numerator(r) / denominator(r);
    if (numerator(r) < 0 && q * denominator(r) != numerator(r)) --q;
    return q;
}

inline Int rat_ceil(const Rat& r) {
    Int q = numerator(r) / denominator(r);
    if (numerator(r) > 0 && q * denominator(r) != numerator(r)) ++q;
    return q;
}

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline int64_t to_i64(const Int& v) { return v.convert_to<int64_t>(); }

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Canonical "p/q" form used in JSON reports so that equal inputs give
// byte-identical output.
inline std::string rat_str(const Rat& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

inline Int int_lcm(const Int& a, const Int& b) {
    if (a == 0 || b == 0) return 0;
    return a / gcd(a, b) * b;
}

}  // namespace croute
