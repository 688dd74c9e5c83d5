#pragma once

#include <gmpxx.h>

#include <string>

namespace csl {

/// Exact integer used everywhere: literals, constant folding, interpreter
/// values, logic constants. 2^256 arithmetic must never round or wrap.
using BigInt = mpz_class;

inline BigInt big_pow(const BigInt& base, unsigned long exp) {
    BigInt out;
    mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exp);
    return out;
}

/// Truncating division (rounds toward zero), matching the language's `/`.
inline BigInt big_div_trunc(const BigInt& a, const BigInt& b) {
    BigInt q;
    mpz_tdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

/// Remainder paired with truncating division: sign follows the dividend.
inline BigInt big_mod_trunc(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_tdiv_r(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

inline std::string big_str(const BigInt& v) { return v.get_str(); }

} // namespace csl
