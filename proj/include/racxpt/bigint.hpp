#pragma once

// Minimal unsigned big integer, sized for exact type-class combinatorics.
// Values are capped at 512 bits; callers that may overflow the cap use
// ClassSize below, which falls back to a log2 representation.

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace racxpt {

class BigUint {
  public:
    BigUint() : limbs_{0} {}
    explicit BigUint(std::uint64_t v) : limbs_{v} {}

    static constexpr int kMaxBits = 512;

    bool is_zero() const { return limbs_.size() == 1 && limbs_[0] == 0; }

    bool fits_u64() const { return limbs_.size() == 1; }
    std::uint64_t as_u64() const {
        if (!fits_u64()) throw std::overflow_error("BigUint::as_u64: value too large");
        return limbs_[0];
    }

    // True if the multiply stayed within kMaxBits.
    bool mul_u64(std::uint64_t m) {
        if (m == 0) { limbs_.assign(1, 0); return true; }
        unsigned __int128 carry = 0;
        for (auto& limb : limbs_) {
            unsigned __int128 cur = (unsigned __int128)limb * m + carry;
            limb = (std::uint64_t)cur;
            carry = cur >> 64;
        }
        while (carry != 0) {
            limbs_.push_back((std::uint64_t)carry);
            carry >>= 64;
        }
        return bit_length() <= kMaxBits;
    }

    // Exact division; throws if a remainder appears.
    void div_u64_exact(std::uint64_t d) {
        if (d == 0) throw std::invalid_argument("BigUint: division by zero");
        unsigned __int128 rem = 0;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            unsigned __int128 cur = (rem << 64) | limbs_[i];
            limbs_[i] = (std::uint64_t)(cur / d);
            rem = cur % d;
        }
        if (rem != 0) throw std::logic_error("BigUint: division was not exact");
        trim();
    }

    // Requires *this >= other.
    void sub(const BigUint& other) {
        if (compare(other) < 0) throw std::underflow_error("BigUint::sub underflow");
        std::uint64_t borrow = 0;
        for (std::size_t i = 0; i < limbs_.size(); ++i) {
            unsigned __int128 rhs = (unsigned __int128)(i < other.limbs_.size() ? other.limbs_[i] : 0) + borrow;
            unsigned __int128 lhs = limbs_[i];
            if (lhs >= rhs) {
                limbs_[i] = (std::uint64_t)(lhs - rhs);
                borrow = 0;
            } else {
                limbs_[i] = (std::uint64_t)((lhs + ((unsigned __int128)1 << 64)) - rhs);
                borrow = 1;
            }
        }
        trim();
    }

    void add(const BigUint& other) {
        std::size_t sz = std::max(limbs_.size(), other.limbs_.size());
        limbs_.resize(sz, 0);
        unsigned __int128 carry = 0;
        for (std::size_t i = 0; i < sz; ++i) {
            unsigned __int128 cur = (unsigned __int128)limbs_[i] + carry +
                                    (i < other.limbs_.size() ? other.limbs_[i] : 0);
            limbs_[i] = (std::uint64_t)cur;
            carry = cur >> 64;
        }
        if (carry) limbs_.push_back((std::uint64_t)carry);
    }

    int compare(const BigUint& other) const {
        if (limbs_.size() != other.limbs_.size())
            return limbs_.size() < other.limbs_.size() ? -1 : 1;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            if (limbs_[i] != other.limbs_[i]) return limbs_[i] < other.limbs_[i] ? -1 : 1;
        }
        return 0;
    }
    bool operator==(const BigUint& o) const { return compare(o) == 0; }
    bool operator<(const BigUint& o) const { return compare(o) < 0; }
    bool operator<=(const BigUint& o) const { return compare(o) <= 0; }

    int bit_length() const {
        const std::uint64_t top = limbs_.back();
        if (top == 0) return 0;  // only for the zero value
        int bits = 64 - __builtin_clzll(top);
        return bits + 64 * (int)(limbs_.size() - 1);
    }

    double to_double() const {
        double r = 0.0;
        for (std::size_t i = limbs_.size(); i-- > 0;) r = r * 18446744073709551616.0 + (double)limbs_[i];
        return r;
    }

    // log2 with ~1e-15 relative accuracy (uses the top 128 bits).
    double log2() const {
        if (is_zero()) throw std::domain_error("BigUint::log2 of zero");
        int bl = bit_length();
        if (bl <= 63) return std::log2((double)limbs_[0]);
        unsigned __int128 top = 0;
        int shift = bl - 100;  // keep ~100 significant bits
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            int lo = 64 * (int)i;
            if (lo + 64 <= shift) break;
            int s = lo - shift;
            if (s >= 0)
                top |= (unsigned __int128)limbs_[i] << s;
            else
                top |= (unsigned __int128)limbs_[i] >> (-s);
        }
        long double mant = (long double)(std::uint64_t)(top >> 64) * 18446744073709551616.0L +
                           (long double)(std::uint64_t)top;
        return (double)(std::log2(mant) + (long double)shift);
    }

    std::string to_string() const {
        if (is_zero()) return "0";
        std::vector<std::uint64_t> tmp = limbs_;
        std::string out;
        auto all_zero = [&] {
            for (auto v : tmp)
                if (v) return false;
            return true;
        };
        while (!all_zero()) {
            unsigned __int128 rem = 0;
            for (std::size_t i = tmp.size(); i-- > 0;) {
                unsigned __int128 cur = (rem << 64) | tmp[i];
                tmp[i] = (std::uint64_t)(cur / 10);
                rem = cur % 10;
            }
            out.push_back(char('0' + (int)rem));
        }
        return std::string(out.rbegin(), out.rend());
    }

  private:
    void trim() {
        while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
    }
    std::vector<std::uint64_t> limbs_;  // little-endian base 2^64
};

// Exact count with a log2 fallback once the exact value would exceed 512 bits.
struct ClassSize {
    BigUint exact;
    bool is_exact = true;
    double log2_value = 0.0;  // always valid

    double log2() const { return is_exact ? exact.log2() : log2_value; }
    bool fits_u64() const { return is_exact && exact.fits_u64(); }
    std::uint64_t as_u64() const { return exact.as_u64(); }
};

// n! / prod(counts!) computed exactly as a product of binomials.
inline ClassSize multinomial(std::uint64_t n, const std::vector<std::uint64_t>& counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total != n) throw std::invalid_argument("multinomial: counts do not sum to n");
    ClassSize r;
    r.exact = BigUint(1);
    std::uint64_t remaining = n;
    double lg = 0.0;
    bool exact_ok = true;
    for (auto c : counts) {
        // multiply by C(remaining, c) incrementally: exact at every step
        for (std::uint64_t i = 1; i <= c; ++i) {
            if (exact_ok) {
                exact_ok = r.exact.mul_u64(remaining - c + i);
                if (exact_ok) r.exact.div_u64_exact(i);
            }
            lg += std::log2((double)(remaining - c + i)) - std::log2((double)i);
        }
        remaining -= c;
    }
    r.is_exact = exact_ok;
    r.log2_value = exact_ok ? r.exact.log2() : lg;
    return r;
}

inline ClassSize binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return ClassSize{BigUint(0), true, 0.0};
    return multinomial(n, {k, n - k});
}

}  // namespace racxpt
