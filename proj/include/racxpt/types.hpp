#pragma once

// Type-class combinatorics: empirical types, enumeration of type families,
// exact class sizes, lexicographic ranking inside classes, and uniform
// sampling of class members.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "alphabet.hpp"
#include "bigint.hpp"
#include "distribution.hpp"
#include "rng.hpp"

namespace racxpt {

// Exact rational joint type of one or more aligned length-n sequences.
struct EmpiricalType {
    std::vector<Alphabet> axes;
    std::vector<std::int64_t> counts;  // row-major over axes, sums to n
    std::int64_t n = 0;

    EmpiricalType() = default;
    EmpiricalType(std::vector<Alphabet> ax, std::vector<std::int64_t> c, std::int64_t len)
        : axes(std::move(ax)), counts(std::move(c)), n(len) {
        std::vector<int> shape;
        for (const auto& a : axes) shape.push_back(a.size);
        if (counts.size() != shape_cells(shape))
            throw std::invalid_argument("EmpiricalType: count tensor size mismatch");
        std::int64_t total = 0;
        for (auto v : counts) {
            if (v < 0) throw std::invalid_argument("EmpiricalType: negative count");
            total += v;
        }
        if (total != n) throw std::invalid_argument("EmpiricalType: counts do not sum to n");
    }

    std::vector<int> shape() const {
        std::vector<int> s;
        for (const auto& a : axes) s.push_back(a.size);
        return s;
    }

    JointDistribution to_distribution() const {
        std::vector<double> p(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) p[i] = (double)counts[i] / (double)n;
        return JointDistribution(axes, std::move(p));
    }

    bool operator==(const EmpiricalType& o) const { return n == o.n && counts == o.counts; }
};

// All count vectors over an alphabet of size k summing to n, in lexicographic
// order. Iterative odometer, no recursion.
inline std::vector<std::vector<std::int64_t>> enumerate_count_vectors(int k, std::int64_t n) {
    if (k < 1) throw std::invalid_argument("enumerate_count_vectors: k must be >= 1");
    if (n < 1) throw std::invalid_argument("enumerate_count_vectors: n must be >= 1");
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> c(k, 0);
    c[k - 1] = n;  // lexicographically smallest: all mass on the last symbol
    for (;;) {
        out.push_back(c);
        // next vector in lexicographic order: find rightmost position (not
        // last) that can be incremented by moving mass from the tail
        int i = k - 2;
        for (; i >= 0; --i) {
            std::int64_t tail = 0;
            for (int j = i + 1; j < k; ++j) tail += c[j];
            if (tail > 0) break;
        }
        if (i < 0) break;
        ++c[i];
        std::int64_t rest = 0;
        for (int j = i + 1; j < k; ++j) {
            rest += c[j];
            c[j] = 0;
        }
        c[k - 1] = rest - 1;
    }
    return out;
}

// P^n(X): all types of length-n sequences over `alphabet`.
inline std::vector<EmpiricalType> enumerate_types(const Alphabet& alphabet, std::int64_t n) {
    std::vector<EmpiricalType> out;
    for (auto& c : enumerate_count_vectors(alphabet.size, n))
        out.emplace_back(std::vector<Alphabet>{alphabet}, std::move(c), n);
    return out;
}

// P^n(X | P_u): conditional types over `alphabet` given a base type. Each
// result is the joint (U,X) count matrix with U-marginal equal to base.
inline std::vector<EmpiricalType> enumerate_conditional_types(const Alphabet& alphabet,
                                                              const EmpiricalType& base) {
    if (base.axes.size() != 1)
        throw std::invalid_argument("enumerate_conditional_types: base must be a 1-axis type");
    const int m = base.axes[0].size;
    const int k = alphabet.size;
    std::vector<std::vector<std::vector<std::int64_t>>> per_u(m);
    for (int u = 0; u < m; ++u) {
        if (base.counts[u] == 0)
            per_u[u] = {std::vector<std::int64_t>(k, 0)};
        else
            per_u[u] = enumerate_count_vectors(k, base.counts[u]);
    }
    std::vector<EmpiricalType> out;
    std::vector<std::size_t> pick(m, 0);
    for (;;) {
        std::vector<std::int64_t> joint((std::size_t)m * k, 0);
        for (int u = 0; u < m; ++u)
            for (int x = 0; x < k; ++x) joint[(std::size_t)u * k + x] = per_u[u][pick[u]][x];
        out.emplace_back(std::vector<Alphabet>{base.axes[0], alphabet}, std::move(joint), base.n);
        int i = m - 1;
        for (; i >= 0; --i) {
            if (++pick[i] < per_u[i].size()) break;
            pick[i] = 0;
        }
        if (i < 0) break;
    }
    return out;
}

// |T^n_P|: exact multinomial count of sequences with the given type.
inline ClassSize type_class_size(const EmpiricalType& t) {
    std::vector<std::uint64_t> c;
    c.reserve(t.counts.size());
    for (auto v : t.counts) c.push_back((std::uint64_t)v);
    return multinomial((std::uint64_t)t.n, c);
}

// |T^n_{V_{X|U}}(u)|: product over u-values of per-group multinomials. `cond`
// is the joint (U, X...) count tensor; the leading axis is U.
inline ClassSize conditional_class_size(const EmpiricalType& cond) {
    if (cond.axes.size() < 2)
        throw std::invalid_argument("conditional_class_size: need at least (U, X) axes");
    const int m = cond.axes[0].size;
    const std::size_t inner = cond.counts.size() / (std::size_t)m;
    ClassSize r;
    r.exact = BigUint(1);
    r.is_exact = true;
    r.log2_value = 0.0;
    for (int u = 0; u < m; ++u) {
        std::vector<std::uint64_t> c(inner);
        std::uint64_t nu = 0;
        for (std::size_t i = 0; i < inner; ++i) {
            c[i] = (std::uint64_t)cond.counts[(std::size_t)u * inner + i];
            nu += c[i];
        }
        ClassSize part = multinomial(nu, c);
        r.log2_value += part.log2();
        if (r.is_exact && part.is_exact) {
            BigUint acc = r.exact;
            bool ok = true;
            // multiply limb-wise via repeated u64 chunks would lose exactness;
            // instead multiply by the (guaranteed-exact) u64 when it fits,
            // otherwise drop to the log2 representation.
            if (part.exact.fits_u64()) {
                ok = acc.mul_u64(part.exact.as_u64());
            } else if (r.exact.fits_u64()) {
                acc = part.exact;
                ok = acc.mul_u64(r.exact.as_u64());
            } else {
                ok = false;
            }
            if (ok)
                r.exact = acc;
            else
                r.is_exact = false;
        } else {
            r.is_exact = false;
        }
    }
    return r;
}

// Joint type of aligned sequences (the axes follow the argument order).
inline EmpiricalType joint_type_of(const std::vector<Sequence>& seqs) {
    if (seqs.empty()) throw std::invalid_argument("joint_type_of: need at least one sequence");
    const std::size_t n = seqs[0].length();
    std::vector<Alphabet> axes;
    std::vector<int> shape;
    for (const auto& s : seqs) {
        if (s.length() != n) throw std::invalid_argument("joint_type_of: length mismatch");
        axes.push_back(s.alphabet);
        shape.push_back(s.alphabet.size);
    }
    auto strides = make_strides(shape);
    std::vector<std::int64_t> counts(shape_cells(shape), 0);
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t f = 0;
        for (std::size_t i = 0; i < seqs.size(); ++i)
            f += strides[i] * (std::size_t)seqs[i].symbols[t];
        ++counts[f];
    }
    return EmpiricalType(std::move(axes), std::move(counts), (std::int64_t)n);
}

inline EmpiricalType type_of(const Sequence& s) { return joint_type_of({s}); }

// Lexicographically smallest sequence with the given single-axis type.
inline Sequence smallest_in_class(const EmpiricalType& t) {
    if (t.axes.size() != 1) throw std::invalid_argument("smallest_in_class: 1-axis type required");
    std::vector<int> syms;
    syms.reserve((std::size_t)t.n);
    for (int x = 0; x < t.axes[0].size; ++x)
        for (std::int64_t i = 0; i < t.counts[x]; ++i) syms.push_back(x);
    return Sequence(t.axes[0], std::move(syms));
}

// Lexicographic rank of `seq` within its type class T^n_P.
inline BigUint rank_in_class(const Sequence& seq) {
    EmpiricalType t = type_of(seq);
    std::vector<std::uint64_t> rem;
    for (auto c : t.counts) rem.push_back((std::uint64_t)c);
    BigUint rank(0);
    std::uint64_t left = (std::uint64_t)seq.length();
    for (int sym : seq.symbols) {
        for (int s = 0; s < sym; ++s) {
            if (rem[s] == 0) continue;
            --rem[s];
            ClassSize below = multinomial(left - 1, rem);
            if (!below.is_exact) throw std::overflow_error("rank_in_class: class too large");
            rank.add(below.exact);
            ++rem[s];
        }
        --rem[sym];
        --left;
    }
    return rank;
}

// Inverse of rank_in_class: the sequence of lexicographic rank r in T^n_P.
inline Sequence unrank_in_class(const EmpiricalType& t, BigUint r) {
    if (t.axes.size() != 1) throw std::invalid_argument("unrank_in_class: 1-axis type required");
    std::vector<std::uint64_t> rem;
    for (auto c : t.counts) rem.push_back((std::uint64_t)c);
    std::vector<int> syms;
    std::uint64_t left = (std::uint64_t)t.n;
    for (std::int64_t pos = 0; pos < t.n; ++pos) {
        bool placed = false;
        for (int s = 0; s < t.axes[0].size; ++s) {
            if (rem[s] == 0) continue;
            --rem[s];
            ClassSize below = multinomial(left - 1, rem);
            if (!below.is_exact) throw std::overflow_error("unrank_in_class: class too large");
            if (r < below.exact) {
                syms.push_back(s);
                placed = true;
                break;
            }
            r.sub(below.exact);
            ++rem[s];
        }
        if (!placed) throw std::out_of_range("unrank_in_class: rank exceeds class size");
        --left;
    }
    return Sequence(t.axes[0], std::move(syms));
}

// Uniform member of T^n_P: a seeded shuffle of the multiset arrangement.
inline Sequence sample_from_class(const EmpiricalType& t, Rng& rng) {
    Sequence s = smallest_in_class(t);
    rng.shuffle(s.symbols);
    return s;
}

// Uniform member of T^n_{V_{X|U}}(u): shuffles each u-group independently.
// `cond` is the joint (U, X) count matrix as produced by
// enumerate_conditional_types.
inline Sequence sample_from_conditional_class(const Sequence& u, const EmpiricalType& cond,
                                              Rng& rng) {
    if (cond.axes.size() != 2)
        throw std::invalid_argument("sample_from_conditional_class: (U, X) type required");
    const int m = cond.axes[0].size;
    const int k = cond.axes[1].size;
    // verify the u-marginal matches the actual u sequence
    std::vector<std::int64_t> u_counts(m, 0);
    for (int sym : u.symbols) ++u_counts[sym];
    std::vector<std::vector<int>> pools(m);
    for (int uv = 0; uv < m; ++uv) {
        std::int64_t row = 0;
        for (int x = 0; x < k; ++x) row += cond.counts[(std::size_t)uv * k + x];
        if (row != u_counts[uv])
            throw std::invalid_argument(
                "sample_from_conditional_class: conditional type inconsistent with u");
        for (int x = 0; x < k; ++x)
            for (std::int64_t i = 0; i < cond.counts[(std::size_t)uv * k + x]; ++i)
                pools[uv].push_back(x);
        rng.shuffle(pools[uv]);
    }
    std::vector<int> syms(u.length());
    std::vector<std::size_t> next(m, 0);
    for (std::size_t tpos = 0; tpos < u.length(); ++tpos) {
        int uv = u.symbols[tpos];
        syms[tpos] = pools[uv][next[uv]++];
    }
    return Sequence(cond.axes[1], std::move(syms));
}

// Enumerates T^n_{V_{X|U}}(u) (all members, lexicographic in the x-sequence)
// when the class is small; throws when size exceeds `guard`.
inline std::vector<Sequence> enumerate_conditional_class(const Sequence& u,
                                                         const EmpiricalType& cond,
                                                         std::uint64_t guard = 1u << 22) {
    ClassSize size = conditional_class_size(cond);
    if (!size.fits_u64() || size.as_u64() > guard)
        throw std::runtime_error("enumerate_conditional_class: class exceeds guard");
    const int m = cond.axes[0].size;
    const int k = cond.axes[1].size;
    // positions of each u-value
    std::vector<std::vector<std::size_t>> pos(m);
    for (std::size_t t = 0; t < u.length(); ++t) pos[u.symbols[t]].push_back(t);
    // per-u list of arrangements via repeated next_permutation over multisets
    std::vector<std::vector<std::vector<int>>> arrangements(m);
    for (int uv = 0; uv < m; ++uv) {
        std::vector<int> base;
        for (int x = 0; x < k; ++x)
            for (std::int64_t i = 0; i < cond.counts[(std::size_t)uv * k + x]; ++i)
                base.push_back(x);
        std::vector<int> cur = base;
        do {
            arrangements[uv].push_back(cur);
        } while (std::next_permutation(cur.begin(), cur.end()));
        if (arrangements[uv].empty()) arrangements[uv].push_back({});
    }
    std::vector<Sequence> out;
    std::vector<std::size_t> pick(m, 0);
    for (;;) {
        std::vector<int> syms(u.length(), 0);
        for (int uv = 0; uv < m; ++uv)
            for (std::size_t i = 0; i < pos[uv].size(); ++i) syms[pos[uv][i]] = arrangements[uv][pick[uv]][i];
        out.emplace_back(cond.axes[1], std::move(syms));
        int i = m - 1;
        for (; i >= 0; --i) {
            if (++pick[i] < arrangements[i].size()) break;
            pick[i] = 0;
        }
        if (i < 0) break;
    }
    return out;
}

}  // namespace racxpt
