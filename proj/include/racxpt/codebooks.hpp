#pragma once

// Constant-composition codebook libraries: random construction, the packing
// counting functions with their same-index exclusion rules, an exhaustive
// packing audit, and resample-until-good selection.
//
// The audit statistic S sums, over all index combinations and realized joint
// types, the packing counts scaled by 2^{n(I - rates)}. The selection rule
// accepts a library when S <= 2 E[S], where E[S] is computed exactly from
// type-class combinatorics under the actual sampling scheme, so each try
// succeeds with probability at least 1/2 by Markov's inequality.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "measures.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace racxpt {

// floor(2^{n R}) with a relative snap so that rates of the form
// log2(class size)/n recover the class size exactly.
struct GuardExceeded : std::runtime_error {
    explicit GuardExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::uint64_t codeword_count(std::int64_t n, double rate_bits) {
    long double v = exp2l((long double)n * (long double)rate_bits);
    if (v >= 9.2e18L) throw std::overflow_error("codeword_count: 2^{nR} too large");
    long double r = roundl(v);
    if (fabsl(v - r) <= 1e-6L * std::max<long double>(1.0L, v)) return (std::uint64_t)r;
    return (std::uint64_t)floorl(v);
}

struct LibraryParams {
    Alphabet u_alphabet;
    Alphabet x_alphabet, y_alphabet;
    EmpiricalType p_u;                         // type of the shared u-sequence
    std::vector<EmpiricalType> x_compositions; // per-codebook joint (U,X) conditional types
    std::vector<EmpiricalType> y_compositions;
    std::vector<double> rates1, rates2;        // bits/symbol
    std::int64_t n = 0;
    bool iid_sampling = false;  // ensemble-faithful mode: draws may repeat

    std::size_t m1() const { return x_compositions.size(); }
    std::size_t m2() const { return y_compositions.size(); }

    std::uint64_t n1(std::size_t i) const { return codeword_count(n, rates1.at(i)); }
    std::uint64_t n2(std::size_t j) const { return codeword_count(n, rates2.at(j)); }

    void validate() const {
        if (n < 1) throw std::invalid_argument("LibraryParams: n must be >= 1");
        if (p_u.n != n) throw std::invalid_argument("LibraryParams: P_U blocklength mismatch");
        if (x_compositions.empty() || y_compositions.empty())
            throw std::invalid_argument("LibraryParams: need at least one codebook per sender");
        if (rates1.size() != m1() || rates2.size() != m2())
            throw std::invalid_argument("LibraryParams: rate count mismatch");
        auto check = [&](const std::vector<EmpiricalType>& comps, const Alphabet& alph,
                         const std::vector<double>& rates, const char* side) {
            for (std::size_t i = 0; i < comps.size(); ++i) {
                const auto& c = comps[i];
                if (c.n != n || c.axes.size() != 2 || c.axes[0].size != u_alphabet.size ||
                    c.axes[1].size != alph.size)
                    throw std::invalid_argument(std::string("LibraryParams: bad composition (") +
                                                side + ")");
                for (int u = 0; u < u_alphabet.size; ++u) {
                    std::int64_t row = 0;
                    for (int s = 0; s < alph.size; ++s)
                        row += c.counts[(std::size_t)u * alph.size + s];
                    if (row != p_u.counts[(std::size_t)u])
                        throw std::invalid_argument(
                            std::string("LibraryParams: composition inconsistent with P_U (") +
                            side + ")");
                }
                if (rates[i] < 0.0)
                    throw std::invalid_argument("LibraryParams: negative rate");
                ClassSize cls = conditional_class_size(c);
                double needed = std::log2((double)codeword_count(n, rates[i]));
                if (needed > cls.log2() + 1e-9)
                    throw std::invalid_argument(
                        std::string("LibraryParams: codebook larger than its type class (") +
                        side + ")");
            }
        };
        check(x_compositions, x_alphabet, rates1, "A");
        check(y_compositions, y_alphabet, rates2, "B");
    }
};

struct CodebookLibraryPair {
    LibraryParams params;
    Sequence u;
    std::vector<std::vector<Sequence>> A;  // A[i][a]
    std::vector<std::vector<Sequence>> B;  // B[j][b]
    std::vector<std::string> notes;        // construction remarks (whole-class codebooks etc.)
};

namespace detail_cb {

// N distinct members of the conditional class (or N i.i.d. members). Small
// classes are enumerated and partially shuffled; large ones use rejection.
inline std::vector<Sequence> sample_codebook(const Sequence& u, const EmpiricalType& comp,
                                             std::uint64_t count, bool iid, Rng& rng) {
    ClassSize cls = conditional_class_size(comp);
    if (iid) {
        std::vector<Sequence> out;
        out.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i)
            out.push_back(sample_from_conditional_class(u, comp, rng));
        return out;
    }
    if (!cls.fits_u64() || cls.as_u64() < count)
        throw std::invalid_argument("sample_codebook: class smaller than requested codebook");
    const std::uint64_t size = cls.as_u64();
    if (size <= std::max<std::uint64_t>(4096, 4 * count)) {
        std::vector<Sequence> all = enumerate_conditional_class(u, comp, size);
        // partial Fisher-Yates: the first `count` entries are a uniform sample
        for (std::uint64_t i = 0; i < count; ++i) {
            std::uint64_t j = i + rng.next_below(size - i);
            std::swap(all[(std::size_t)i], all[(std::size_t)j]);
        }
        all.resize(count);
        return all;
    }
    std::set<std::vector<int>> seen;
    std::vector<Sequence> out;
    while (out.size() < count) {
        Sequence s = sample_from_conditional_class(u, comp, rng);
        if (seen.insert(s.symbols).second) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail_cb

// Draws every codebook independently: codewords uniform over the conditional
// type class of the codebook's composition, without replacement inside a
// codebook (i.i.d. mode behind params.iid_sampling).
inline CodebookLibraryPair build_library(const LibraryParams& params, std::uint64_t seed) {
    params.validate();
    CodebookLibraryPair lib;
    lib.params = params;
    lib.u = smallest_in_class(params.p_u);
    for (std::size_t i = 0; i < params.m1(); ++i) {
        Rng rng(derive_seed(seed, 2 * i));
        std::uint64_t n1 = params.n1(i);
        lib.A.push_back(detail_cb::sample_codebook(lib.u, params.x_compositions[i], n1,
                                                   params.iid_sampling, rng));
        if (!params.iid_sampling &&
            conditional_class_size(params.x_compositions[i]).as_u64() == n1) {
            std::ostringstream os;
            os << "A[" << i << "] is the whole composition class";
            lib.notes.push_back(os.str());
        }
    }
    for (std::size_t j = 0; j < params.m2(); ++j) {
        Rng rng(derive_seed(seed, 2 * j + 1) ^ 0x5bf0a8b1ULL);
        std::uint64_t n2 = params.n2(j);
        lib.B.push_back(detail_cb::sample_codebook(lib.u, params.y_compositions[j], n2,
                                                   params.iid_sampling, rng));
        if (!params.iid_sampling &&
            conditional_class_size(params.y_compositions[j]).as_u64() == n2) {
            std::ostringstream os;
            os << "B[" << j << "] is the whole composition class";
            lib.notes.push_back(os.str());
        }
    }
    return lib;
}

// Marginal of a count tensor over the kept axes (in the kept order).
inline EmpiricalType marginal_counts(const EmpiricalType& t, const std::vector<int>& keep) {
    std::vector<Alphabet> axes;
    std::vector<int> out_shape;
    for (int a : keep) {
        axes.push_back(t.axes.at((std::size_t)a));
        out_shape.push_back(t.axes.at((std::size_t)a).size);
    }
    auto in_shape = t.shape();
    auto out_strides = make_strides(out_shape);
    std::vector<std::int64_t> counts(shape_cells(out_shape), 0);
    std::vector<int> idx(in_shape.size(), 0);
    std::size_t f = 0;
    do {
        std::size_t of = 0;
        for (std::size_t i = 0; i < keep.size(); ++i)
            of += out_strides[i] * (std::size_t)idx[(std::size_t)keep[i]];
        counts[of] += t.counts[f];
        ++f;
    } while (next_multi_index(idx, in_shape));
    return EmpiricalType(std::move(axes), std::move(counts), t.n);
}

struct PackingCounts {
    std::uint64_t pair = 0;       // K^{i,j}
    std::uint64_t with_xt = 0;    // K^{i,j}_k
    std::uint64_t with_yt = 0;    // K^{i,j}_l
    std::uint64_t with_both = 0;  // K^{i,j}_{k,l}
};

// Exact packing counts for codebook indices (i, j, k, l) at the joint type V
// over (U, X, Xt, Y, Yt). Each count is evaluated at the matching marginal of
// V, with the 'c != a if i = k' / 'd != b if j = l' exclusions.
inline PackingCounts packing_functions(const CodebookLibraryPair& lib, std::size_t i,
                                       std::size_t j, std::size_t k, std::size_t l,
                                       const EmpiricalType& V) {
    if (V.axes.size() != 5 || V.axes[0].size != lib.params.u_alphabet.size ||
        V.axes[1].size != lib.params.x_alphabet.size ||
        V.axes[2].size != lib.params.x_alphabet.size ||
        V.axes[3].size != lib.params.y_alphabet.size ||
        V.axes[4].size != lib.params.y_alphabet.size || V.n != lib.params.n)
        throw std::invalid_argument("packing_functions: V axes must be (U, X, Xt, Y, Yt)");
    EmpiricalType v_uxy = marginal_counts(V, {0, 1, 3});
    EmpiricalType v_uxxty = marginal_counts(V, {0, 1, 2, 3});
    EmpiricalType v_uxyyt = marginal_counts(V, {0, 1, 3, 4});

    PackingCounts out;
    const auto& A = lib.A;
    const auto& Bb = lib.B;
    for (std::size_t a = 0; a < A[i].size(); ++a)
        for (std::size_t b = 0; b < Bb[j].size(); ++b) {
            if (joint_type_of({lib.u, A[i][a], Bb[j][b]}) == v_uxy) ++out.pair;
            for (std::size_t c = 0; c < A[k].size(); ++c) {
                if (i == k && c == a) continue;
                if (joint_type_of({lib.u, A[i][a], A[k][c], Bb[j][b]}) == v_uxxty) ++out.with_xt;
                for (std::size_t d = 0; d < Bb[l].size(); ++d) {
                    if (j == l && d == b) continue;
                    if (joint_type_of({lib.u, A[i][a], A[k][c], Bb[j][b], Bb[l][d]}) == V)
                        ++out.with_both;
                }
            }
            for (std::size_t d = 0; d < Bb[l].size(); ++d) {
                if (j == l && d == b) continue;
                if (joint_type_of({lib.u, A[i][a], Bb[j][b], Bb[l][d]}) == v_uxyyt) ++out.with_yt;
            }
        }
    return out;
}

struct PackingFamilyReport {
    // worst over entries of (log2 K)/n + I_V(...) - rates: the bound holds
    // with any delta' at least this large
    double worst_slack_bits = -kInf;
    std::uint64_t entries = 0;
};

struct PackingAuditReport {
    long double S = 0.0L;            // realized packing statistic
    long double expected_bound = 0.0L;  // exact E[S] for the sampling scheme
    double delta_prime = 0.0;        // max(0, log2(S)/n)
    std::array<PackingFamilyReport, 4> families;
    bool passes = false;             // S <= 2 E[S]
    std::uint64_t tuple_evaluations = 0;
};

namespace detail_cb {

// multi-information (bits/symbol) of the non-U axes given U, from a per-u
// count tensor: counts[u * cells + flat(other axes)] with per-u totals n_u.
inline double multi_info_counts(const std::vector<std::int64_t>& counts,
                                const std::vector<std::int64_t>& n_u,
                                const std::vector<int>& shape, std::int64_t n) {
    const std::size_t cells = shape_cells(shape);
    double total = 0.0;
    for (std::size_t u = 0; u < n_u.size(); ++u) {
        if (n_u[u] == 0) continue;
        const std::int64_t* c = counts.data() + u * cells;
        double h_joint = 0.0;
        for (std::size_t f = 0; f < cells; ++f)
            if (c[f] > 0) h_joint -= (double)c[f] * std::log2((double)c[f] / (double)n_u[u]);
        double h_axes = 0.0;
        std::vector<int> idx(shape.size(), 0);
        std::vector<std::vector<std::int64_t>> marg;
        for (int s : shape) marg.emplace_back((std::size_t)s, 0);
        std::size_t f = 0;
        do {
            for (std::size_t ax = 0; ax < shape.size(); ++ax)
                marg[ax][(std::size_t)idx[ax]] += c[f];
            ++f;
        } while (next_multi_index(idx, shape));
        for (const auto& m : marg)
            for (auto v : m)
                if (v > 0) h_axes -= (double)v * std::log2((double)v / (double)n_u[u]);
        total += (h_axes - h_joint) / (double)n;
    }
    return total;
}

// Flat per-u joint-type key builder used by the audit maps: tallies the
// symbols of the given sequences position by position, grouped by u-value.
struct TypeTally {
    std::vector<int> shape;  // non-U axes
    std::size_t cells = 0;
    std::vector<std::int64_t> counts;  // [u][cells]

    TypeTally(int u_size, std::vector<int> sh) : shape(std::move(sh)) {
        cells = shape_cells(shape);
        counts.assign((std::size_t)u_size * cells, 0);
    }
    template <typename... Seqs>
    void tally(const Sequence& u, const Seqs&... seqs) {
        auto strides = make_strides(shape);
        for (std::size_t t = 0; t < u.length(); ++t) {
            std::size_t f = 0;
            std::size_t ax = 0;
            ((f += strides[ax++] * (std::size_t)seqs.symbols[t]), ...);
            ++counts[(std::size_t)u.symbols[t] * cells + f];
        }
    }
};

}  // namespace detail_cb

// Exhaustive audit of the four packing-bound families over all index
// combinations and all realized joint types. Guarded by a cap on the number
// of codeword-tuple evaluations.
inline PackingAuditReport audit_packing(const CodebookLibraryPair& lib,
                                        std::uint64_t tuple_guard = 10'000'000) {
    const auto& P = lib.params;
    const std::int64_t n = P.n;
    const int usz = P.u_alphabet.size;
    const int xs = P.x_alphabet.size;
    const int ys = P.y_alphabet.size;
    long double S1 = 0, S2 = 0;
    for (std::size_t i = 0; i < P.m1(); ++i) S1 += (long double)lib.A[i].size();
    for (std::size_t j = 0; j < P.m2(); ++j) S2 += (long double)lib.B[j].size();
    long double tuples = S1 * S2 * (1 + S1) * (1 + S2);
    if (tuples > (long double)tuple_guard)
        throw GuardExceeded("audit_packing: tuple evaluation guard exceeded");

    PackingAuditReport rep;
    rep.tuple_evaluations = (std::uint64_t)tuples;
    std::vector<std::int64_t> n_u = P.p_u.counts;

    // family accumulation: key = (index tuple..., flattened counts)
    using Key = std::vector<std::int64_t>;
    std::array<std::map<Key, std::uint64_t>, 4> maps;
    for (std::size_t i = 0; i < P.m1(); ++i)
        for (std::size_t j = 0; j < P.m2(); ++j) {
            for (std::size_t a = 0; a < lib.A[i].size(); ++a)
                for (std::size_t b = 0; b < lib.B[j].size(); ++b) {
                    detail_cb::TypeTally t1(usz, {xs, ys});
                    t1.tally(lib.u, lib.A[i][a], lib.B[j][b]);
                    Key key{(std::int64_t)i, (std::int64_t)j};
                    key.insert(key.end(), t1.counts.begin(), t1.counts.end());
                    ++maps[0][key];
                }
            for (std::size_t k = 0; k < P.m1(); ++k)
                for (std::size_t a = 0; a < lib.A[i].size(); ++a)
                    for (std::size_t c = 0; c < lib.A[k].size(); ++c) {
                        if (i == k && a == c) continue;
                        for (std::size_t b = 0; b < lib.B[j].size(); ++b) {
                            detail_cb::TypeTally t2(usz, {xs, xs, ys});
                            t2.tally(lib.u, lib.A[i][a], lib.A[k][c], lib.B[j][b]);
                            Key key{(std::int64_t)i, (std::int64_t)j, (std::int64_t)k};
                            key.insert(key.end(), t2.counts.begin(), t2.counts.end());
                            ++maps[1][key];
                        }
                    }
            for (std::size_t l = 0; l < P.m2(); ++l)
                for (std::size_t b = 0; b < lib.B[j].size(); ++b)
                    for (std::size_t d = 0; d < lib.B[l].size(); ++d) {
                        if (j == l && b == d) continue;
                        for (std::size_t a = 0; a < lib.A[i].size(); ++a) {
                            detail_cb::TypeTally t3(usz, {xs, ys, ys});
                            t3.tally(lib.u, lib.A[i][a], lib.B[j][b], lib.B[l][d]);
                            Key key{(std::int64_t)i, (std::int64_t)j, (std::int64_t)l};
                            key.insert(key.end(), t3.counts.begin(), t3.counts.end());
                            ++maps[2][key];
                        }
                    }
            for (std::size_t k = 0; k < P.m1(); ++k)
                for (std::size_t l = 0; l < P.m2(); ++l)
                    for (std::size_t a = 0; a < lib.A[i].size(); ++a)
                        for (std::size_t c = 0; c < lib.A[k].size(); ++c) {
                            if (i == k && a == c) continue;
                            for (std::size_t b = 0; b < lib.B[j].size(); ++b)
                                for (std::size_t d = 0; d < lib.B[l].size(); ++d) {
                                    if (j == l && b == d) continue;
                                    detail_cb::TypeTally t4(usz, {xs, xs, ys, ys});
                                    t4.tally(lib.u, lib.A[i][a], lib.A[k][c], lib.B[j][b],
                                             lib.B[l][d]);
                                    Key key{(std::int64_t)i, (std::int64_t)j, (std::int64_t)k,
                                            (std::int64_t)l};
                                    key.insert(key.end(), t4.counts.begin(), t4.counts.end());
                                    ++maps[3][key];
                                }
                        }
        }

    // S and the per-family worst slack
    const std::array<std::vector<int>, 4> shapes = {
        std::vector<int>{xs, ys}, {xs, xs, ys}, {xs, ys, ys}, {xs, xs, ys, ys}};
    const std::array<int, 4> index_count = {2, 3, 3, 4};
    for (int fam = 0; fam < 4; ++fam) {
        for (const auto& [key, count] : maps[(std::size_t)fam]) {
            std::vector<std::int64_t> counts(key.begin() + index_count[(std::size_t)fam],
                                             key.end());
            double info =
                detail_cb::multi_info_counts(counts, n_u, shapes[(std::size_t)fam], n);
            double rates = P.rates1[(std::size_t)key[0]] + P.rates2[(std::size_t)key[1]];
            if (fam == 1) rates += P.rates1[(std::size_t)key[2]];
            if (fam == 2) rates += P.rates2[(std::size_t)key[2]];
            if (fam == 3) rates += P.rates1[(std::size_t)key[2]] + P.rates2[(std::size_t)key[3]];
            long double scaled =
                (long double)count * exp2l((long double)n * (long double)(info - rates));
            rep.S += scaled;
            auto& f = rep.families[(std::size_t)fam];
            f.worst_slack_bits =
                std::max(f.worst_slack_bits,
                         std::log2((double)count) / (double)n + info - rates);
            ++f.entries;
        }
    }
    rep.delta_prime = rep.S > 1.0L ? (double)(log2l(rep.S) / (long double)n) : 0.0;
    return rep;  // expected_bound and passes are filled by the callers that know E[S]
}

// Enumerates count tensors with every per-axis marginal fixed, invoking
// fn(counts) for each. DFS over cells with budget caps.
inline void enumerate_constrained_tensors(
    const std::vector<int>& shape, const std::vector<std::vector<std::int64_t>>& axis_budgets,
    std::int64_t total, const std::function<void(const std::vector<std::int64_t>&)>& fn) {
    const std::size_t cells = shape_cells(shape);
    std::vector<std::vector<int>> coords(cells, std::vector<int>(shape.size()));
    {
        std::vector<int> idx(shape.size(), 0);
        std::size_t f = 0;
        do {
            coords[f] = idx;
            ++f;
        } while (next_multi_index(idx, shape));
    }
    std::vector<std::int64_t> counts(cells, 0);
    std::vector<std::vector<std::int64_t>> remaining = axis_budgets;
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t f, std::int64_t left) {
        if (f == cells) {
            if (left == 0) fn(counts);
            return;
        }
        std::int64_t cap = left;
        for (std::size_t ax = 0; ax < shape.size(); ++ax)
            cap = std::min(cap, remaining[ax][(std::size_t)coords[f][ax]]);
        for (std::int64_t v = cap; v >= 0; --v) {
            counts[f] = v;
            for (std::size_t ax = 0; ax < shape.size(); ++ax)
                remaining[ax][(std::size_t)coords[f][ax]] -= v;
            rec(f + 1, left - v);
            for (std::size_t ax = 0; ax < shape.size(); ++ax)
                remaining[ax][(std::size_t)coords[f][ax]] += v;
        }
        counts[f] = 0;
    };
    rec(0, total);
}

namespace detail_cb {

// sum over constrained tensors c of  multinomial(n_u; c) * 2^{e(c)}  where
// e(c) = sum_ax mult_ax * H_counts(axis marginal) - H_counts(joint), the per-u
// exponent contribution of the scaled packing expressions. Axis multiplicity
// 2 models a collapsed diagonal pair (the merged axis counts twice).
inline long double per_u_scaled_sum(const std::vector<int>& shape,
                                    const std::vector<int>& axis_multiplicity,
                                    const std::vector<std::vector<std::int64_t>>& budgets,
                                    std::int64_t n_u) {
    long double total = 0.0L;
    enumerate_constrained_tensors(shape, budgets, n_u, [&](const std::vector<std::int64_t>& c) {
        std::vector<std::uint64_t> cc;
        cc.reserve(c.size());
        for (auto v : c) cc.push_back((std::uint64_t)v);
        long double lg = (long double)multinomial((std::uint64_t)n_u, cc).log2();
        // joint entropy term (negative sign folded below)
        long double h_joint = 0.0L;
        for (auto v : c)
            if (v > 0) h_joint -= (long double)v * log2l((long double)v / (long double)n_u);
        long double h_axes = 0.0L;
        std::vector<int> idx(shape.size(), 0);
        std::vector<std::vector<std::int64_t>> marg;
        for (int s : shape) marg.emplace_back((std::size_t)s, 0);
        std::size_t f = 0;
        do {
            for (std::size_t ax = 0; ax < shape.size(); ++ax)
                marg[ax][(std::size_t)idx[ax]] += c[f];
            ++f;
        } while (next_multi_index(idx, shape));
        for (std::size_t ax = 0; ax < shape.size(); ++ax) {
            long double h = 0.0L;
            for (auto v : marg[ax])
                if (v > 0) h -= (long double)v * log2l((long double)v / (long double)n_u);
            h_axes += (long double)axis_multiplicity[ax] * h;
        }
        total += exp2l(lg + h_axes - h_joint);
    });
    return total;
}

}  // namespace detail_cb

// Exact E[S] for the packing statistic under the library's sampling scheme
// (without-replacement inside a codebook by default, i.i.d. when
// params.iid_sampling). Factorizes over u-values; same-codebook exclusions
// are handled by inclusion-exclusion over diagonal-supported types.
inline long double expected_packing_sum(const LibraryParams& P,
                                        std::uint64_t enum_guard = 30'000'000) {
    P.validate();
    const std::int64_t n = P.n;
    const int xs = P.x_alphabet.size, ys = P.y_alphabet.size;
    const auto& n_u = P.p_u.counts;
    const int usz = P.u_alphabet.size;

    // enumeration cost estimate: unconstrained stars-and-bars per call
    {
        long double est = 0.0L;
        auto count_for = [&](int cells) {
            long double per = 0.0L;
            for (int u = 0; u < usz; ++u)
                if (n_u[(std::size_t)u] > 0)
                    per += binomial((std::uint64_t)(n_u[(std::size_t)u] + cells - 1),
                                    (std::uint64_t)(cells - 1))
                               .log2();
            return exp2l(std::min(per, 80.0L));
        };
        est += (long double)(P.m1() * P.m2()) * count_for(xs * ys);
        est += (long double)(P.m1() * P.m2() * P.m1()) * count_for(xs * xs * ys);
        est += (long double)(P.m1() * P.m2() * P.m2()) * count_for(xs * ys * ys);
        est += (long double)(P.m1() * P.m2() * P.m1() * P.m2()) * count_for(xs * xs * ys * ys);
        if (est > (long double)enum_guard)
            throw GuardExceeded("expected_packing_sum: enumeration guard exceeded");
    }

    auto budget_row = [&](const EmpiricalType& comp, int u, int width) {
        std::vector<std::int64_t> b((std::size_t)width);
        for (int s = 0; s < width; ++s) b[(std::size_t)s] = comp.counts[(std::size_t)u * width + s];
        return b;
    };
    auto log2_class = [&](const EmpiricalType& comp) {
        return (long double)conditional_class_size(comp).log2();
    };

    // memo over (shape-id, multiplicities, budgets, u)
    std::map<std::vector<std::int64_t>, long double> memo;
    auto per_u_sum = [&](const std::vector<int>& shape, const std::vector<int>& mult,
                         const std::vector<std::vector<std::int64_t>>& budgets,
                         std::int64_t nu) {
        std::vector<std::int64_t> key;
        key.push_back((std::int64_t)shape.size());
        for (int s : shape) key.push_back(s);
        for (int m : mult) key.push_back(m);
        for (const auto& b : budgets)
            for (auto v : b) key.push_back(v);
        key.push_back(nu);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        long double v = detail_cb::per_u_scaled_sum(shape, mult, budgets, nu);
        memo.emplace(std::move(key), v);
        return v;
    };

    // product over active u of the per-u sums; the lambda yields budgets per u
    auto product_over_u =
        [&](const std::vector<int>& shape, const std::vector<int>& mult,
            const std::function<std::vector<std::vector<std::int64_t>>(int)>& budgets_at) {
            long double prod = 1.0L;
            for (int u = 0; u < usz; ++u) {
                if (n_u[(std::size_t)u] == 0) continue;
                prod *= per_u_sum(shape, mult, budgets_at(u), n_u[(std::size_t)u]);
                if (prod == 0.0L) return 0.0L;
            }
            return prod;
        };

    long double S = 0.0L;
    const bool iid = P.iid_sampling;

    for (std::size_t i = 0; i < P.m1(); ++i)
        for (std::size_t j = 0; j < P.m2(); ++j) {
            const long double N1 = (long double)P.n1(i), N2 = (long double)P.n2(j);
            const long double lti = log2_class(P.x_compositions[i]);
            const long double ltj = log2_class(P.y_compositions[j]);
            const long double rij = (long double)(P.rates1[i] + P.rates2[j]);

            // pair family
            S += N1 * N2 * exp2l(-(long double)n * rij - lti - ltj) *
                 product_over_u({xs, ys}, {1, 1}, [&](int u) {
                     return std::vector<std::vector<std::int64_t>>{
                         budget_row(P.x_compositions[i], u, xs),
                         budget_row(P.y_compositions[j], u, ys)};
                 });

            // competing-x family
            for (std::size_t k = 0; k < P.m1(); ++k) {
                const long double ltk = log2_class(P.x_compositions[k]);
                const long double N1k = (long double)P.n1(k);
                long double scale = exp2l(
                    -(long double)n * (rij + (long double)P.rates1[k]) - lti - ltk - ltj);
                long double all = product_over_u({xs, xs, ys}, {1, 1, 1}, [&](int u) {
                    return std::vector<std::vector<std::int64_t>>{
                        budget_row(P.x_compositions[i], u, xs),
                        budget_row(P.x_compositions[k], u, xs),
                        budget_row(P.y_compositions[j], u, ys)};
                });
                if (i != k) {
                    S += N1 * N1k * N2 * scale * all;
                } else if (N1 >= 2.0L) {
                    long double pairs = N1 * (N1 - 1.0L) * N2;
                    if (iid) {
                        S += pairs * scale * all;
                    } else {
                        long double ti = exp2l(lti);
                        long double diag =
                            P.x_compositions[i] == P.x_compositions[k]
                                ? product_over_u({xs, ys}, {2, 1}, [&](int u) {
                                      return std::vector<std::vector<std::int64_t>>{
                                          budget_row(P.x_compositions[i], u, xs),
                                          budget_row(P.y_compositions[j], u, ys)};
                                  })
                                : 0.0L;
                        S += pairs * scale * (ti / (ti - 1.0L)) * (all - diag);
                    }
                }
            }

            // competing-y family
            for (std::size_t l = 0; l < P.m2(); ++l) {
                const long double ltl = log2_class(P.y_compositions[l]);
                const long double N2l = (long double)P.n2(l);
                long double scale = exp2l(
                    -(long double)n * (rij + (long double)P.rates2[l]) - lti - ltj - ltl);
                long double all = product_over_u({xs, ys, ys}, {1, 1, 1}, [&](int u) {
                    return std::vector<std::vector<std::int64_t>>{
                        budget_row(P.x_compositions[i], u, xs),
                        budget_row(P.y_compositions[j], u, ys),
                        budget_row(P.y_compositions[l], u, ys)};
                });
                if (j != l) {
                    S += N1 * N2 * N2l * scale * all;
                } else if (N2 >= 2.0L) {
                    long double pairs = N1 * N2 * (N2 - 1.0L);
                    if (iid) {
                        S += pairs * scale * all;
                    } else {
                        long double tj = exp2l(ltj);
                        long double diag =
                            P.y_compositions[j] == P.y_compositions[l]
                                ? product_over_u({xs, ys}, {1, 2}, [&](int u) {
                                      return std::vector<std::vector<std::int64_t>>{
                                          budget_row(P.x_compositions[i], u, xs),
                                          budget_row(P.y_compositions[j], u, ys)};
                                  })
                                : 0.0L;
                        S += pairs * scale * (tj / (tj - 1.0L)) * (all - diag);
                    }
                }
            }

            // competing-pair family
            for (std::size_t k = 0; k < P.m1(); ++k)
                for (std::size_t l = 0; l < P.m2(); ++l) {
                    const long double ltk = log2_class(P.x_compositions[k]);
                    const long double ltl = log2_class(P.y_compositions[l]);
                    const long double N1k = (long double)P.n1(k);
                    const long double N2l = (long double)P.n2(l);
                    bool same_x = i == k, same_y = j == l;
                    if (same_x && N1 < 2.0L) continue;
                    if (same_y && N2 < 2.0L) continue;
                    long double tuples = (same_x ? N1 * (N1 - 1.0L) : N1 * N1k) *
                                         (same_y ? N2 * (N2 - 1.0L) : N2 * N2l);
                    long double rates = rij + (long double)(P.rates1[k] + P.rates2[l]);
                    long double scale =
                        exp2l(-(long double)n * rates - lti - ltk - ltj - ltl);

                    auto bud_x = [&](int u) { return budget_row(P.x_compositions[i], u, xs); };
                    auto bud_xt = [&](int u) { return budget_row(P.x_compositions[k], u, xs); };
                    auto bud_y = [&](int u) { return budget_row(P.y_compositions[j], u, ys); };
                    auto bud_yt = [&](int u) { return budget_row(P.y_compositions[l], u, ys); };

                    long double all =
                        product_over_u({xs, xs, ys, ys}, {1, 1, 1, 1}, [&](int u) {
                            return std::vector<std::vector<std::int64_t>>{bud_x(u), bud_xt(u),
                                                                          bud_y(u), bud_yt(u)};
                        });
                    long double numer = all;
                    long double corr = 1.0L;
                    if (!iid) {
                        bool dx_possible = same_x && P.x_compositions[i] == P.x_compositions[k];
                        bool dy_possible = same_y && P.y_compositions[j] == P.y_compositions[l];
                        long double dx =
                            dx_possible ? product_over_u({xs, ys, ys}, {2, 1, 1}, [&](int u) {
                                return std::vector<std::vector<std::int64_t>>{bud_x(u), bud_y(u),
                                                                              bud_yt(u)};
                            }) : 0.0L;
                        long double dy =
                            dy_possible ? product_over_u({xs, xs, ys}, {1, 1, 2}, [&](int u) {
                                return std::vector<std::vector<std::int64_t>>{bud_x(u), bud_xt(u),
                                                                              bud_y(u)};
                            }) : 0.0L;
                        long double dxy =
                            (dx_possible && dy_possible)
                                ? product_over_u({xs, ys}, {2, 2}, [&](int u) {
                                      return std::vector<std::vector<std::int64_t>>{bud_x(u),
                                                                                    bud_y(u)};
                                  })
                                : 0.0L;
                        if (same_x) numer -= dx;
                        if (same_y) numer -= dy;
                        if (same_x && same_y) numer += dxy;
                        if (same_x) {
                            long double ti = exp2l(lti);
                            corr *= ti / (ti - 1.0L);
                        }
                        if (same_y) {
                            long double tj = exp2l(ltj);
                            corr *= tj / (tj - 1.0L);
                        }
                    }
                    S += tuples * scale * corr * std::max(0.0L, numer);
                }
        }
    return S;
}

struct ResampleOutcome {
    CodebookLibraryPair library;
    PackingAuditReport report;
    int tries_used = 0;
};

// Draws libraries until the realized packing statistic falls below twice its
// exact expectation (per-try success probability >= 1/2 by Markov). Throws
// after max_tries, reporting the best statistic seen.
inline ResampleOutcome resample_until_packed(const LibraryParams& params, int max_tries,
                                             std::uint64_t seed,
                                             std::uint64_t tuple_guard = 10'000'000) {
    if (max_tries < 1) throw std::invalid_argument("resample_until_packed: max_tries >= 1");
    long double bound = expected_packing_sum(params);
    long double best_S = kInf;
    for (int t = 0; t < max_tries; ++t) {
        CodebookLibraryPair lib = build_library(params, derive_seed(seed, (std::uint64_t)t));
        PackingAuditReport rep = audit_packing(lib, tuple_guard);
        rep.expected_bound = bound;
        rep.passes = rep.S <= 2.0L * bound;
        if (rep.passes) {
            ResampleOutcome out;
            out.library = std::move(lib);
            out.report = rep;
            out.tries_used = t + 1;
            return out;
        }
        best_S = std::min(best_S, rep.S);
    }
    std::ostringstream os;
    os << "resample_until_packed: no library within " << max_tries
       << " tries (best S = " << (double)best_S << ", bound 2E[S] = " << (double)(2.0L * bound)
       << ")";
    throw std::runtime_error(os.str());
}

}  // namespace racxpt
