#pragma once

// Two-stage universal decoding for codebook libraries. Stage 1 scans every
// candidate codeword pair for the unique maximizer of
//   alpha(joint type of (u, x, y, z)) - R1 - R2,
// with alpha(V) = I_V(X ^ Y ^ Z | U). Stage 2 tests the three threshold
// margins and reports "collision" unless all of them clear eta.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "codebooks.hpp"
#include "measures.hpp"

namespace racxpt {

// Vanishing threshold rule: positive, tends to zero, and n*eta grows fast
// enough to dominate the polynomial type-counting terms.
inline double default_eta(std::int64_t n, int u_size, int x_size, int y_size, int z_size,
                          std::size_t m1, std::size_t m2) {
    if (n < 1) throw std::invalid_argument("default_eta: n must be >= 1");
    double cells = (double)u_size * x_size * y_size * z_size;
    return (cells * std::log2((double)n + 1.0) + std::log2((double)(m1 * m2))) /
           std::sqrt((double)n);
}

struct DecoderConfig {
    // "default": the vanishing rule above; "constant": use eta as given.
    std::string eta_schedule = "default";
    double eta = 0.05;  // bits; only read by the constant schedule

    double resolve_eta(const CodebookLibraryPair& lib, int z_size) const {
        if (eta_schedule == "constant") {
            if (eta <= 0.0)
                throw std::invalid_argument("DecoderConfig: constant schedule needs eta > 0");
            return eta;
        }
        if (eta_schedule == "default")
            return default_eta(lib.params.n, lib.params.u_alphabet.size,
                               lib.params.x_alphabet.size, lib.params.y_alphabet.size, z_size,
                               lib.params.m1(), lib.params.m2());
        throw std::invalid_argument("DecoderConfig: unknown eta schedule '" + eta_schedule + "'");
    }
};

struct DecoderOutput {
    bool collision = true;
    std::size_t i = 0, j = 0;   // codebook indices of the decoded pair
    std::uint64_t a = 0, b = 0;  // codeword indices
    double stage1_score = -kInf;       // bits
    std::array<double, 3> margins{};   // three threshold left-hand sides minus eta
    bool stage1_tie = false;
    double eta = 0.0;

    bool is_message(std::size_t ii, std::uint64_t aa, std::size_t jj, std::uint64_t bb) const {
        return !collision && i == ii && a == aa && j == jj && b == bb;
    }
};

// alpha(V) = I_V(X ^ Y ^ Z | U) for a joint type over (U, X, Y, Z), in bits.
inline double alpha_score(const EmpiricalType& V) {
    if (V.axes.size() != 4) throw std::invalid_argument("alpha_score: (U,X,Y,Z) type required");
    return multi_information(V.to_distribution(), {{1}, {2}, {3}}, {0});
}

namespace detail_dec {

// Precomputed c * log2(c) for integer counts.
struct CLog2 {
    std::vector<double> tab;
    explicit CLog2(std::int64_t n) : tab((std::size_t)n + 1, 0.0) {
        for (std::int64_t c = 1; c <= n; ++c) tab[(std::size_t)c] = (double)c * std::log2((double)c);
    }
    double operator()(std::int64_t c) const { return tab[(std::size_t)c]; }
};

// n * H(counts | groups of size n_u) = sum_u [n_u log2 n_u] - sum_cells c log2 c
inline double n_cond_entropy(const std::vector<std::int64_t>& cells,
                             const std::vector<std::int64_t>& n_u, const CLog2& lg) {
    double s = 0.0;
    for (auto v : n_u) s += lg(v);
    for (auto v : cells) s -= lg(v);
    return s;
}

}  // namespace detail_dec

// Decodes one received sequence against the whole library.
inline DecoderOutput decode(const CodebookLibraryPair& lib, const Sequence& z,
                            const DecoderConfig& cfg = {}) {
    const auto& P = lib.params;
    const std::int64_t n = P.n;
    if ((std::int64_t)z.length() != n)
        throw std::invalid_argument("decode: received length differs from the blocklength");
    const int usz = P.u_alphabet.size;
    const int xs = P.x_alphabet.size;
    const int ys = P.y_alphabet.size;
    const int zs = z.alphabet.size;
    const double eta = cfg.resolve_eta(lib, zs);
    const detail_dec::CLog2 lg(n);
    const auto& n_u = P.p_u.counts;

    // n*H(Z|U): fixed across candidates
    std::vector<std::int64_t> zu_counts((std::size_t)usz * zs, 0);
    for (std::size_t t = 0; t < (std::size_t)n; ++t)
        ++zu_counts[(std::size_t)lib.u.symbols[t] * zs + z.symbols[t]];
    const double n_h_z = detail_dec::n_cond_entropy(zu_counts, n_u, lg);

    // n*H(X|U) per codebook (composition-determined), same for Y
    auto comp_entropy = [&](const EmpiricalType& comp) {
        return detail_dec::n_cond_entropy(comp.counts, n_u, lg);
    };
    std::vector<double> n_h_x(P.m1()), n_h_y(P.m2());
    for (std::size_t i = 0; i < P.m1(); ++i) n_h_x[i] = comp_entropy(P.x_compositions[i]);
    for (std::size_t j = 0; j < P.m2(); ++j) n_h_y[j] = comp_entropy(P.y_compositions[j]);

    DecoderOutput out;
    out.eta = eta;
    double best = -kInf;
    bool tie = false;
    std::vector<std::int64_t> best_counts;
    double best_r1 = 0.0, best_r2 = 0.0;

    std::vector<std::int64_t> cells((std::size_t)usz * xs * ys * zs, 0);
    std::vector<std::size_t> touched;
    touched.reserve((std::size_t)n);
    for (std::size_t k = 0; k < P.m1(); ++k)
        for (std::size_t c = 0; c < lib.A[k].size(); ++c) {
            const auto& xsym = lib.A[k][c].symbols;
            for (std::size_t l = 0; l < P.m2(); ++l)
                for (std::size_t d = 0; d < lib.B[l].size(); ++d) {
                    const auto& ysym = lib.B[l][d].symbols;
                    touched.clear();
                    for (std::size_t t = 0; t < (std::size_t)n; ++t) {
                        std::size_t f =
                            (((std::size_t)lib.u.symbols[t] * xs + xsym[t]) * ys + ysym[t]) * zs +
                            z.symbols[t];
                        if (cells[f] == 0) touched.push_back(f);
                        ++cells[f];
                    }
                    double sum_clog = 0.0;
                    for (std::size_t f : touched) sum_clog += lg(cells[f]);
                    double n_h_joint = 0.0;
                    for (auto v : n_u) n_h_joint += lg(v);
                    n_h_joint -= sum_clog;
                    double alpha =
                        (n_h_x[k] + n_h_y[l] + n_h_z - n_h_joint) / (double)n;
                    double score = alpha - P.rates1[k] - P.rates2[l];
                    if (score > best + 1e-12) {
                        best = score;
                        tie = false;
                        out.i = k;
                        out.a = c;
                        out.j = l;
                        out.b = d;
                        best_counts.assign(cells.begin(), cells.end());
                        best_r1 = P.rates1[k];
                        best_r2 = P.rates2[l];
                    } else if (score > best - 1e-12) {
                        // tie band: equal joint statistics are a genuine tie,
                        // anything closer than 1e-12 bits is flagged as one too
                        tie = true;
                    }
                    for (std::size_t f : touched) cells[f] = 0;
                }
        }

    out.stage1_score = best;
    out.stage1_tie = tie;
    if (tie || best == -kInf) {
        out.collision = true;
        return out;
    }

    // Stage 2 margins from the winning joint counts.
    // m1 = I(X ^ Y ^ Z | U) - R1 - R2 - eta  (= stage-1 score - eta)
    // m2 = I(X ; Y,Z | U) - R1 - eta
    // m3 = I(Y ; X,Z | U) - R2 - eta
    std::vector<std::int64_t> yz((std::size_t)usz * ys * zs, 0), xz((std::size_t)usz * xs * zs, 0);
    for (int u = 0; u < usz; ++u)
        for (int x = 0; x < xs; ++x)
            for (int y = 0; y < ys; ++y)
                for (int zz = 0; zz < zs; ++zz) {
                    std::int64_t v =
                        best_counts[(((std::size_t)u * xs + x) * ys + y) * zs + zz];
                    yz[((std::size_t)u * ys + y) * zs + zz] += v;
                    xz[((std::size_t)u * xs + x) * zs + zz] += v;
                }
    double n_h_joint = 0.0;
    for (auto v : n_u) n_h_joint += lg(v);
    for (auto v : best_counts) n_h_joint -= lg(v);
    double n_h_yz = detail_dec::n_cond_entropy(yz, n_u, lg);
    double n_h_xz = detail_dec::n_cond_entropy(xz, n_u, lg);
    double i_x_yz = (n_h_x[out.i] + n_h_yz - n_h_joint) / (double)n;
    double i_y_xz = (n_h_y[out.j] + n_h_xz - n_h_joint) / (double)n;
    out.margins[0] = best - eta;
    out.margins[1] = i_x_yz - best_r1 - eta;
    out.margins[2] = i_y_xz - best_r2 - eta;
    out.collision = !(out.margins[0] > 0.0 && out.margins[1] > 0.0 && out.margins[2] > 0.0);
    return out;
}

}  // namespace racxpt
