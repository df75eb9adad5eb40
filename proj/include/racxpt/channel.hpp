#pragma once

// Discrete memoryless two-sender multiple-access channel W(z|x,y), its n-fold
// law, output sampling, and the achievable-rate pentagon geometry for a fixed
// auxiliary structure (P_U, P_{X|U}, P_{Y|U}).

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "measures.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace racxpt {

struct MacChannel {
    Alphabet in1, in2, out;
    // row-major over (x, y, z); each (x, y) row sums to 1
    std::vector<double> kernel;

    MacChannel() = default;
    MacChannel(Alphabet x, Alphabet y, Alphabet z, std::vector<double> k)
        : in1(std::move(x)), in2(std::move(y)), out(std::move(z)), kernel(std::move(k)) {
        if (kernel.size() != (std::size_t)in1.size * in2.size * out.size)
            throw std::invalid_argument("MacChannel: kernel size mismatch");
        for (int x_ = 0; x_ < in1.size; ++x_)
            for (int y_ = 0; y_ < in2.size; ++y_) {
                double mass = 0.0;
                for (int z_ = 0; z_ < out.size; ++z_) {
                    double p = w(x_, y_, z_);
                    if (p < 0.0) throw std::invalid_argument("MacChannel: negative entry");
                    mass += p;
                }
                if (std::abs(mass - 1.0) > kMassTolerance) {
                    std::ostringstream msg;
                    msg << "MacChannel: row (x=" << x_ << ", y=" << y_ << ") sums to " << mass;
                    throw std::invalid_argument(msg.str());
                }
            }
    }

    double w(int x, int y, int z) const {
        return kernel[((std::size_t)x * in2.size + y) * out.size + z];
    }

    ConditionalKernel as_kernel() const {
        ConditionalKernel k;
        k.given_axes = {in1, in2};
        k.out_axes = {out};
        k.rows = kernel;
        return k;
    }
};

// Named presets accepted by the CLI.
//   noiseless-pair : Z = (X, Y) over {0..|X||Y|-1}
//   bsc-pair:p     : Z = (X + E1, Y + E2) with independent flips of prob p
//   adder          : Z = X + Y over {0, 1, 2}
inline MacChannel make_noiseless_pair(int x_size = 2, int y_size = 2) {
    Alphabet X(x_size), Y(y_size), Z(x_size * y_size);
    std::vector<double> k((std::size_t)x_size * y_size * x_size * y_size, 0.0);
    MacChannel c;
    for (int x = 0; x < x_size; ++x)
        for (int y = 0; y < y_size; ++y) k[((std::size_t)x * y_size + y) * (x_size * y_size) + (x * y_size + y)] = 1.0;
    return MacChannel(X, Y, Z, std::move(k));
}

inline MacChannel make_bsc_pair(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("bsc-pair: flip probability out of range");
    Alphabet X(2), Y(2), Z(4);
    std::vector<double> k(2 * 2 * 4, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int e1 = 0; e1 < 2; ++e1)
                for (int e2 = 0; e2 < 2; ++e2) {
                    int z = ((x ^ e1) << 1) | (y ^ e2);
                    double pe = (e1 ? p : 1 - p) * (e2 ? p : 1 - p);
                    k[((std::size_t)x * 2 + y) * 4 + z] += pe;
                }
    return MacChannel(X, Y, Z, std::move(k));
}

inline MacChannel make_adder() {
    Alphabet X(2), Y(2), Z(3);
    std::vector<double> k(2 * 2 * 3, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) k[((std::size_t)x * 2 + y) * 3 + (x + y)] = 1.0;
    return MacChannel(X, Y, Z, std::move(k));
}

inline MacChannel channel_from_preset(const std::string& name) {
    if (name == "noiseless-pair") return make_noiseless_pair();
    if (name == "adder") return make_adder();
    const std::string bsc = "bsc-pair:";
    if (name.rfind(bsc, 0) == 0) return make_bsc_pair(std::stod(name.substr(bsc.size())));
    throw std::invalid_argument("unknown channel preset: " + name);
}

struct RatePair {
    double r1 = 0.0;  // bits/symbol
    double r2 = 0.0;
    RatePair() = default;
    RatePair(double a, double b) : r1(a), r2(b) {
        if (r1 < 0.0 || r2 < 0.0) throw std::invalid_argument("RatePair: rates must be >= 0");
    }
};

struct Pentagon {
    double r1_max = 0.0;
    double r2_max = 0.0;
    double sum_max = 0.0;
};

// Auxiliary structure: P_U and the two conditional input laws.
struct AuxStructure {
    std::vector<double> p_u;                   // over U
    std::vector<std::vector<double>> p_x_g_u;  // [u][x]
    std::vector<std::vector<double>> p_y_g_u;  // [u][y]

    int u_size() const { return (int)p_u.size(); }
};

// Joint P_U P_{X|U} P_{Y|U} W over axes (U, X, Y, Z).
inline JointDistribution aux_joint(const MacChannel& W, const AuxStructure& s) {
    int m = s.u_size(), nx = W.in1.size, ny = W.in2.size, nz = W.out.size;
    std::vector<double> probs((std::size_t)m * nx * ny * nz, 0.0);
    for (int u = 0; u < m; ++u)
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y)
                for (int z = 0; z < nz; ++z)
                    probs[(((std::size_t)u * nx + x) * ny + y) * nz + z] =
                        s.p_u[u] * s.p_x_g_u[u][x] * s.p_y_g_u[u][y] * W.w(x, y, z);
    return JointDistribution({Alphabet(m), W.in1, W.in2, W.out}, std::move(probs));
}

// Pentagon of achievable rate pairs for a fixed auxiliary structure:
//   r1_max  = I(X ; Z | U, Y),  r2_max = I(Y ; Z | U, X),
//   sum_max = I(X, Y ; Z | U)
// under the joint P_U P_{X|U} P_{Y|U} W.
inline Pentagon pentagon(const MacChannel& W, const AuxStructure& s) {
    if ((int)s.p_x_g_u.size() != s.u_size() || (int)s.p_y_g_u.size() != s.u_size())
        throw std::invalid_argument("pentagon: auxiliary structure dimension mismatch");
    for (const auto& row : s.p_x_g_u)
        if ((int)row.size() != W.in1.size)
            throw std::invalid_argument("pentagon: P_{X|U} row size mismatch");
    for (const auto& row : s.p_y_g_u)
        if ((int)row.size() != W.in2.size)
            throw std::invalid_argument("pentagon: P_{Y|U} row size mismatch");
    JointDistribution j = aux_joint(W, s);
    Pentagon p;
    p.r1_max = mutual_information(j, {1}, {3}, {0, 2});
    p.r2_max = mutual_information(j, {2}, {3}, {0, 1});
    p.sum_max = mutual_information(j, {1, 2}, {3}, {0});
    return p;
}

// Strict interior test in the relative topology of the nonnegative quadrant:
// a zero coordinate never disqualifies, only the three upper faces do.
// `margin` shrinks every face by a fixed amount for robustness.
inline bool in_interior(const RatePair& r, const Pentagon& p, double margin = 0.0) {
    return r.r1 < p.r1_max - margin && r.r2 < p.r2_max - margin &&
           r.r1 + r.r2 < p.sum_max - margin;
}

// One i.i.d. pass of the channel over aligned input sequences.
inline Sequence sample_output(const MacChannel& W, const Sequence& xseq, const Sequence& yseq,
                              std::uint64_t rng_seed) {
    if (xseq.length() != yseq.length())
        throw std::invalid_argument("sample_output: length mismatch");
    Rng rng(rng_seed);
    std::vector<int> z(xseq.length());
    for (std::size_t t = 0; t < xseq.length(); ++t) {
        double u = rng.next_double();
        double acc = 0.0;
        int pick = W.out.size - 1;
        for (int zz = 0; zz < W.out.size; ++zz) {
            acc += W.w(xseq.symbols[t], yseq.symbols[t], zz);
            if (u < acc) {
                pick = zz;
                break;
            }
        }
        z[t] = pick;
    }
    return Sequence(W.out, std::move(z));
}

// log2 W^n(z | x, y), -infinity on an impossible transition.
inline double nfold_log_prob(const MacChannel& W, const Sequence& xseq, const Sequence& yseq,
                             const Sequence& zseq) {
    if (xseq.length() != yseq.length() || xseq.length() != zseq.length())
        throw std::invalid_argument("nfold_log_prob: length mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < xseq.length(); ++t) {
        double p = W.w(xseq.symbols[t], yseq.symbols[t], zseq.symbols[t]);
        if (p <= 0.0) return -kInf;
        total += std::log2(p);
    }
    return total;
}

// Samples auxiliary structures with |U| <= max_u and Dirichlet-random
// conditionals. P_U is quantized to multiples of 1/quantize_k so that the
// uniform-[k] block refinement used by the type-informed equivalence check is
// exact. Sample 0 is always the |U|=1 uniform-input structure.
inline std::vector<AuxStructure> sample_aux_structures(const MacChannel& W, int count,
                                                       std::uint64_t seed, int max_u = 4,
                                                       int quantize_k = 12) {
    std::vector<AuxStructure> out;
    out.reserve((std::size_t)count);
    for (int s = 0; s < count; ++s) {
        AuxStructure a;
        if (s == 0) {
            a.p_u = {1.0};
            a.p_x_g_u = {std::vector<double>(W.in1.size, 1.0 / W.in1.size)};
            a.p_y_g_u = {std::vector<double>(W.in2.size, 1.0 / W.in2.size)};
        } else {
            Rng rng(derive_seed(seed, (std::uint64_t)s));
            int m = 1 + (int)rng.next_below((std::uint64_t)max_u);
            std::vector<double> raw = rng.next_dirichlet((std::size_t)m);
            // largest-remainder quantization to multiples of 1/quantize_k
            std::vector<int> units(m, 0);
            std::vector<std::pair<double, int>> rema(m);
            int assigned = 0;
            for (int u = 0; u < m; ++u) {
                double exactu = raw[u] * quantize_k;
                units[u] = (int)std::floor(exactu);
                assigned += units[u];
                rema[u] = {exactu - units[u], u};
            }
            std::sort(rema.begin(), rema.end(),
                      [](const auto& l, const auto& r) { return l.first > r.first; });
            for (int i = 0; i < quantize_k - assigned; ++i) ++units[rema[(std::size_t)i % m].second];
            a.p_u.clear();
            for (int u = 0; u < m; ++u)
                if (units[u] > 0) a.p_u.push_back((double)units[u] / quantize_k);
            for (std::size_t u = 0; u < a.p_u.size(); ++u) {
                a.p_x_g_u.push_back(rng.next_dirichlet((std::size_t)W.in1.size));
                a.p_y_g_u.push_back(rng.next_dirichlet((std::size_t)W.in2.size));
            }
        }
        out.push_back(std::move(a));
    }
    return out;
}

struct StandingAssumptionResult {
    bool holds = false;
    std::optional<AuxStructure> witness;
    Pentagon witness_pentagon;
};

// Searches sampled auxiliary structures for a pentagon whose interior
// contains (H(Q1), H(Q2)). A false answer is possibly conservative: it only
// means no sampled structure worked.
inline StandingAssumptionResult standing_assumption_check(const MacChannel& W,
                                                          const JointDistribution& Q1,
                                                          const JointDistribution& Q2,
                                                          int aux_budget,
                                                          std::uint64_t seed = 20240901) {
    if (aux_budget < 1)
        throw std::invalid_argument("standing_assumption_check: aux_budget must be >= 1");
    RatePair target(detail::entropy_of_masses(Q1.probs()), detail::entropy_of_masses(Q2.probs()));
    StandingAssumptionResult res;
    for (auto& s : sample_aux_structures(W, aux_budget, seed)) {
        Pentagon p = pentagon(W, s);
        if (in_interior(target, p)) {
            res.holds = true;
            res.witness = std::move(s);
            res.witness_pentagon = p;
            return res;
        }
    }
    return res;
}

}  // namespace racxpt
