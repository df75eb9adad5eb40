#pragma once

// Shannon information measures in bits. Conventions: 0*log 0 = 0 and
// p*log(p/0) = +infinity, propagated through an infinity-capable double.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "distribution.hpp"

namespace racxpt {

constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline double entropy_of_masses(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

inline void check_disjoint(const std::vector<std::vector<int>>& groups) {
    std::vector<int> seen;
    for (const auto& g : groups)
        for (int a : g) {
            for (int s : seen)
                if (s == a) throw std::invalid_argument("axis groups must be disjoint");
            seen.push_back(a);
        }
}

inline std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

}  // namespace detail

// Joint entropy H(axes) in bits.
inline double joint_entropy(const JointDistribution& P, const std::vector<int>& axes) {
    if (axes.empty()) return 0.0;
    return detail::entropy_of_masses(P.marginal(axes).probs());
}

// Conditional Shannon entropy H(target | conditioning) in bits.
inline double entropy(const JointDistribution& P, const std::vector<int>& target,
                      const std::vector<int>& conditioning = {}) {
    detail::check_disjoint({target, conditioning});
    P.check_axis_subset(target);
    P.check_axis_subset(conditioning);
    return joint_entropy(P, detail::concat(target, conditioning)) -
           joint_entropy(P, conditioning);
}

// I(A ; B | C) = H(A|C) + H(B|C) - H(A,B|C), in bits.
inline double mutual_information(const JointDistribution& P, const std::vector<int>& axesA,
                                 const std::vector<int>& axesB,
                                 const std::vector<int>& conditioning = {}) {
    detail::check_disjoint({axesA, axesB, conditioning});
    return entropy(P, axesA, conditioning) + entropy(P, axesB, conditioning) -
           entropy(P, detail::concat(axesA, axesB), conditioning);
}

// Multi-information of N groups given C: sum_k H(group_k|C) - H(all|C).
// A single group has multi-information 0 by convention.
inline double multi_information(const JointDistribution& P,
                                const std::vector<std::vector<int>>& groups,
                                const std::vector<int>& conditioning = {}) {
    std::vector<std::vector<int>> all = groups;
    all.push_back(conditioning);
    detail::check_disjoint(all);
    double sum = 0.0;
    std::vector<int> merged;
    for (const auto& g : groups) {
        sum += entropy(P, g, conditioning);
        merged = detail::concat(merged, g);
    }
    return sum - entropy(P, merged, conditioning);
}

// Residual of the two-block decomposition of multi-information:
//   I(all) - [ I(I-groups) + I(J-groups) + I(I-block ; J-block) ]
// which is identically zero; callers assert |residual| <= 1e-10.
inline double multi_info_partition_identity_residual(
    const JointDistribution& P, const std::vector<std::vector<int>>& groups,
    const std::vector<std::size_t>& partitionI, const std::vector<std::size_t>& partitionJ,
    const std::vector<int>& conditioning = {}) {
    if (partitionI.empty() || partitionJ.empty())
        throw std::invalid_argument("partition blocks must be nonempty");
    std::vector<bool> used(groups.size(), false);
    auto take = [&](const std::vector<std::size_t>& part) {
        std::vector<std::vector<int>> sel;
        for (std::size_t gi : part) {
            if (gi >= groups.size() || used[gi])
                throw std::invalid_argument("invalid partition of groups");
            used[gi] = true;
            sel.push_back(groups[gi]);
        }
        return sel;
    };
    auto gI = take(partitionI);
    auto gJ = take(partitionJ);
    for (bool u : used)
        if (!u) throw std::invalid_argument("partition must cover all groups");

    std::vector<int> blockI, blockJ;
    for (const auto& g : gI) blockI = detail::concat(blockI, g);
    for (const auto& g : gJ) blockJ = detail::concat(blockJ, g);

    double whole = multi_information(P, groups, conditioning);
    double partI = gI.size() >= 2 ? multi_information(P, gI, conditioning) : 0.0;
    double partJ = gJ.size() >= 2 ? multi_information(P, gJ, conditioning) : 0.0;
    double cross = mutual_information(P, blockI, blockJ, conditioning);
    return whole - (partI + partJ + cross);
}

// D(P(.|x) || W(.|x) | base), in bits; +infinity when absolute continuity
// fails on a row with positive base mass.
inline double conditional_divergence(const ConditionalKernel& P_cond, const ConditionalKernel& W,
                                     const JointDistribution& P_base) {
    if (P_cond.given_cells() != W.given_cells() || P_cond.out_cells() != W.out_cells())
        throw std::invalid_argument("conditional_divergence: kernel shape mismatch");
    if (P_base.cells() != P_cond.given_cells())
        throw std::invalid_argument("conditional_divergence: base does not match conditioning");
    double total = 0.0;
    std::size_t oc = P_cond.out_cells();
    for (std::size_t g = 0; g < P_base.cells(); ++g) {
        double w = P_base.prob_flat(g);
        if (w <= 0.0) continue;
        const double* p = P_cond.row(g);
        const double* q = W.row(g);
        for (std::size_t o = 0; o < oc; ++o) {
            if (p[o] <= 0.0) continue;
            if (q[o] <= 0.0) return kInf;
            total += w * p[o] * std::log2(p[o] / q[o]);
        }
    }
    return total;
}

// D(P || Q) between plain distributions, in bits.
inline double kl_divergence(const JointDistribution& P, const JointDistribution& Q) {
    if (P.cells() != Q.cells())
        throw std::invalid_argument("kl_divergence: shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < P.cells(); ++i) {
        double p = P.prob_flat(i);
        if (p <= 0.0) continue;
        double q = Q.prob_flat(i);
        if (q <= 0.0) return kInf;
        total += p * std::log2(p / q);
    }
    return total;
}

// sum |P - Q|, in [0, 2].
inline double variational_distance(const JointDistribution& P, const JointDistribution& Q) {
    if (P.shape() != Q.shape())
        throw std::invalid_argument("variational_distance: axis mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < P.cells(); ++i)
        total += std::abs(P.prob_flat(i) - Q.prob_flat(i));
    return total;
}

}  // namespace racxpt
