#pragma once

// Dense probability tensor over a product of finite alphabets: the universal
// carrier for source laws, auxiliary-structure joints and channel-induced
// joints. Immutable after construction; all operations return new values.

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "alphabet.hpp"

namespace racxpt {

constexpr double kMassTolerance = 1e-9;

class JointDistribution {
  public:
    JointDistribution() = default;

    // normalize=true rescales the given weights to total mass 1 (explicit
    // construction is the only place renormalization ever happens).
    JointDistribution(std::vector<Alphabet> axes, std::vector<double> probs, bool normalize = false)
        : axes_(std::move(axes)), probs_(std::move(probs)) {
        shape_.reserve(axes_.size());
        for (const auto& a : axes_) shape_.push_back(a.size);
        if (probs_.size() != shape_cells(shape_))
            throw std::invalid_argument("JointDistribution: tensor size does not match axes");
        double mass = 0.0;
        for (double p : probs_) {
            if (p < 0.0) {
                if (p < -kMassTolerance)
                    throw std::invalid_argument("JointDistribution: negative entry");
                p = 0.0;
            }
            mass += p;
        }
        if (normalize) {
            if (mass <= 0.0) throw std::invalid_argument("JointDistribution: zero total mass");
            for (auto& p : probs_) p = std::max(0.0, p) / mass;
        } else if (std::abs(mass - 1.0) > kMassTolerance) {
            throw std::invalid_argument("JointDistribution: total mass differs from 1 by more than 1e-9");
        } else {
            for (auto& p : probs_) p = std::max(0.0, p);
        }
        strides_ = make_strides(shape_);
    }

    static JointDistribution uniform(std::vector<Alphabet> axes) {
        std::size_t cells = 1;
        for (const auto& a : axes) cells *= (std::size_t)a.size;
        return JointDistribution(std::move(axes), std::vector<double>(cells, 1.0 / (double)cells));
    }

    static JointDistribution point_mass(std::vector<Alphabet> axes, const std::vector<int>& at) {
        JointDistribution d;
        d.axes_ = std::move(axes);
        for (const auto& a : d.axes_) d.shape_.push_back(a.size);
        d.strides_ = make_strides(d.shape_);
        d.probs_.assign(shape_cells(d.shape_), 0.0);
        d.probs_[d.flat_index(at)] = 1.0;
        return d;
    }

    std::size_t n_axes() const { return axes_.size(); }
    const Alphabet& axis(std::size_t i) const { return axes_.at(i); }
    const std::vector<Alphabet>& axes() const { return axes_; }
    const std::vector<int>& shape() const { return shape_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t cells() const { return probs_.size(); }

    std::size_t flat_index(const std::vector<int>& idx) const {
        if (idx.size() != shape_.size())
            throw std::invalid_argument("JointDistribution: index rank mismatch");
        std::size_t f = 0;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] < 0 || idx[i] >= shape_[i])
                throw std::out_of_range("JointDistribution: index out of range");
            f += strides_[i] * (std::size_t)idx[i];
        }
        return f;
    }

    double prob(const std::vector<int>& idx) const { return probs_[flat_index(idx)]; }
    double prob_flat(std::size_t f) const { return probs_[f]; }

    void check_axis_subset(const std::vector<int>& subset) const {
        for (int a : subset)
            if (a < 0 || (std::size_t)a >= axes_.size())
                throw std::invalid_argument("JointDistribution: axis index out of range");
    }

    // Marginal over the listed axes, in the listed order.
    JointDistribution marginal(const std::vector<int>& keep) const {
        check_axis_subset(keep);
        std::vector<Alphabet> out_axes;
        std::vector<int> out_shape;
        for (int a : keep) {
            out_axes.push_back(axes_[a]);
            out_shape.push_back(shape_[a]);
        }
        std::vector<double> out(shape_cells(out_shape), 0.0);
        auto out_strides = make_strides(out_shape);
        std::vector<int> idx(shape_.size(), 0);
        std::size_t f = 0;
        do {
            std::size_t of = 0;
            for (std::size_t i = 0; i < keep.size(); ++i)
                of += out_strides[i] * (std::size_t)idx[keep[i]];
            out[of] += probs_[f];
            ++f;
        } while (next_multi_index(idx, shape_));
        JointDistribution d;
        d.axes_ = std::move(out_axes);
        d.shape_ = std::move(out_shape);
        d.strides_ = make_strides(d.shape_);
        d.probs_ = std::move(out);
        return d;
    }

    // Reorders axes.
    JointDistribution permute(const std::vector<int>& order) const {
        if (order.size() != axes_.size())
            throw std::invalid_argument("JointDistribution::permute: order rank mismatch");
        return marginal(order);
    }

    // Product with an independent factor: axes are concatenated.
    JointDistribution product(const JointDistribution& other) const {
        std::vector<Alphabet> axes = axes_;
        axes.insert(axes.end(), other.axes_.begin(), other.axes_.end());
        std::vector<double> out;
        out.reserve(probs_.size() * other.probs_.size());
        for (double a : probs_)
            for (double b : other.probs_) out.push_back(a * b);
        return JointDistribution(std::move(axes), std::move(out));
    }

  private:
    std::vector<Alphabet> axes_;
    std::vector<int> shape_;
    std::vector<std::size_t> strides_;
    std::vector<double> probs_;
};

// Stochastic kernel: rows over `given` axes, each row a distribution on the
// `out` axes. Rows with positive conditioning mass must sum to 1.
struct ConditionalKernel {
    std::vector<Alphabet> given_axes;
    std::vector<Alphabet> out_axes;
    // row-major over (given..., out...)
    std::vector<double> rows;

    std::size_t given_cells() const {
        std::size_t n = 1;
        for (const auto& a : given_axes) n *= (std::size_t)a.size;
        return n;
    }
    std::size_t out_cells() const {
        std::size_t n = 1;
        for (const auto& a : out_axes) n *= (std::size_t)a.size;
        return n;
    }
    const double* row(std::size_t g) const { return rows.data() + g * out_cells(); }

    void validate(double tol = kMassTolerance) const {
        if (rows.size() != given_cells() * out_cells())
            throw std::invalid_argument("ConditionalKernel: size mismatch");
        for (std::size_t g = 0; g < given_cells(); ++g) {
            double mass = 0.0;
            for (std::size_t o = 0; o < out_cells(); ++o) {
                double p = row(g)[o];
                if (p < -tol) throw std::invalid_argument("ConditionalKernel: negative entry");
                mass += p;
            }
            if (std::abs(mass - 1.0) > tol)
                throw std::invalid_argument("ConditionalKernel: row mass differs from 1");
        }
    }
};

// Conditional law of the trailing axes given the leading axes of P, reordered
// so that `given` axes come first. Rows with zero conditioning mass are left
// uniform so the kernel stays stochastic.
inline ConditionalKernel condition_on(const JointDistribution& P, const std::vector<int>& given,
                                      const std::vector<int>& out) {
    P.check_axis_subset(given);
    P.check_axis_subset(out);
    std::vector<int> order = given;
    order.insert(order.end(), out.begin(), out.end());
    JointDistribution reordered = P.marginal(order);
    ConditionalKernel k;
    for (int a : given) k.given_axes.push_back(P.axis(a));
    for (int a : out) k.out_axes.push_back(P.axis(a));
    std::size_t gc = k.given_cells(), oc = k.out_cells();
    k.rows.assign(gc * oc, 0.0);
    for (std::size_t g = 0; g < gc; ++g) {
        double mass = 0.0;
        for (std::size_t o = 0; o < oc; ++o) mass += reordered.prob_flat(g * oc + o);
        if (mass > 0.0) {
            for (std::size_t o = 0; o < oc; ++o)
                k.rows[g * oc + o] = reordered.prob_flat(g * oc + o) / mass;
        } else {
            for (std::size_t o = 0; o < oc; ++o) k.rows[g * oc + o] = 1.0 / (double)oc;
        }
    }
    return k;
}

// Joint P_given x kernel: axes are (given..., out...).
inline JointDistribution join(const JointDistribution& base, const ConditionalKernel& kernel) {
    if (base.n_axes() != kernel.given_axes.size())
        throw std::invalid_argument("join: base rank does not match kernel conditioning rank");
    for (std::size_t i = 0; i < base.n_axes(); ++i)
        if (!(base.axis(i) == kernel.given_axes[i]))
            throw std::invalid_argument("join: alphabet mismatch");
    std::vector<Alphabet> axes = base.axes();
    axes.insert(axes.end(), kernel.out_axes.begin(), kernel.out_axes.end());
    std::size_t oc = kernel.out_cells();
    std::vector<double> out(base.cells() * oc, 0.0);
    for (std::size_t g = 0; g < base.cells(); ++g)
        for (std::size_t o = 0; o < oc; ++o) out[g * oc + o] = base.prob_flat(g) * kernel.row(g)[o];
    return JointDistribution(std::move(axes), std::move(out));
}

}  // namespace racxpt
