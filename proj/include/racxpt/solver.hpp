#pragma once

// Minimizer for the constrained information functionals behind the error
// exponents. Variables are per-u conditional tensors V_{XYZ|U=u} (or
// V_{X XtYZ|U=u} for the tilde problems) with the per-u X / Xt / Y marginals
// fixed by the constraint set. On that affine slice every objective used here
// is convex (each term is a relative entropy against a linear image of the
// variable), so projected gradient descent with a few restarts is reliable;
// the positive-part kink is smoothed with a softplus homotopy whose final
// approximation error is below 1e-5 bits.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "channel.hpp"
#include "rng.hpp"

namespace racxpt {

enum class LhBracket {
    None,    // divergence term only (diagnostic objective)
    X,       // | I(X ; Y,Z | U) - R |+
    Y,       // | I(Y ; X,Z | U) - R |+
    XY,      // | I(X ^ Y ^ Z | U) - R |+
    TildeX,  // | I(Xt ; X,Y,Z | U) - R |+   (five-variable problems)
};

struct SolverConfig {
    int restarts = 20;
    int max_iterations = 5000;
    double tol_bits = 1e-6;
    std::uint64_t seed = 1;
    bool include_coupling_term = true;  // the I(X ; Y | U) term
};

struct SolverOutcome {
    double value_bits = 0.0;  // objective at the returned point
    double divergence_bits = 0.0;
    double coupling_bits = 0.0;        // I(X ; Y | U)
    double positive_part_bits = 0.0;   // |bracket - R|+ (exact, not smoothed)
    double bracket_bits = 0.0;         // raw bracket information value
    std::vector<double> tensors;       // concatenated per-u conditionals
    bool converged = false;
    double marginal_violation = 0.0;   // worst per-u variational distance
    // threshold-constraint values (bits) when requested, else empty
    std::vector<double> constraint_values;
    bool feasible = true;
};

namespace solver_detail {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kTiny = 1e-300;

inline double xlog(double v) { return std::log(std::max(v, kTiny)); }

// One optimization problem instance. Five-variable mode is active when
// marg_xt is nonempty; the per-u cell layout is then (x, xt, y, z), otherwise
// (x, y, z).
struct Problem {
    std::vector<double> p_u;
    std::vector<std::vector<double>> marg_x, marg_y, marg_xt;
    int nx = 0, nxt = 0, ny = 0, nz = 0;
    const MacChannel* W = nullptr;

    LhBracket bracket = LhBracket::None;
    double rate_nats = 0.0;     // R in nats
    double lambda = -1.0;       // if >= 0, objective is f + lambda * bracket
    double softplus_tau = 0.0;  // smoothing width in nats (0 = exact kink)
    bool coupling_term = true;

    // threshold constraints: I(Xt;Y,Z|U) - r1k >= eta,
    // I(Y;Xt,Z|U) - r2j >= eta, I(Xt^Y^Z|U) - r1k - r2j >= eta.
    bool threshold_constraints = false;
    double eta_nats = 0.0, r1k_nats = 0.0, r2j_nats = 0.0;
    double penalty = 0.0;

    bool five_var() const { return !marg_xt.empty(); }
    std::size_t n_u() const { return p_u.size(); }
    std::size_t cells() const {
        return (std::size_t)nx * (five_var() ? (std::size_t)nxt : 1) * ny * nz;
    }
    std::size_t total() const { return n_u() * cells(); }

    std::size_t idx4(int x, int y, int z) const { return ((std::size_t)x * ny + y) * nz + z; }
    std::size_t idx5(int x, int xt, int y, int z) const {
        return (((std::size_t)x * nxt + xt) * ny + y) * nz + z;
    }
};

// Scratch marginals for one u-slice.
struct Marginals {
    std::vector<double> xyz;   // 5-var only: sum over xt
    std::vector<double> xtyz;  // 5-var only: sum over x
    std::vector<double> xy, yz, xz, z;
    std::vector<double> xtz, zonly;  // for the threshold measures on (xt,y,z)
};

inline void accumulate_marginals(const Problem& p, const double* T, Marginals& m) {
    const int nx = p.nx, ny = p.ny, nz = p.nz;
    if (!p.five_var()) {
        m.xy.assign((std::size_t)nx * ny, 0.0);
        m.yz.assign((std::size_t)ny * nz, 0.0);
        m.xz.assign((std::size_t)nx * nz, 0.0);
        m.z.assign((std::size_t)nz, 0.0);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y)
                for (int z = 0; z < nz; ++z) {
                    double v = T[p.idx4(x, y, z)];
                    m.xy[(std::size_t)x * ny + y] += v;
                    m.yz[(std::size_t)y * nz + z] += v;
                    m.xz[(std::size_t)x * nz + z] += v;
                    m.z[(std::size_t)z] += v;
                }
        return;
    }
    const int nxt = p.nxt;
    m.xyz.assign((std::size_t)nx * ny * nz, 0.0);
    m.xtyz.assign((std::size_t)nxt * ny * nz, 0.0);
    for (int x = 0; x < nx; ++x)
        for (int xt = 0; xt < nxt; ++xt)
            for (int y = 0; y < ny; ++y)
                for (int z = 0; z < nz; ++z) {
                    double v = T[p.idx5(x, xt, y, z)];
                    m.xyz[((std::size_t)x * ny + y) * nz + z] += v;
                    m.xtyz[((std::size_t)xt * ny + y) * nz + z] += v;
                }
    m.xy.assign((std::size_t)nx * ny, 0.0);
    m.yz.assign((std::size_t)ny * nz, 0.0);
    m.xtz.assign((std::size_t)nxt * nz, 0.0);
    m.z.assign((std::size_t)nz, 0.0);
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z) {
                double v = m.xyz[((std::size_t)x * ny + y) * nz + z];
                m.xy[(std::size_t)x * ny + y] += v;
            }
    for (int xt = 0; xt < nxt; ++xt)
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z) {
                double v = m.xtyz[((std::size_t)xt * ny + y) * nz + z];
                m.yz[(std::size_t)y * nz + z] += v;
                m.xtz[(std::size_t)xt * nz + z] += v;
                m.z[(std::size_t)z] += v;
            }
}

// Per-u information pieces in nats. The caller weights them by p_u.
struct SliceValues {
    double divergence = 0.0;
    double coupling = 0.0;
    double bracket = 0.0;
    std::array<double, 3> threshold_values{0.0, 0.0, 0.0};
};

inline SliceValues slice_values(const Problem& p, std::size_t u, const double* T,
                                const Marginals& m) {
    SliceValues out;
    const int nx = p.nx, ny = p.ny, nz = p.nz;
    const auto& a = p.marg_x[u];
    const auto& b = p.marg_y[u];
    if (!p.five_var()) {
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y) {
                double mxy = m.xy[(std::size_t)x * ny + y];
                if (mxy > 0.0)
                    out.coupling += mxy * (xlog(mxy) - xlog(a[(std::size_t)x] * b[(std::size_t)y]));
                for (int z = 0; z < nz; ++z) {
                    double v = T[p.idx4(x, y, z)];
                    if (v <= 0.0) continue;
                    out.divergence += v * (xlog(v) - xlog(mxy * p.W->w(x, y, z)));
                    switch (p.bracket) {
                        case LhBracket::X:
                            out.bracket += v * (xlog(v) - xlog(a[(std::size_t)x] * m.yz[(std::size_t)y * nz + z]));
                            break;
                        case LhBracket::Y:
                            out.bracket += v * (xlog(v) - xlog(b[(std::size_t)y] * m.xz[(std::size_t)x * nz + z]));
                            break;
                        case LhBracket::XY:
                            out.bracket += v * (xlog(v) - xlog(a[(std::size_t)x] * b[(std::size_t)y] * m.z[(std::size_t)z]));
                            break;
                        default:
                            break;
                    }
                }
            }
        return out;
    }
    const int nxt = p.nxt;
    const auto& at = p.marg_xt[u];
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) {
            double mxy = m.xy[(std::size_t)x * ny + y];
            if (mxy > 0.0)
                out.coupling += mxy * (xlog(mxy) - xlog(a[(std::size_t)x] * b[(std::size_t)y]));
            for (int z = 0; z < nz; ++z) {
                double k = m.xyz[((std::size_t)x * ny + y) * nz + z];
                if (k > 0.0) out.divergence += k * (xlog(k) - xlog(mxy * p.W->w(x, y, z)));
            }
        }
    if (p.bracket == LhBracket::TildeX) {
        for (int x = 0; x < nx; ++x)
            for (int xt = 0; xt < nxt; ++xt)
                for (int y = 0; y < ny; ++y)
                    for (int z = 0; z < nz; ++z) {
                        double v = T[p.idx5(x, xt, y, z)];
                        if (v <= 0.0) continue;
                        double k = m.xyz[((std::size_t)x * ny + y) * nz + z];
                        out.bracket += v * (xlog(v) - xlog(at[(std::size_t)xt] * k));
                    }
    }
    if (p.threshold_constraints) {
        for (int xt = 0; xt < nxt; ++xt)
            for (int y = 0; y < ny; ++y)
                for (int z = 0; z < nz; ++z) {
                    double v = m.xtyz[((std::size_t)xt * ny + y) * nz + z];
                    if (v <= 0.0) continue;
                    out.threshold_values[0] += v * (xlog(v) - xlog(at[(std::size_t)xt] * m.yz[(std::size_t)y * nz + z]));
                    out.threshold_values[1] += v * (xlog(v) - xlog(b[(std::size_t)y] * m.xtz[(std::size_t)xt * nz + z]));
                    out.threshold_values[2] += v * (xlog(v) - xlog(at[(std::size_t)xt] * b[(std::size_t)y] * m.z[(std::size_t)z]));
                }
    }
    return out;
}

struct Evaluation {
    double objective = 0.0;  // smoothed objective in nats (the solver's target)
    double divergence = 0.0, coupling = 0.0, bracket = 0.0;  // nats, p_u-weighted
    std::array<double, 3> threshold_values{0.0, 0.0, 0.0};
};

inline double softplus(double t, double tau) {
    if (tau <= 0.0) return t > 0.0 ? t : 0.0;
    double s = t / tau;
    if (s > 40.0) return t;
    if (s < -40.0) return 0.0;
    return tau * std::log1p(std::exp(s));
}

inline double softplus_slope(double t, double tau) {
    if (tau <= 0.0) return t > 0.0 ? 1.0 : 0.0;
    double s = t / tau;
    if (s > 40.0) return 1.0;
    if (s < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-s));
}

inline Evaluation evaluate(const Problem& p, const std::vector<double>& T,
                           std::vector<Marginals>& scratch) {
    Evaluation e;
    for (std::size_t u = 0; u < p.n_u(); ++u) {
        const double* Tu = T.data() + u * p.cells();
        accumulate_marginals(p, Tu, scratch[u]);
        SliceValues s = slice_values(p, u, Tu, scratch[u]);
        double w = p.p_u[u];
        e.divergence += w * s.divergence;
        e.coupling += w * s.coupling;
        e.bracket += w * s.bracket;
        for (int i = 0; i < 3; ++i) e.threshold_values[i] += w * s.threshold_values[i];
    }
    e.objective = e.divergence + (p.coupling_term ? e.coupling : 0.0);
    if (p.bracket != LhBracket::None) {
        if (p.lambda >= 0.0)
            e.objective += p.lambda * e.bracket;
        else
            e.objective += softplus(e.bracket - p.rate_nats, p.softplus_tau);
    }
    if (p.threshold_constraints && p.penalty > 0.0) {
        const double rhs[3] = {p.eta_nats + p.r1k_nats, p.eta_nats + p.r2j_nats,
                               p.eta_nats + p.r1k_nats + p.r2j_nats};
        for (int i = 0; i < 3; ++i) {
            double gap = rhs[i] - e.threshold_values[i];
            if (gap > 0.0) e.objective += p.penalty * gap * gap;
        }
    }
    return e;
}

// Gradient of the smoothed objective; `scratch` must already hold the
// marginals of T (call evaluate first).
inline void gradient(const Problem& p, const std::vector<double>& T, const Evaluation& e,
                     std::vector<Marginals>& scratch, std::vector<double>& G) {
    G.assign(p.total(), 0.0);
    double bracket_slope = 0.0;
    if (p.bracket != LhBracket::None)
        bracket_slope = p.lambda >= 0.0
                            ? p.lambda
                            : softplus_slope(e.bracket - p.rate_nats, p.softplus_tau);
    double threshold_slope[3] = {0.0, 0.0, 0.0};
    if (p.threshold_constraints && p.penalty > 0.0) {
        const double rhs[3] = {p.eta_nats + p.r1k_nats, p.eta_nats + p.r2j_nats,
                               p.eta_nats + p.r1k_nats + p.r2j_nats};
        for (int i = 0; i < 3; ++i) {
            double gap = rhs[i] - e.threshold_values[i];
            threshold_slope[i] = gap > 0.0 ? -2.0 * p.penalty * gap : 0.0;
        }
    }
    const int nx = p.nx, ny = p.ny, nz = p.nz;
    for (std::size_t u = 0; u < p.n_u(); ++u) {
        const double w = p.p_u[u];
        const double* Tu = T.data() + u * p.cells();
        double* Gu = G.data() + u * p.cells();
        const Marginals& m = scratch[u];
        const auto& a = p.marg_x[u];
        const auto& b = p.marg_y[u];
        if (!p.five_var()) {
            for (int x = 0; x < nx; ++x)
                for (int y = 0; y < ny; ++y) {
                    double mxy = m.xy[(std::size_t)x * ny + y];
                    double g_coupling =
                        p.coupling_term ? (xlog(mxy) - xlog(a[(std::size_t)x] * b[(std::size_t)y]) + 1.0) : 0.0;
                    for (int z = 0; z < nz; ++z) {
                        std::size_t c = p.idx4(x, y, z);
                        double v = Tu[c];
                        double g = xlog(v) - xlog(mxy * p.W->w(x, y, z));  // divergence part
                        g += g_coupling;
                        if (bracket_slope != 0.0) {
                            double gb = 0.0;
                            switch (p.bracket) {
                                case LhBracket::X:
                                    gb = xlog(v) - xlog(a[(std::size_t)x] * m.yz[(std::size_t)y * nz + z]);
                                    break;
                                case LhBracket::Y:
                                    gb = xlog(v) - xlog(b[(std::size_t)y] * m.xz[(std::size_t)x * nz + z]);
                                    break;
                                case LhBracket::XY:
                                    gb = xlog(v) - xlog(a[(std::size_t)x] * b[(std::size_t)y] * m.z[(std::size_t)z]);
                                    break;
                                default:
                                    break;
                            }
                            g += bracket_slope * gb;
                        }
                        Gu[c] = w * g;
                    }
                }
            continue;
        }
        const int nxt = p.nxt;
        const auto& at = p.marg_xt[u];
        for (int x = 0; x < nx; ++x)
            for (int xt = 0; xt < nxt; ++xt)
                for (int y = 0; y < ny; ++y) {
                    double mxy = m.xy[(std::size_t)x * ny + y];
                    double g_coupling =
                        p.coupling_term ? (xlog(mxy) - xlog(a[(std::size_t)x] * b[(std::size_t)y]) + 1.0) : 0.0;
                    for (int z = 0; z < nz; ++z) {
                        std::size_t c = p.idx5(x, xt, y, z);
                        double v = Tu[c];
                        double k = m.xyz[((std::size_t)x * ny + y) * nz + z];
                        double g = xlog(k) - xlog(mxy * p.W->w(x, y, z));  // divergence via K
                        g += g_coupling;
                        if (bracket_slope != 0.0 && p.bracket == LhBracket::TildeX)
                            g += bracket_slope * (xlog(v) - xlog(at[(std::size_t)xt] * k));
                        if (p.threshold_constraints) {
                            double mm = m.xtyz[((std::size_t)xt * ny + y) * nz + z];
                            if (threshold_slope[0] != 0.0)
                                g += threshold_slope[0] *
                                     (xlog(mm) - xlog(at[(std::size_t)xt] * m.yz[(std::size_t)y * nz + z]));
                            if (threshold_slope[1] != 0.0)
                                g += threshold_slope[1] *
                                     (xlog(mm) - xlog(b[(std::size_t)y] * m.xtz[(std::size_t)xt * nz + z]));
                            if (threshold_slope[2] != 0.0)
                                g += threshold_slope[2] * (xlog(mm) - xlog(at[(std::size_t)xt] *
                                                                      b[(std::size_t)y] * m.z[(std::size_t)z]));
                        }
                        Gu[c] = w * g;
                    }
                }
    }
}

// Euclidean projection of one u-slice onto
//   { T >= 0, X-marginal = a, Y-marginal = b (, Xt-marginal = at) }
// via Dykstra's alternating projections (marginal sets are affine, the
// orthant supplies the single correction vector).
inline void project_slice(const Problem& p, std::size_t u, double* T) {
    const int nx = p.nx, ny = p.ny, nz = p.nz;
    const int nxt = p.five_var() ? p.nxt : 1;
    const std::size_t cells = p.cells();
    static thread_local std::vector<double> corr;
    corr.assign(cells, 0.0);
    const auto& a = p.marg_x[u];
    const auto& b = p.marg_y[u];

    auto project_axis_x = [&] {
        for (int x = 0; x < nx; ++x) {
            double sum = 0.0;
            std::size_t base = (std::size_t)x * nxt * ny * nz;
            std::size_t cnt = (std::size_t)nxt * ny * nz;
            for (std::size_t i = 0; i < cnt; ++i) sum += T[base + i];
            double delta = (a[(std::size_t)x] - sum) / (double)cnt;
            for (std::size_t i = 0; i < cnt; ++i) T[base + i] += delta;
        }
    };
    auto project_axis_y = [&] {
        for (int y = 0; y < ny; ++y) {
            double sum = 0.0;
            for (int x = 0; x < nx; ++x)
                for (int xt = 0; xt < nxt; ++xt)
                    for (int z = 0; z < nz; ++z)
                        sum += T[(((std::size_t)x * nxt + xt) * ny + y) * nz + z];
            double delta = (b[(std::size_t)y] - sum) / (double)(nx * nxt * nz);
            for (int x = 0; x < nx; ++x)
                for (int xt = 0; xt < nxt; ++xt)
                    for (int z = 0; z < nz; ++z)
                        T[(((std::size_t)x * nxt + xt) * ny + y) * nz + z] += delta;
        }
    };
    auto project_axis_xt = [&] {
        if (!p.five_var()) return;
        const auto& at = p.marg_xt[u];
        for (int xt = 0; xt < p.nxt; ++xt) {
            double sum = 0.0;
            for (int x = 0; x < nx; ++x)
                for (int y = 0; y < ny; ++y)
                    for (int z = 0; z < nz; ++z)
                        sum += T[(((std::size_t)x * p.nxt + xt) * ny + y) * nz + z];
            double delta = (at[(std::size_t)xt] - sum) / (double)(nx * ny * nz);
            for (int x = 0; x < nx; ++x)
                for (int y = 0; y < ny; ++y)
                    for (int z = 0; z < nz; ++z)
                        T[(((std::size_t)x * p.nxt + xt) * ny + y) * nz + z] += delta;
        }
    };

    for (int cycle = 0; cycle < 400; ++cycle) {
        project_axis_x();
        project_axis_y();
        project_axis_xt();
        // orthant with Dykstra correction
        double clipped = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            double y0 = T[i] + corr[i];
            double y1 = y0 < 0.0 ? 0.0 : y0;
            corr[i] = y0 - y1;  // = min(y0, 0)
            clipped += y1 - T[i] > 0 ? y1 - T[i] : T[i] - y1;
            T[i] = y1;
        }
        // check marginal residuals
        double viol = 0.0;
        for (int x = 0; x < nx; ++x) {
            double sum = 0.0;
            std::size_t base = (std::size_t)x * nxt * ny * nz;
            std::size_t cnt = (std::size_t)nxt * ny * nz;
            for (std::size_t i = 0; i < cnt; ++i) sum += T[base + i];
            viol = std::max(viol, std::abs(sum - a[(std::size_t)x]));
        }
        for (int y = 0; y < ny; ++y) {
            double sum = 0.0;
            for (int x = 0; x < nx; ++x)
                for (int xt = 0; xt < nxt; ++xt)
                    for (int z = 0; z < nz; ++z)
                        sum += T[(((std::size_t)x * nxt + xt) * ny + y) * nz + z];
            viol = std::max(viol, std::abs(sum - b[(std::size_t)y]));
        }
        if (p.five_var()) {
            const auto& at = p.marg_xt[u];
            for (int xt = 0; xt < p.nxt; ++xt) {
                double sum = 0.0;
                for (int x = 0; x < nx; ++x)
                    for (int y = 0; y < ny; ++y)
                        for (int z = 0; z < nz; ++z)
                            sum += T[(((std::size_t)x * p.nxt + xt) * ny + y) * nz + z];
                viol = std::max(viol, std::abs(sum - at[(std::size_t)xt]));
            }
        }
        if (viol < 1e-13 && clipped < 1e-13) break;
    }
    for (std::size_t i = 0; i < cells; ++i)
        if (T[i] < 0.0) T[i] = 0.0;
}

inline void project(const Problem& p, std::vector<double>& T) {
    for (std::size_t u = 0; u < p.n_u(); ++u) project_slice(p, u, T.data() + u * p.cells());
}

// Feasible reference point: product of the fixed marginals pushed through W.
inline std::vector<double> truth_start(const Problem& p) {
    std::vector<double> T(p.total(), 0.0);
    for (std::size_t u = 0; u < p.n_u(); ++u) {
        double* Tu = T.data() + u * p.cells();
        for (int x = 0; x < p.nx; ++x)
            for (int y = 0; y < p.ny; ++y)
                for (int z = 0; z < p.nz; ++z) {
                    double v = p.marg_x[u][(std::size_t)x] * p.marg_y[u][(std::size_t)y] * p.W->w(x, y, z);
                    if (!p.five_var()) {
                        Tu[p.idx4(x, y, z)] = v;
                    } else {
                        for (int xt = 0; xt < p.nxt; ++xt)
                            Tu[p.idx5(x, xt, y, z)] = v * p.marg_xt[u][(std::size_t)xt];
                    }
                }
    }
    return T;
}

struct RunResult {
    std::vector<double> T;
    Evaluation eval;
    bool converged = false;
};

// Projected gradient descent with Armijo backtracking on the smoothed
// objective. Convergence means the objective stalled before the iteration cap.
inline RunResult run_descent(const Problem& p, std::vector<double> T, int max_iter,
                             double tol_nats) {
    std::vector<Marginals> scratch(p.n_u());
    project(p, T);
    Evaluation cur = evaluate(p, T, scratch);
    std::vector<double> G, cand;
    double step = 0.5;
    bool converged = false;
    int stall = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        gradient(p, T, cur, scratch, G);
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            cand = T;
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] -= step * G[i];
            project(p, cand);
            Evaluation next = evaluate(p, cand, scratch);
            double move = 0.0;
            for (std::size_t i = 0; i < cand.size(); ++i) {
                double d = cand[i] - T[i];
                move += d * d;
            }
            if (next.objective <= cur.objective - 1e-4 * move / std::max(step, 1e-12)) {
                double gain = cur.objective - next.objective;
                T.swap(cand);
                cur = next;
                improved = true;
                step = std::min(step * 1.3, 8.0);
                if (gain < tol_nats && std::sqrt(move) < 1e-9) {
                    ++stall;
                } else {
                    stall = 0;
                }
                break;
            }
            step *= 0.35;
            if (step < 1e-14) break;
        }
        if (!improved || stall >= 3) {
            converged = true;
            break;
        }
    }
    // refresh marginals for the final tensors
    cur = evaluate(p, T, scratch);
    return RunResult{std::move(T), cur, converged};
}

inline std::vector<double> random_start(const Problem& p, Rng& rng) {
    std::vector<double> T(p.total());
    for (std::size_t u = 0; u < p.n_u(); ++u) {
        auto d = rng.next_dirichlet(p.cells());
        for (std::size_t i = 0; i < p.cells(); ++i) T[u * p.cells() + i] = d[i];
    }
    project(p, T);
    return T;
}

inline double marginal_violation(const Problem& p, const std::vector<double>& T) {
    double worst = 0.0;
    const int nxt = p.five_var() ? p.nxt : 1;
    for (std::size_t u = 0; u < p.n_u(); ++u) {
        const double* Tu = T.data() + u * p.cells();
        double dist = 0.0;
        for (int x = 0; x < p.nx; ++x) {
            double sum = 0.0;
            std::size_t base = (std::size_t)x * nxt * p.ny * p.nz;
            std::size_t cnt = (std::size_t)nxt * p.ny * p.nz;
            for (std::size_t i = 0; i < cnt; ++i) sum += Tu[base + i];
            dist += std::abs(sum - p.marg_x[u][(std::size_t)x]);
        }
        worst = std::max(worst, dist);
        dist = 0.0;
        for (int y = 0; y < p.ny; ++y) {
            double sum = 0.0;
            for (int x = 0; x < p.nx; ++x)
                for (int xt = 0; xt < nxt; ++xt)
                    for (int z = 0; z < p.nz; ++z)
                        sum += Tu[(((std::size_t)x * nxt + xt) * p.ny + y) * p.nz + z];
            dist += std::abs(sum - p.marg_y[u][(std::size_t)y]);
        }
        worst = std::max(worst, dist);
        if (p.five_var()) {
            dist = 0.0;
            for (int xt = 0; xt < p.nxt; ++xt) {
                double sum = 0.0;
                for (int x = 0; x < p.nx; ++x)
                    for (int y = 0; y < p.ny; ++y)
                        for (int z = 0; z < p.nz; ++z)
                            sum += Tu[(((std::size_t)x * p.nxt + xt) * p.ny + y) * p.nz + z];
                dist += std::abs(sum - p.marg_xt[u][(std::size_t)xt]);
            }
            worst = std::max(worst, dist);
        }
    }
    return worst;
}

// Multistart + softplus homotopy driver. `extra_starts` lets callers seed
// known-good candidates (the mixture witnesses of the threshold problems).
inline SolverOutcome solve(Problem p, const SolverConfig& cfg,
                           const std::vector<std::vector<double>>& extra_starts = {}) {
    const double tol_nats = cfg.tol_bits * kLn2;
    const bool kinked = p.bracket != LhBracket::None && p.lambda < 0.0;
    const std::vector<double> taus =
        kinked ? std::vector<double>{0.05, 0.01, 0.002, 2e-4, 2e-5} : std::vector<double>{0.0};

    std::vector<std::vector<double>> starts;
    starts.push_back(truth_start(p));
    for (const auto& s : extra_starts) starts.push_back(s);
    Rng rng(cfg.seed);
    for (int r = (int)starts.size(); r < std::max(1, cfg.restarts); ++r)
        starts.push_back(random_start(p, rng));

    const int iters_per_phase = std::max(50, cfg.max_iterations / (int)taus.size());
    auto threshold_feasible = [&](const Evaluation& e) {
        if (!p.threshold_constraints) return true;
        return e.threshold_values[0] >= p.eta_nats + p.r1k_nats - 1e-7 &&
               e.threshold_values[1] >= p.eta_nats + p.r2j_nats - 1e-7 &&
               e.threshold_values[2] >= p.eta_nats + p.r1k_nats + p.r2j_nats - 1e-7;
    };
    RunResult best;
    bool have_best = false, best_feasible = false;
    for (auto& s0 : starts) {
        std::vector<double> T = s0;
        RunResult rr;
        for (double tau : taus) {
            p.softplus_tau = tau * kLn2;  // schedule is in bits
            rr = run_descent(p, std::move(T), iters_per_phase, tol_nats);
            T = rr.T;
        }
        // compare on the exact (unsmoothed) objective; feasibility outranks value
        p.softplus_tau = 0.0;
        std::vector<Marginals> scratch(p.n_u());
        rr.eval = evaluate(p, rr.T, scratch);
        bool feas = threshold_feasible(rr.eval);
        bool better = !have_best || (feas && !best_feasible) ||
                      (feas == best_feasible && rr.eval.objective < best.eval.objective);
        if (better) {
            best = std::move(rr);
            best_feasible = feas;
            have_best = true;
        }
    }

    SolverOutcome out;
    out.divergence_bits = best.eval.divergence / kLn2;
    out.coupling_bits = best.eval.coupling / kLn2;
    out.bracket_bits = best.eval.bracket / kLn2;
    if (p.bracket != LhBracket::None && p.lambda < 0.0) {
        double t = best.eval.bracket - p.rate_nats;
        out.positive_part_bits = t > 0.0 ? t / kLn2 : 0.0;
    }
    out.value_bits = best.eval.objective / kLn2;
    out.tensors = std::move(best.T);
    out.converged = best.converged;
    out.marginal_violation = marginal_violation(p, out.tensors);
    if (p.threshold_constraints) {
        out.constraint_values = {best.eval.threshold_values[0] / kLn2, best.eval.threshold_values[1] / kLn2,
                                 best.eval.threshold_values[2] / kLn2};
        double eta_bits = p.eta_nats / kLn2;
        double r1_bits = p.r1k_nats / kLn2, r2_bits = p.r2j_nats / kLn2;
        out.feasible = out.constraint_values[0] - r1_bits >= eta_bits - 1e-7 &&
                       out.constraint_values[1] - r2_bits >= eta_bits - 1e-7 &&
                       out.constraint_values[2] - r1_bits - r2_bits >= eta_bits - 1e-7;
    }
    return out;
}

}  // namespace solver_detail
}  // namespace racxpt
