#pragma once

// Source-channel code constructions over the codebook library: the classical
// scheme (one codebook per source type class, rate = normalized log class
// size) and the type-informed scheme (codebooks indexed by type pairs, with
// compositions allowed to depend on both rates). Encoders map a source
// sequence to (type index, lexicographic rank inside its class); the decoder
// wrapper inverts the winning codeword back to source sequences, counting
// collision verdicts as errors.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>

#include "simulator.hpp"

namespace racxpt {

struct SourceSpec {
    Alphabet alphabet;
    JointDistribution Q;  // single-axis per-letter law

    SourceSpec(Alphabet a, JointDistribution q) : alphabet(std::move(a)), Q(std::move(q)) {
        if (Q.n_axes() != 1 || Q.axis(0).size != alphabet.size)
            throw std::invalid_argument("SourceSpec: law must be a distribution on the alphabet");
    }
};

enum class JsccMode { Classical, TypeInformed };

struct JsccBuildConfig {
    int packing_tries = 10;
    std::uint64_t seed = 1;
    // audits beyond this tuple cost skip the resampling step (noted on the code)
    std::uint64_t audit_guard = 10'000'000;
    std::uint64_t pair_guard = 10'000;  // cap on M1 * M2
};

struct JsccCode {
    JsccMode mode = JsccMode::Classical;
    std::int64_t n = 0;
    SourceSpec s1, s2;
    CodebookLibraryPair library;

    JsccCode(JsccMode m, std::int64_t len, SourceSpec a, SourceSpec b)
        : mode(m), n(len), s1(std::move(a)), s2(std::move(b)) {}
    std::vector<EmpiricalType> types1, types2;  // enumerations of the source type families
    std::vector<double> log2_class1, log2_class2;
    // codebook index per type (classical) or per type pair (type-informed)
    std::vector<std::size_t> book1, book2;
    std::vector<std::vector<std::size_t>> book1_pair, book2_pair;
    // inverse: codebook index -> source type index
    std::vector<std::size_t> type_of_book1, type_of_book2;
    double nu_prime = 0.0;  // realized type-approximation distance
    bool packing_audited = false;
    PackingAuditReport packing_report;

    std::size_t codebook1(std::size_t k, std::size_t l) const {
        return mode == JsccMode::Classical ? book1[k] : book1_pair[k][l];
    }
    std::size_t codebook2(std::size_t k, std::size_t l) const {
        return mode == JsccMode::Classical ? book2[l] : book2_pair[k][l];
    }
};

namespace detail_jscc {

inline std::vector<std::int64_t> largest_remainder(const std::vector<double>& weights,
                                                   std::int64_t units) {
    std::vector<std::int64_t> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rema(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = weights[i] * (double)units;
        out[i] = (std::int64_t)std::floor(exact);
        assigned += out[i];
        rema[i] = {exact - (double)out[i], i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::int64_t i = 0; i < units - assigned; ++i)
        ++out[rema[(std::size_t)i % rema.size()].second];
    return out;
}

// Quantizes a kernel row per u-group to integer counts; returns the joint
// (U, X) conditional type.
inline EmpiricalType quantize_kernel(const Kernel& kernel, const EmpiricalType& p_u,
                                     const Alphabet& x_alph) {
    const int m = p_u.axes[0].size;
    std::vector<std::int64_t> counts((std::size_t)m * x_alph.size, 0);
    for (int u = 0; u < m; ++u) {
        std::int64_t nu = p_u.counts[(std::size_t)u];
        if (nu == 0) continue;
        auto row = largest_remainder(kernel[(std::size_t)u], nu);
        for (int x = 0; x < x_alph.size; ++x) counts[(std::size_t)u * x_alph.size + x] = row[(std::size_t)x];
    }
    return EmpiricalType({p_u.axes[0], x_alph}, std::move(counts), p_u.n);
}

inline double approximation_distance(const std::vector<double>& p_u, const Kernel& kernel,
                                     const EmpiricalType& comp) {
    double dist = 0.0;
    const int m = (int)p_u.size();
    const int xs = comp.axes[1].size;
    for (int u = 0; u < m; ++u)
        for (int x = 0; x < xs; ++x) {
            double ideal = p_u[(std::size_t)u] * kernel[(std::size_t)u][(std::size_t)x];
            double realized = (double)comp.counts[(std::size_t)u * xs + x] / (double)comp.n;
            dist += std::abs(ideal - realized);
        }
    return dist;
}

inline void finish_library(JsccCode& code, const MacChannel& W, const LibraryParams& params,
                           const JsccBuildConfig& cfg) {
    (void)W;
    long double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < params.m1(); ++i) s1 += (long double)params.n1(i);
    for (std::size_t j = 0; j < params.m2(); ++j) s2 += (long double)params.n2(j);
    long double tuples = s1 * s2 * (1 + s1) * (1 + s2);
    if (tuples <= (long double)cfg.audit_guard) {
        ResampleOutcome out = resample_until_packed(params, cfg.packing_tries, cfg.seed,
                                                    cfg.audit_guard);
        code.library = std::move(out.library);
        code.packing_report = out.report;
        code.packing_audited = true;
    } else {
        code.library = build_library(params, derive_seed(cfg.seed, 0));
        code.library.notes.push_back("packing audit skipped: tuple cost beyond guard");
        code.packing_audited = false;
    }
}

}  // namespace detail_jscc

// Classical construction: M codebooks per sender, one per source type class,
// rate equal to the normalized log class size, compositions chosen by the
// one-argument maps and quantized to conditional types.
inline JsccCode build_classical(const SourceSpec& q1, const SourceSpec& q2, const MacChannel& W,
                                const std::vector<double>& p_u, const RateToCompositionMap& g1,
                                const RateToCompositionMap& g2, std::int64_t n,
                                const JsccBuildConfig& cfg = {}) {
    if (n < 1) throw std::invalid_argument("build_classical: n must be >= 1");
    JsccCode code(JsccMode::Classical, n, q1, q2);
    Alphabet u_alph((int)p_u.size());
    EmpiricalType p_u_type({u_alph}, detail_jscc::largest_remainder(p_u, n), n);

    code.types1 = enumerate_types(q1.alphabet, n);
    code.types2 = enumerate_types(q2.alphabet, n);
    if ((std::uint64_t)code.types1.size() * code.types2.size() > cfg.pair_guard)
        throw std::runtime_error("build_classical: codebook pair guard exceeded");

    LibraryParams params;
    params.u_alphabet = u_alph;
    params.x_alphabet = W.in1;
    params.y_alphabet = W.in2;
    params.p_u = p_u_type;
    params.n = n;
    double nu = 0.0;
    for (const auto& t : code.types1) {
        double lg = type_class_size(t).log2();
        code.log2_class1.push_back(lg);
        params.rates1.push_back(lg / (double)n);
        const Kernel& k = g1.at(lg / (double)n);
        EmpiricalType comp = detail_jscc::quantize_kernel(k, p_u_type, W.in1);
        nu = std::max(nu, detail_jscc::approximation_distance(p_u, k, comp));
        params.x_compositions.push_back(std::move(comp));
    }
    for (const auto& t : code.types2) {
        double lg = type_class_size(t).log2();
        code.log2_class2.push_back(lg);
        params.rates2.push_back(lg / (double)n);
        const Kernel& k = g2.at(lg / (double)n);
        EmpiricalType comp = detail_jscc::quantize_kernel(k, p_u_type, W.in2);
        nu = std::max(nu, detail_jscc::approximation_distance(p_u, k, comp));
        params.y_compositions.push_back(std::move(comp));
    }
    code.nu_prime = nu;
    for (std::size_t k = 0; k < code.types1.size(); ++k) {
        code.book1.push_back(k);
        code.type_of_book1.push_back(k);
    }
    for (std::size_t l = 0; l < code.types2.size(); ++l) {
        code.book2.push_back(l);
        code.type_of_book2.push_back(l);
    }
    detail_jscc::finish_library(code, W, params, cfg);
    return code;
}

// Type-informed construction: codebooks indexed by type pairs (k, l), with
// identical (composition, rate) columns collapsed so that maps ignoring the
// second argument reduce exactly to the classical code.
inline JsccCode build_type_informed(const SourceSpec& q1, const SourceSpec& q2,
                                    const MacChannel& W, const std::vector<double>& p_u,
                                    const RatePairToCompositionMap& g1,
                                    const RatePairToCompositionMap& g2, std::int64_t n,
                                    const JsccBuildConfig& cfg = {}) {
    if (n < 1) throw std::invalid_argument("build_type_informed: n must be >= 1");
    JsccCode code(JsccMode::TypeInformed, n, q1, q2);
    Alphabet u_alph((int)p_u.size());
    EmpiricalType p_u_type({u_alph}, detail_jscc::largest_remainder(p_u, n), n);

    code.types1 = enumerate_types(q1.alphabet, n);
    code.types2 = enumerate_types(q2.alphabet, n);
    const std::size_t m1 = code.types1.size(), m2 = code.types2.size();

    for (const auto& t : code.types1) code.log2_class1.push_back(type_class_size(t).log2());
    for (const auto& t : code.types2) code.log2_class2.push_back(type_class_size(t).log2());

    LibraryParams params;
    params.u_alphabet = u_alph;
    params.x_alphabet = W.in1;
    params.y_alphabet = W.in2;
    params.p_u = p_u_type;
    params.n = n;

    code.book1_pair.assign(m1, std::vector<std::size_t>(m2, 0));
    code.book2_pair.assign(m1, std::vector<std::size_t>(m2, 0));
    double nu = 0.0;
    // collapse key: (source type index, composition counts); the rate is a
    // function of the type index already
    std::map<std::pair<std::size_t, std::vector<std::int64_t>>, std::size_t> seen1, seen2;
    for (std::size_t k = 0; k < m1; ++k)
        for (std::size_t l = 0; l < m2; ++l) {
            double r1 = code.log2_class1[k] / (double)n;
            double r2 = code.log2_class2[l] / (double)n;
            {
                const Kernel& g = g1.at(r1, r2);
                EmpiricalType comp = detail_jscc::quantize_kernel(g, p_u_type, W.in1);
                nu = std::max(nu, detail_jscc::approximation_distance(p_u, g, comp));
                auto key = std::make_pair(k, comp.counts);
                auto it = seen1.find(key);
                if (it == seen1.end()) {
                    std::size_t idx = params.x_compositions.size();
                    params.x_compositions.push_back(std::move(comp));
                    params.rates1.push_back(r1);
                    code.type_of_book1.push_back(k);
                    it = seen1.emplace(std::move(key), idx).first;
                }
                code.book1_pair[k][l] = it->second;
            }
            {
                const Kernel& g = g2.at(r1, r2);
                EmpiricalType comp = detail_jscc::quantize_kernel(g, p_u_type, W.in2);
                nu = std::max(nu, detail_jscc::approximation_distance(p_u, g, comp));
                auto key = std::make_pair(l, comp.counts);
                auto it = seen2.find(key);
                if (it == seen2.end()) {
                    std::size_t idx = params.y_compositions.size();
                    params.y_compositions.push_back(std::move(comp));
                    params.rates2.push_back(r2);
                    code.type_of_book2.push_back(l);
                    it = seen2.emplace(std::move(key), idx).first;
                }
                code.book2_pair[k][l] = it->second;
            }
        }
    code.nu_prime = nu;
    if ((std::uint64_t)params.m1() * params.m2() > cfg.pair_guard)
        throw std::runtime_error("build_type_informed: codebook pair guard exceeded");
    detail_jscc::finish_library(code, W, params, cfg);
    return code;
}

// Encoding: source sequence (plus the other source's type in type-informed
// mode) to a codeword via the lexicographic in-class bijection.
struct JsccEncoding {
    std::size_t type_index = 0;
    std::size_t book = 0;
    std::uint64_t rank = 0;
    Sequence codeword;
};

inline std::size_t type_index_of(const std::vector<EmpiricalType>& types, const Sequence& s) {
    EmpiricalType t = type_of(s);
    for (std::size_t k = 0; k < types.size(); ++k)
        if (types[k] == t) return k;
    throw std::logic_error("type_index_of: type not found");
}

inline JsccEncoding jscc_encode1(const JsccCode& code, const Sequence& s1,
                                 std::size_t other_type_index = 0) {
    JsccEncoding e;
    e.type_index = type_index_of(code.types1, s1);
    e.book = code.mode == JsccMode::Classical ? code.book1[e.type_index]
                                              : code.book1_pair[e.type_index][other_type_index];
    e.rank = rank_in_class(s1).as_u64();
    e.codeword = code.library.A[e.book][(std::size_t)e.rank];
    return e;
}

inline JsccEncoding jscc_encode2(const JsccCode& code, const Sequence& s2,
                                 std::size_t other_type_index = 0) {
    JsccEncoding e;
    e.type_index = type_index_of(code.types2, s2);
    e.book = code.mode == JsccMode::Classical ? code.book2[e.type_index]
                                              : code.book2_pair[e.type_index][other_type_index];
    e.rank = rank_in_class(s2).as_u64();
    e.codeword = code.library.B[e.book][(std::size_t)e.rank];
    return e;
}

// Decoder wrapper: invert the winning codeword indices back to source
// sequences. Collision verdicts yield no output (counted as errors).
inline std::optional<std::pair<Sequence, Sequence>> jscc_decode(const JsccCode& code,
                                                                const Sequence& z,
                                                                const DecoderConfig& cfg) {
    DecoderOutput out = decode(code.library, z, cfg);
    if (out.collision) return std::nullopt;
    std::size_t k = code.type_of_book1[out.i];
    std::size_t l = code.type_of_book2[out.j];
    Sequence s1 = unrank_in_class(code.types1[k], BigUint(out.a));
    Sequence s2 = unrank_in_class(code.types2[l], BigUint(out.b));
    return std::make_pair(std::move(s1), std::move(s2));
}

// ---------------------------------------------------------------------------
// Total error via the type-class decomposition: the overall error is the
// class-pair weighted average of the per-pair wrong-decode probabilities,
// with exact class weights.

struct JsccErrorCell {
    std::size_t k = 0, l = 0;
    double weight = 0.0;
    double err = 0.0;
    double std_err = 0.0;
};

struct JsccErrorReport {
    ErrorEstimate total;
    std::vector<JsccErrorCell> cells;
    double skipped_weight = 0.0;  // type-pair mass below the weight floor (mc mode)
};

// log2 Q^n(T) for a source type.
inline double log2_class_mass(const EmpiricalType& t, const JointDistribution& Q) {
    double lg = type_class_size(t).log2();
    for (int s = 0; s < t.axes[0].size; ++s) {
        std::int64_t c = t.counts[(std::size_t)s];
        if (c == 0) continue;
        double q = Q.prob_flat((std::size_t)s);
        if (q <= 0.0) return -kInf;
        lg += (double)c * std::log2(q);
    }
    return lg;
}

inline JsccErrorReport jscc_error(const JsccCode& code, const MacChannel& W,
                                  const std::string& mode, std::uint64_t trials,
                                  std::uint64_t seed, const DecoderConfig& dcfg,
                                  unsigned threads = 1, double term_guard = 1e8,
                                  double weight_floor = 1e-9) {
    if (mode != "exact" && mode != "mc")
        throw std::invalid_argument("jscc_error: mode must be 'exact' or 'mc'");
    JsccErrorReport rep;
    long double total = 0.0L, var = 0.0L;
    for (std::size_t k = 0; k < code.types1.size(); ++k) {
        double w1 = std::exp2(log2_class_mass(code.types1[k], code.s1.Q));
        for (std::size_t l = 0; l < code.types2.size(); ++l) {
            double w2 = std::exp2(log2_class_mass(code.types2[l], code.s2.Q));
            double w = w1 * w2;
            JsccErrorCell cell;
            cell.k = k;
            cell.l = l;
            cell.weight = w;
            std::size_t i = code.codebook1(k, l), j = code.codebook2(k, l);
            if (w == 0.0) {
                rep.cells.push_back(cell);
                continue;
            }
            if (mode == "exact") {
                ErrorEstimate e = exact_err_d(code.library, W, i, j, dcfg, threads, term_guard);
                cell.err = e.mean;
            } else if (w < weight_floor) {
                rep.skipped_weight += w;
                rep.cells.push_back(cell);
                continue;
            } else {
                std::uint64_t t = std::max<std::uint64_t>(
                    64, (std::uint64_t)llround((double)trials * w));
                ErrorEstimate e = estimate_err_d(code.library, W, i, j, dcfg, t,
                                                 derive_seed(seed, k * 4096 + l), threads);
                cell.err = e.mean;
                cell.std_err = e.std_err;
            }
            total += (long double)w * cell.err;
            var += (long double)(w * cell.std_err) * (w * cell.std_err);
            rep.cells.push_back(cell);
        }
    }
    rep.total.mean = (double)total;
    rep.total.std_err = std::sqrt((double)var);
    rep.total.trials = trials;
    rep.total.mode = mode == "exact" ? "exact" : "monte-carlo";
    return rep;
}

}  // namespace racxpt
