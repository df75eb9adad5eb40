#include <doctest.h>

#include <racxpt/jscc.hpp>

using namespace racxpt;

namespace {

SourceSpec bernoulli(double p1) {
    return SourceSpec(Alphabet(2), JointDistribution({Alphabet(2)}, {1.0 - p1, p1}));
}

// Composition map sending each class rate to the class's own type (|U| = 1):
// the codebook then covers exactly the source type class.
RateToCompositionMap identity_g(const Alphabet& alph, std::int64_t n) {
    RateToCompositionMap g;
    for (const auto& t : enumerate_types(alph, n)) {
        g.rates.push_back(type_class_size(t).log2() / (double)n);
        std::vector<double> row(alph.size);
        for (int s = 0; s < alph.size; ++s)
            row[(std::size_t)s] = (double)t.counts[(std::size_t)s] / (double)n;
        g.kernels.push_back({row});
    }
    return g;
}

// Constant near-uniform composition: always feasible (the balanced class is
// the largest) and free of degenerate zero-entropy codebooks.
RateToCompositionMap uniform_g() { return RateToCompositionMap::constant({{0.5, 0.5}}); }

DecoderConfig const_eta(double eta) {
    DecoderConfig cfg;
    cfg.eta_schedule = "constant";
    cfg.eta = eta;
    return cfg;
}

}  // namespace

TEST_CASE("classical construction counts and rates") {
    MacChannel W = make_noiseless_pair();
    SourceSpec q = bernoulli(0.11);
    JsccBuildConfig bc;
    bc.seed = 12;
    JsccCode code = build_classical(q, q, W, {1.0}, identity_g(Alphabet(2), 4),
                                    identity_g(Alphabet(2), 4), 4, bc);
    CHECK(code.types1.size() == 5);
    CHECK(code.library.params.m1() == 5);
    // rate of the balanced-type codebook: log2(6)/4
    bool seen = false;
    for (std::size_t k = 0; k < code.types1.size(); ++k)
        if (code.types1[k].counts == std::vector<std::int64_t>{2, 2}) {
            CHECK(code.library.params.rates1[k] ==
                  doctest::Approx(std::log2(6.0) / 4.0).epsilon(1e-12));
            CHECK(code.library.A[k].size() == 6);
            seen = true;
        }
    CHECK(seen);
    CHECK(code.nu_prime <= 1e-12);  // identity compositions quantize exactly
    CHECK(code.packing_audited);
}

TEST_CASE("encoding is a bijection inverted by the decoder tables") {
    MacChannel W = make_noiseless_pair();
    SourceSpec q = bernoulli(0.2);
    const std::int64_t n = 6;
    JsccCode code = build_classical(q, q, W, {1.0}, identity_g(Alphabet(2), n),
                                    identity_g(Alphabet(2), n), n);
    // exhaustive over all source sequences: encode then invert through the
    // rank tables recovers the sequence
    std::vector<int> sym((std::size_t)n, 0);
    for (int flat = 0; flat < (1 << n); ++flat) {
        for (int t = 0; t < n; ++t) sym[(std::size_t)t] = (flat >> t) & 1;
        Sequence s(Alphabet(2), sym);
        JsccEncoding e = jscc_encode1(code, s);
        Sequence back = unrank_in_class(code.types1[code.type_of_book1[e.book]], BigUint(e.rank));
        CHECK(back == s);
    }
}

TEST_CASE("type-informed construction indexes codebooks by type pairs") {
    MacChannel W = make_noiseless_pair();
    SourceSpec q = bernoulli(0.11);
    const std::int64_t n = 4;
    // a genuinely two-argument map: the composition of the low-rate books
    // leans with the other sender's rate (high-rate books must stay balanced
    // so they can carry the largest class)
    RatePairToCompositionMap g;
    g.rates1 = {0.0, 0.5, 0.646};
    g.rates2 = g.rates1;
    for (std::size_t i = 0; i < g.rates1.size(); ++i) {
        g.kernels.push_back({});
        for (std::size_t j = 0; j < g.rates2.size(); ++j) {
            double lean = g.rates1[i] >= 0.6 ? 0.5 : (j % 2 == 0 ? 0.5 : 0.25);
            g.kernels.back().push_back({{lean, 1.0 - lean}});
        }
    }
    JsccCode code = build_type_informed(q, q, W, {1.0}, g, g, n);
    // the logical codebook grid is |types1| x |types2| = 25 per sender
    CHECK(code.book1_pair.size() == 5);
    for (const auto& row : code.book1_pair) CHECK(row.size() == 5);
    CHECK(code.types1.size() * code.types2.size() == 25);
    // identical (type, composition, rate) columns are shared behind the grid
    CHECK(code.library.params.m1() <= 25);
    CHECK(code.library.params.m1() > 5);
}

TEST_CASE("type-informed code with one-argument maps equals the classical code") {
    MacChannel W = make_noiseless_pair();
    SourceSpec q = bernoulli(0.11);
    const std::int64_t n = 4;
    RateToCompositionMap g1 = uniform_g();
    JsccBuildConfig bc;
    bc.seed = 77;
    JsccCode classical = build_classical(q, q, W, {1.0}, g1, g1, n, bc);
    JsccCode informed = build_type_informed(q, q, W, {1.0},
                                            RatePairToCompositionMap::from_first(g1),
                                            RatePairToCompositionMap::from_second(g1), n, bc);
    REQUIRE(informed.library.params.m1() == classical.library.params.m1());
    for (std::size_t i = 0; i < classical.library.A.size(); ++i) {
        REQUIRE(informed.library.A[i].size() == classical.library.A[i].size());
        for (std::size_t a = 0; a < classical.library.A[i].size(); ++a)
            CHECK(informed.library.A[i][a] == classical.library.A[i][a]);
    }
    DecoderConfig cfg = const_eta(0.05);
    JsccErrorReport ec = jscc_error(classical, W, "exact", 0, 1, cfg);
    JsccErrorReport ei = jscc_error(informed, W, "exact", 0, 1, cfg);
    CHECK(std::abs(ec.total.mean - ei.total.mean) <= 1e-12);
}

TEST_CASE("class weights sum to one in exact arithmetic") {
    // Q = 11/100: sum over types of |T| * 11^k * 89^(n-k) must equal 100^n
    for (std::int64_t n : {4, 8, 12}) {
        BigUint total(0);
        for (const auto& t : enumerate_types(Alphabet(2), n)) {
            BigUint term = type_class_size(t).exact;
            for (std::int64_t c = 0; c < t.counts[1]; ++c) term.mul_u64(11);
            for (std::int64_t c = 0; c < t.counts[0]; ++c) term.mul_u64(89);
            total.add(term);
        }
        BigUint expect(1);
        for (std::int64_t c = 0; c < n; ++c) expect.mul_u64(100);
        CHECK(total == expect);
    }
    // and the floating route is consistent
    SourceSpec q = bernoulli(0.11);
    double mass = 0.0;
    for (const auto& t : enumerate_types(Alphabet(2), 10))
        mass += std::exp2(log2_class_mass(t, q.Q));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("point-mass sources over a noiseless channel decode perfectly") {
    // degenerate sources hit only the zero-rate codebooks; near-uniform
    // compositions keep those codewords informative (a zero-entropy
    // composition would make the score blind to them)
    MacChannel W = make_noiseless_pair();
    SourceSpec pm(Alphabet(2), JointDistribution::point_mass({Alphabet(2)}, {0}));
    const std::int64_t n = 6;
    RateToCompositionMap g = uniform_g();
    JsccBuildConfig bc;
    bc.seed = 3;
    JsccCode code = build_classical(pm, pm, W, {1.0}, g, g, n, bc);
    JsccErrorReport rep = jscc_error(code, W, "exact", 0, 1, const_eta(0.05));
    CHECK(rep.total.mean == doctest::Approx(0.0));
}

TEST_CASE("decomposition equals end-to-end enumeration at n = 4") {
    MacChannel W = make_noiseless_pair();
    SourceSpec q = bernoulli(0.11);
    const std::int64_t n = 4;
    RateToCompositionMap g = identity_g(Alphabet(2), n);
    JsccBuildConfig bc;
    bc.seed = 5;
    JsccCode code = build_classical(q, q, W, {1.0}, g, g, n, bc);
    DecoderConfig cfg = const_eta(0.05);
    JsccErrorReport rep = jscc_error(code, W, "exact", 0, 1, cfg);

    // independent end-to-end oracle: enumerate every source pair, push it
    // through encode / channel / decode, and weight by the product law
    long double total = 0.0L;
    std::vector<int> sa((std::size_t)n), sb((std::size_t)n);
    for (int fa = 0; fa < (1 << n); ++fa) {
        for (int t = 0; t < n; ++t) sa[(std::size_t)t] = (fa >> t) & 1;
        Sequence s1(Alphabet(2), sa);
        for (int fb = 0; fb < (1 << n); ++fb) {
            for (int t = 0; t < n; ++t) sb[(std::size_t)t] = (fb >> t) & 1;
            Sequence s2(Alphabet(2), sb);
            JsccEncoding e1 = jscc_encode1(code, s1);
            JsccEncoding e2 = jscc_encode2(code, s2);
            Sequence z = detail_sim::deterministic_output(W, e1.codeword, e2.codeword);
            auto decoded = jscc_decode(code, z, cfg);
            bool ok = decoded && decoded->first == s1 && decoded->second == s2;
            if (!ok) {
                long double w = 1.0L;
                for (int t = 0; t < n; ++t) w *= sa[(std::size_t)t] ? 0.11L : 0.89L;
                for (int t = 0; t < n; ++t) w *= sb[(std::size_t)t] ? 0.11L : 0.89L;
                total += w;
            }
        }
    }
    CHECK(rep.total.mean == doctest::Approx((double)total).epsilon(1e-12));
}

TEST_CASE("monte carlo decomposition tracks the exact value") {
    MacChannel W = make_bsc_pair(0.08);
    SourceSpec q = bernoulli(0.15);
    const std::int64_t n = 4;
    RateToCompositionMap g = identity_g(Alphabet(2), n);
    JsccCode code = build_classical(q, q, W, {1.0}, g, g, n);
    DecoderConfig cfg = const_eta(0.05);
    JsccErrorReport exact = jscc_error(code, W, "exact", 0, 1, cfg);
    JsccErrorReport mc = jscc_error(code, W, "mc", 40'000, 9, cfg);
    CHECK(std::abs(exact.total.mean - mc.total.mean) <=
          3.0 * std::max(mc.total.std_err, 5e-3));
    CHECK_THROWS(jscc_error(code, W, "bogus", 10, 1, cfg));
}
