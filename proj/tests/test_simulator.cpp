#include <doctest.h>

#include <racxpt/simulator.hpp>

using namespace racxpt;

namespace {

// Asymmetric compositions keep the two senders' classes disjoint (no
// cross-sender score ties on deterministic channels).
LibraryParams single_pair_params(std::int64_t n, double r1, double r2) {
    LibraryParams p;
    p.u_alphabet = Alphabet(1);
    p.x_alphabet = Alphabet(2);
    p.y_alphabet = Alphabet(2);
    p.n = n;
    p.p_u = EmpiricalType({p.u_alphabet}, {n}, n);
    EmpiricalType balanced({p.u_alphabet, Alphabet(2)}, {n / 2, n - n / 2}, n);
    EmpiricalType skewed({p.u_alphabet, Alphabet(2)}, {n / 3, n - n / 3}, n);
    p.x_compositions = {balanced};
    p.y_compositions = {skewed};
    p.rates1 = {r1};
    p.rates2 = {r2};
    return p;
}

DecoderConfig const_eta(double eta) {
    DecoderConfig cfg;
    cfg.eta_schedule = "constant";
    cfg.eta = eta;
    return cfg;
}

}  // namespace

TEST_CASE("monte carlo matches the exact oracle within three sigma") {
    // twenty-plus small configurations across channels, rates and thresholds
    int checked = 0;
    for (double flip : {0.05, 0.1, 0.2}) {
        MacChannel W = make_bsc_pair(flip);
        for (std::int64_t n : {4, 6}) {
            for (double rate : {0.2, 0.35}) {
                for (double eta : {0.02, 0.1}) {
                    LibraryParams p = single_pair_params(n, rate, rate);
                    CodebookLibraryPair lib = build_library(p, 17 + (std::uint64_t)checked);
                    DecoderConfig cfg = const_eta(eta);
                    ErrorEstimate exact = exact_err_d(lib, W, 0, 0, cfg);
                    ErrorEstimate mc = estimate_err_d(lib, W, 0, 0, cfg, 4000,
                                                      900 + (std::uint64_t)checked);
                    double sigma = std::max(mc.std_err, 1e-4);
                    CHECK(std::abs(mc.mean - exact.mean) <= 3.5 * sigma);
                    ++checked;
                }
            }
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("deterministic channels have zero-or-one exact errors") {
    MacChannel W = make_noiseless_pair();
    LibraryParams p = single_pair_params(6, 0.3, 0.3);
    ResampleOutcome out = resample_until_packed(p, 10, 3);
    DecoderConfig cfg = const_eta(0.05);
    ErrorEstimate e = exact_err_d(out.library, W, 0, 0, cfg);
    CHECK(e.mean == doctest::Approx(0.0));
    CHECK(e.std_err == 0.0);
    ErrorEstimate mc = estimate_err_d(out.library, W, 0, 0, cfg, 2000, 5);
    CHECK(mc.mean == doctest::Approx(0.0));
    // the collision error is then total: every verdict is a message
    ErrorEstimate ec = exact_err_c(out.library, W, 0, 0, cfg);
    CHECK(ec.mean == doctest::Approx(1.0));
}

TEST_CASE("estimates are reproducible across worker counts") {
    MacChannel W = make_bsc_pair(0.1);
    LibraryParams p = single_pair_params(8, 0.25, 0.25);
    CodebookLibraryPair lib = build_library(p, 3);
    DecoderConfig cfg = const_eta(0.05);
    ErrorEstimate one = estimate_err_d(lib, W, 0, 0, cfg, 3000, 42, 1);
    ErrorEstimate two = estimate_err_d(lib, W, 0, 0, cfg, 3000, 42, 2);
    ErrorEstimate four = estimate_err_d(lib, W, 0, 0, cfg, 3000, 42, 4);
    CHECK(one.mean == two.mean);
    CHECK(one.mean == four.mean);
    // paired comparison support: same seed protocol gives identical draws for
    // the decode-error and collision-error estimates
    ErrorEstimate c1 = estimate_err_c(lib, W, 0, 0, cfg, 3000, 42, 2);
    ErrorEstimate c2 = estimate_err_c(lib, W, 0, 0, cfg, 3000, 42, 1);
    CHECK(c1.mean == c2.mean);
    CHECK_THROWS(estimate_err_d(lib, W, 0, 0, cfg, 0, 1));
    CHECK_THROWS(exact_err_d(lib, W, 0, 0, cfg, 1, /*term_guard=*/10.0));
}

TEST_CASE("decay profile trends for interior rates") {
    MacChannel W = make_bsc_pair(0.05);
    std::vector<LibraryParams> family;
    for (std::int64_t n : {6, 8, 10}) family.push_back(single_pair_params(n, 0.3, 0.3));
    auto rows = decay_profile(family, W, const_eta(0.05), 20'000, 99, 2);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.err >= 0.0);
        CHECK(r.err <= 1.0);
        CHECK(r.target_exponent > 0.0);
        CHECK(r.mode == "exact");
    }
}

TEST_CASE("mixture witness lands on the threshold") {
    MacChannel W = make_bsc_pair(0.05);
    std::vector<double> p_u = {1.0};
    Kernel uni = {{0.5, 0.5}};
    const double r1k = 0.2, r2j = 0.1, eta = 0.05;
    SolverConfig scfg;
    scfg.restarts = 6;
    MixtureWitness w = threshold_mixture_witness(W, p_u, uni, uni, uni, r1k, r2j, eta, scfg);
    CHECK(w.feasible);
    CHECK(w.r_value > eta);
    CHECK(w.r_value - eta <= 1e-4);
    for (double s : w.constraint_slack) CHECK(s >= -1e-9);
    // the true-channel terms of the objective vanish along the mixture path
    CHECK(w.divergence_term == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(w.coupling_term == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(w.objective == doctest::Approx(eta).epsilon(1e-3));
    CHECK(w.optimizer_value <= eta + 0.01);

    // endpoints of the mixture family
    JointDistribution v0 = detail_sim::mixture_joint(W, p_u, uni, uni, 0.0);
    JointDistribution v1 = detail_sim::mixture_joint(W, p_u, uni, uni, 1.0);
    double r0 = mutual_information(v0, {2}, {3, 4}, {0}) - r1k;
    double r1 = mutual_information(v1, {2}, {3, 4}, {0}) - r1k;
    CHECK(r0 > eta);
    CHECK(r1 == doctest::Approx(-r1k).epsilon(1e-9));

    // violated gap conditions are rejected
    CHECK_THROWS(threshold_mixture_witness(W, p_u, uni, uni, uni, r1k, r2j, 0.9, scfg));
    Kernel other = {{0.3, 0.7}};
    CHECK_THROWS(threshold_mixture_witness(W, p_u, uni, other, uni, r1k, r2j, eta, scfg));
}
