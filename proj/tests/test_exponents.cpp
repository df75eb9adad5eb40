#include <doctest.h>

#include <racxpt/exponents.hpp>

#include "grid_oracle.hpp"

using namespace racxpt;

namespace {

MacChannel random_binary_channel(Rng& rng) {
    std::vector<double> k(8);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            double q = 0.05 + 0.9 * rng.next_double();
            k[((std::size_t)x * 2 + y) * 2 + 0] = 1.0 - q;
            k[((std::size_t)x * 2 + y) * 2 + 1] = q;
        }
    return MacChannel(Alphabet(2), Alphabet(2), Alphabet(2), std::move(k));
}

MarginalConstraint binary_constraint(double a1, double b1) {
    return MarginalConstraint{{1.0}, {{1.0 - a1, a1}}, {{1.0 - b1, b1}}, {}};
}

SolverConfig fast_solver() {
    SolverConfig cfg;
    cfg.restarts = 6;
    cfg.max_iterations = 2500;
    return cfg;
}

}  // namespace

TEST_CASE("divergence-only objective vanishes at the true channel") {
    MacChannel W = make_bsc_pair(0.15);
    MarginalConstraint c = binary_constraint(0.5, 0.3);
    ExponentResult r = minimize_over_vlh(VlhObjective::DivergenceOnly, RatePair(0, 0), W, c,
                                         fast_solver());
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r.value >= -1e-9);
    CHECK(r.marginal_violation < 1e-7);
}

TEST_CASE("point-mass composition kills the coupling term") {
    MacChannel W = make_adder();
    MarginalConstraint c{{1.0}, {{1.0, 0.0}}, {{0.4, 0.6}}, {}};
    for (auto obj : {VlhObjective::BracketX, VlhObjective::BracketY, VlhObjective::BracketXY}) {
        ExponentResult r = minimize_over_vlh(obj, RatePair(0.1, 0.1), W, c, fast_solver());
        CHECK(r.coupling_bits == doctest::Approx(0.0).epsilon(1e-7));
    }
}

TEST_CASE("solver matches the brute-force grid oracle") {
    Rng rng(314);
    SolverConfig cfg = fast_solver();
    for (int trial = 0; trial < 3; ++trial) {
        MacChannel W = random_binary_channel(rng);
        double a1 = 0.2 + 0.6 * rng.next_double();
        double b1 = 0.2 + 0.6 * rng.next_double();
        double r1 = rng.next_double() * 0.6;
        double r2 = rng.next_double() * 0.6;
        auto grid = oracle::grid_lh_oracle(W, a1, b1, r1, r2);
        MarginalConstraint c = binary_constraint(a1, b1);
        double ex = exponent_x_lh(RatePair(r1, r2), W, c, cfg).value;
        double ey = exponent_y_lh(RatePair(r1, r2), W, c, cfg).value;
        double exy = exponent_xy_lh(RatePair(r1, r2), W, c, cfg).value;
        CHECK(std::abs(ex - grid.ex) <= 0.02);
        CHECK(std::abs(ey - grid.ey) <= 0.02);
        CHECK(std::abs(exy - grid.exy) <= 0.02);
        // the solver may only beat the grid (grid points are feasible)
        CHECK(ex <= grid.ex + 1e-4);
        CHECK(ey <= grid.ey + 1e-4);
        CHECK(exy <= grid.exy + 1e-4);
    }
}

TEST_CASE("positivity dichotomy at clearly interior and exterior rates") {
    MacChannel W = make_noiseless_pair();
    MarginalConstraint c = binary_constraint(0.5, 0.5);
    SolverConfig cfg = fast_solver();
    // deep interior
    CHECK(exponent_lh(RatePair(0.0, 0.0), W, c, cfg).value > 0.2);
    ExponentResult mid = exponent_lh(RatePair(0.5, 0.5), W, c, cfg);
    CHECK(mid.value > 1e-3);
    CHECK(mid.value == doctest::Approx(mid.divergence_bits + mid.coupling_bits +
                                       mid.positive_part_bits)
                           .epsilon(1e-6));
    // outside the pentagon on the r1 face
    CHECK(exponent_lh(RatePair(1.2, 0.1), W, c, cfg).value < 1e-3);
    // outside on the sum face
    CHECK(exponent_lh(RatePair(0.99, 1.2), W, c, cfg).value < 1e-3);
}

TEST_CASE("exponent is coordinatewise nonincreasing in the rates") {
    MacChannel W = make_bsc_pair(0.08);
    MarginalConstraint c = binary_constraint(0.5, 0.5);
    SolverConfig cfg = fast_solver();
    double prev = kInf;
    for (double r : {0.0, 0.2, 0.4, 0.6, 0.8}) {
        double v = exponent_lh(RatePair(r, 0.3), W, c, cfg).value;
        CHECK(v <= prev + 1e-4);
        prev = v;
    }
    // profiles are exactly monotone by construction
    LhRateProfile prof = build_lh_profile(W, c, 65, cfg);
    prev = kInf;
    for (double r = 0.0; r <= 2.0; r += 0.05) {
        double v = prof.exponent(r, 0.3);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("profile agrees with direct solves") {
    MacChannel W = make_adder();
    MarginalConstraint c = binary_constraint(0.5, 0.4);
    SolverConfig cfg = fast_solver();
    LhRateProfile prof = build_lh_profile(W, c, 129, cfg);
    for (double r1 : {0.1, 0.4, 0.7})
        for (double r2 : {0.05, 0.5}) {
            double direct = exponent_lh(RatePair(r1, r2), W, c, cfg).value;
            CHECK(std::abs(direct - prof.exponent(r1, r2)) < 0.02);
        }
}

TEST_CASE("source reliability function") {
    JointDistribution uniform({Alphabet(3)}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (double R : {0.0, 0.5, 1.0, std::log2(3.0)})
        CHECK(source_reliability(R, uniform) == doctest::Approx(0.0));

    JointDistribution q({Alphabet(2)}, {0.9, 0.1});
    CHECK(source_reliability(0.0, q) == doctest::Approx(0.0));
    // 1-D oracle: binary P with H(P) = R on the Q-side branch
    {
        double R = 0.9;
        double best = kInf;
        for (double p = 0.50001; p < 1.0; p += 1e-5) {
            double h = -p * std::log2(p) - (1 - p) * std::log2(1 - p);
            if (h < R) continue;
            double d = p * std::log2(p / 0.9) + (1 - p) * std::log2((1 - p) / 0.1);
            best = std::min(best, d);
        }
        CHECK(source_reliability(R, q) == doctest::Approx(best).epsilon(1e-3));
    }
    // convex and nondecreasing on a 100-point grid
    std::vector<double> vals;
    for (int i = 0; i < 100; ++i) vals.push_back(source_reliability(i / 99.0, q));
    for (int i = 1; i < 100; ++i) CHECK(vals[i] >= vals[i - 1] - 1e-10);
    for (int i = 1; i < 99; ++i) CHECK(vals[i + 1] - 2 * vals[i] + vals[i - 1] >= -1e-7);

    // point mass: positive rates are unreachable
    JointDistribution pm = JointDistribution::point_mass({Alphabet(2)}, {0});
    CHECK(source_reliability(0.0, pm) == doctest::Approx(0.0));
    CHECK(source_reliability(0.5, pm) == kInf);
    CHECK_THROWS(source_reliability(-0.5, q));
    CHECK_THROWS(source_reliability(1.5, q));
}

TEST_CASE("composed exponent with constant maps and uniform sources") {
    MacChannel W = make_noiseless_pair();
    JointDistribution u2({Alphabet(2)}, {0.5, 0.5});
    Kernel unif = {{0.5, 0.5}};
    JsccExponentConfig cfg;
    cfg.rate_grid_1 = cfg.rate_grid_2 = 9;
    cfg.lambda_points = 33;
    EjResult ej = ej_exponent(u2, u2, W, {1.0}, RateToCompositionMap::constant(unif),
                              RateToCompositionMap::constant(unif), cfg);
    // uniform sources have zero reliability everywhere; the corner row must
    // show e-terms equal to 0
    bool corner_seen = false;
    for (const auto& row : ej.table)
        if (row.r1 == doctest::Approx(1.0) && row.r2 == doctest::Approx(1.0)) {
            corner_seen = true;
            CHECK(row.e1 == doctest::Approx(0.0));
            CHECK(row.e2 == doctest::Approx(0.0));
        }
    CHECK(corner_seen);
    CHECK(ej.value >= -1e-9);

    // degenerate sources: only the zero-rate row is finite, so the value is
    // the channel exponent at (0,0)
    JointDistribution pm = JointDistribution::point_mass({Alphabet(2)}, {0});
    EjResult ejpm = ej_exponent(pm, pm, W, {1.0}, RateToCompositionMap::constant(unif),
                                RateToCompositionMap::constant(unif), cfg);
    MarginalConstraint c = binary_constraint(0.5, 0.5);
    double e00 = exponent_lh(RatePair(0, 0), W, c, cfg.sweep_solver()).value;
    CHECK(ejpm.value == doctest::Approx(e00).epsilon(5e-3));
    CHECK(ejpm.r1 == doctest::Approx(0.0));
    CHECK(ejpm.r2 == doctest::Approx(0.0));
}

TEST_CASE("two-argument maps reduce to one-argument maps when they ignore R2") {
    MacChannel W = make_adder();
    JointDistribution q({Alphabet(2)}, {0.8, 0.2});
    RateToCompositionMap g1;
    g1.rates = {0.0, 0.5, 1.0};
    g1.kernels = {{{0.5, 0.5}}, {{0.6, 0.4}}, {{0.3, 0.7}}};
    RateToCompositionMap g2 = RateToCompositionMap::constant({{0.45, 0.55}});
    JsccExponentConfig cfg;
    cfg.rate_grid_1 = cfg.rate_grid_2 = 7;
    EjResult ej = ej_exponent(q, q, W, {1.0}, g1, g2, cfg);
    EjResult ej0 = ej0_exponent(q, q, W, {1.0}, RatePairToCompositionMap::from_first(g1),
                                RatePairToCompositionMap::constant({{0.45, 0.55}}), cfg);
    CHECK(ej0.value == doctest::Approx(ej.value).epsilon(1e-9));
    CHECK(ej0.value >= ej.value - 1e-9);
}

TEST_CASE("separate-coding exponent and its ordering") {
    MacChannel W = make_noiseless_pair();
    JointDistribution u2({Alphabet(2)}, {0.5, 0.5});
    JsccExponentConfig cfg;
    cfg.rate_grid_1 = cfg.rate_grid_2 = 7;
    cfg.lambda_points = 33;
    // uniform sources: every grid point has a zero reliability term
    EsLhResult es = es_lh_exponent(u2, u2, W, 4, cfg);
    CHECK(es.value == doctest::Approx(0.0).epsilon(1e-9));

    JointDistribution q1({Alphabet(2)}, {0.9, 0.1});
    JointDistribution q2({Alphabet(2)}, {0.85, 0.15});
    EsLhResult es2 = es_lh_exponent(q1, q2, W, 5, cfg);
    CHECK(es2.value > 0.0);
    EsLhResult es2again = es_lh_exponent(q1, q2, W, 5, cfg);
    CHECK(es2.value == doctest::Approx(es2again.value));  // seeded determinism

    ConstantMapBoundReport rep = constant_map_bound_check(q1, q2, W, 5, cfg);
    CHECK(rep.holds);
    CHECK(rep.ej_value >= rep.es_value - 1e-6);
}

TEST_CASE("equivalent form of the type-informed exponent") {
    MacChannel W = make_adder();
    JointDistribution q1({Alphabet(2)}, {0.88, 0.12});
    JointDistribution q2({Alphabet(2)}, {0.8, 0.2});
    JsccExponentConfig cfg;
    cfg.rate_grid_1 = cfg.rate_grid_2 = 5;
    cfg.lambda_points = 65;
    cfg.quantize_k = 8;
    EquivalentFormReport rep = equivalent_form_ej0(q1, q2, W, 4, cfg);
    CHECK(rep.gap <= 0.05);

    // zero-capacity channel: both routes give zero
    MacChannel useless(Alphabet(2), Alphabet(2), Alphabet(2),
                       {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    EquivalentFormReport zero = equivalent_form_ej0(q1, q2, useless, 3, cfg);
    CHECK(zero.equivalent_value == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(zero.ej0_witness_value == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("threshold-complement exponent equals the threshold when the gap conditions hold") {
    MacChannel W = make_bsc_pair(0.05);
    const double r1k = 0.2, r2j = 0.1, eta = 0.05;
    MarginalConstraint c{{1.0}, {{0.5, 0.5}}, {{0.5, 0.5}}, {{0.5, 0.5}}};
    SolverConfig cfg = fast_solver();
    ExponentResult r = threshold_complement_exponent(r1k, r2j, eta, W, c, cfg);
    CHECK(r.feasible);
    CHECK(r.value >= eta - 1e-6);
    CHECK(r.value <= eta + 0.01);

    // eta exceeding the information gaps: the minimum stays above eta or the
    // set is empty
    ExponentResult big = threshold_complement_exponent(r1k, r2j, 0.8, W, c, cfg);
    CHECK((std::isinf(big.value) || big.value > 0.8));

    MarginalConstraint no_tilde = binary_constraint(0.5, 0.5);
    CHECK_THROWS(threshold_complement_exponent(r1k, r2j, eta, W, no_tilde, cfg));
}
