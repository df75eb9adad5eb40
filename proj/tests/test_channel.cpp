#include <doctest.h>

#include <racxpt/channel.hpp>

using namespace racxpt;

namespace {

AuxStructure uniform_structure(const MacChannel& W) {
    AuxStructure s;
    s.p_u = {1.0};
    s.p_x_g_u = {std::vector<double>(W.in1.size, 1.0 / W.in1.size)};
    s.p_y_g_u = {std::vector<double>(W.in2.size, 1.0 / W.in2.size)};
    return s;
}

}  // namespace

TEST_CASE("pentagon examples") {
    MacChannel noiseless = make_noiseless_pair();
    Pentagon p = pentagon(noiseless, uniform_structure(noiseless));
    CHECK(p.r1_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.r2_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.sum_max == doctest::Approx(2.0).epsilon(1e-9));

    // output ignores both inputs
    MacChannel useless(Alphabet(2), Alphabet(2), Alphabet(2),
                       {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    Pentagon q = pentagon(useless, uniform_structure(useless));
    CHECK(q.r1_max == doctest::Approx(0.0));
    CHECK(q.r2_max == doctest::Approx(0.0));
    CHECK(q.sum_max == doctest::Approx(0.0));

    // clean copy of X only
    MacChannel copyx(Alphabet(2), Alphabet(2), Alphabet(2),
                     {1, 0, 1, 0, 0, 1, 0, 1});
    AuxStructure s = uniform_structure(copyx);
    s.p_x_g_u = {{0.25, 0.75}};
    Pentagon r = pentagon(copyx, s);
    CHECK(r.r1_max == doctest::Approx(0.8112781244591328).epsilon(1e-9));
    CHECK(r.r2_max == doctest::Approx(0.0));

    // pentagon invariants on random structures
    MacChannel adder = make_adder();
    for (int i = 0; i < 20; ++i) {
        for (auto& st : sample_aux_structures(adder, 8, 100 + i)) {
            Pentagon pp = pentagon(adder, st);
            CHECK(pp.r1_max >= -1e-12);
            CHECK(pp.r2_max >= -1e-12);
            CHECK(std::max(pp.r1_max, pp.r2_max) <= pp.sum_max + 1e-9);
            CHECK(pp.sum_max <= pp.r1_max + pp.r2_max + 1e-9);
        }
    }
}

TEST_CASE("interior test and monotonicity") {
    Pentagon p{1.0, 1.0, 2.0};
    CHECK(in_interior(RatePair(0.5, 0.5), p));
    CHECK_FALSE(in_interior(RatePair(1.0, 1.0), p));
    CHECK(in_interior(RatePair(0.7, 0.0), p));
    CHECK(in_interior(RatePair(0.0, 0.0), p));

    Pentagon tight{0.6, 0.7, 0.9};
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        double r1 = rng.next_double();
        double r2 = rng.next_double();
        if (in_interior(RatePair(r1, r2), tight)) {
            CHECK(in_interior(RatePair(r1 * 0.5, r2), tight));
            CHECK(in_interior(RatePair(r1, r2 * 0.5), tight));
        }
        // margin only shrinks the interior
        if (in_interior(RatePair(r1, r2), tight, 0.05))
            CHECK(in_interior(RatePair(r1, r2), tight));
    }
}

TEST_CASE("channel sampling is deterministic and matches the law") {
    MacChannel noiseless = make_noiseless_pair();
    Alphabet bin(2);
    Sequence x(bin, {0, 1, 1, 0});
    Sequence y(bin, {1, 1, 0, 0});
    Sequence z = sample_output(noiseless, x, y, 9);
    CHECK(z.symbols == std::vector<int>{1, 3, 2, 0});
    CHECK(sample_output(noiseless, x, y, 9).symbols == z.symbols);

    // empirical conditional law close to W at n = 10^4
    MacChannel bsc = make_bsc_pair(0.1);
    const int n = 10000;
    Rng gen(4242);
    std::vector<int> xs(n), ys(n);
    for (int t = 0; t < n; ++t) {
        xs[t] = (int)gen.next_below(2);
        ys[t] = (int)gen.next_below(2);
    }
    Sequence xl(bin, xs), yl(bin, ys);
    Sequence zl = sample_output(bsc, xl, yl, 777);
    // per (x, y) row empirical vs W within 0.05 variational distance
    for (int xv = 0; xv < 2; ++xv)
        for (int yv = 0; yv < 2; ++yv) {
            std::vector<double> emp(4, 0.0);
            int rows = 0;
            for (int t = 0; t < n; ++t)
                if (xs[t] == xv && ys[t] == yv) {
                    emp[(std::size_t)zl.symbols[t]] += 1.0;
                    ++rows;
                }
            REQUIRE(rows > 0);
            double dist = 0.0;
            for (int zv = 0; zv < 4; ++zv) dist += std::abs(emp[zv] / rows - bsc.w(xv, yv, zv));
            CHECK(dist < 0.05);
        }

    Sequence bad(bin, {0});
    CHECK_THROWS(sample_output(noiseless, x, bad, 1));
}

TEST_CASE("n-fold log probability via type identity") {
    MacChannel noiseless = make_noiseless_pair();
    Alphabet bin(2);
    Sequence x(bin, {0, 1, 0}), y(bin, {1, 1, 0});
    Sequence good(noiseless.out, {1, 3, 0});
    Sequence badz(noiseless.out, {0, 3, 0});
    CHECK(nfold_log_prob(noiseless, x, y, good) == doctest::Approx(0.0));
    CHECK(nfold_log_prob(noiseless, x, y, badz) == -kInf);

    // random triples: per-symbol product equals the type-functional form
    //   log2 W^n(z|x,y) = -n (D(V_{Z|XY} || W | V_{XY}) + H_V(Z|XY))
    MacChannel bsc = make_bsc_pair(0.2);
    Rng rng(5150);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + (int)rng.next_below(11);  // n <= 12
        std::vector<int> xs, ys, zs;
        for (int t = 0; t < n; ++t) {
            xs.push_back((int)rng.next_below(2));
            ys.push_back((int)rng.next_below(2));
            zs.push_back((int)rng.next_below(4));
        }
        Sequence sx(bin, xs), sy(bin, ys), sz(bsc.out, zs);
        double direct = nfold_log_prob(bsc, sx, sy, sz);
        EmpiricalType joint = joint_type_of({sx, sy, sz});
        JointDistribution V = joint.to_distribution();
        ConditionalKernel vzk = condition_on(V, {0, 1}, {2});
        double d = conditional_divergence(vzk, bsc.as_kernel(), V.marginal({0, 1}));
        double h = entropy(V, {2}, {0, 1});
        double via_types = -(double)n * (d + h);
        if (direct == -kInf)
            CHECK(via_types == -kInf);
        else
            CHECK(direct == doctest::Approx(via_types).epsilon(1e-9));
    }
}

TEST_CASE("standing assumption check") {
    MacChannel noiseless = make_noiseless_pair();
    JointDistribution q1({Alphabet(2)}, {0.85, 0.15});
    JointDistribution q2({Alphabet(2)}, {0.2, 0.8});
    auto res = standing_assumption_check(noiseless, q1, q2, 50);
    CHECK(res.holds);
    REQUIRE(res.witness.has_value());
    CHECK(in_interior(RatePair(entropy(q1, {0}), entropy(q2, {0})), res.witness_pentagon));

    MacChannel useless(Alphabet(2), Alphabet(2), Alphabet(2),
                       {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK_FALSE(standing_assumption_check(useless, q1, q2, 30).holds);

    // deterministic sources sit at the origin; any pentagon with positive
    // faces contains them
    JointDistribution det = JointDistribution::point_mass({Alphabet(2)}, {0});
    CHECK(standing_assumption_check(noiseless, det, det, 5).holds);
    CHECK_THROWS(standing_assumption_check(noiseless, q1, q2, 0));
}

TEST_CASE("channel presets and validation") {
    CHECK_THROWS(channel_from_preset("nope"));
    MacChannel adder = channel_from_preset("adder");
    CHECK(adder.out.size == 3);
    CHECK(adder.w(1, 1, 2) == 1.0);
    MacChannel bsc = channel_from_preset("bsc-pair:0.25");
    CHECK(bsc.w(0, 0, 0) == doctest::Approx(0.5625));
    CHECK_THROWS(MacChannel(Alphabet(2), Alphabet(2), Alphabet(2),
                            {0.5, 0.6, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}));
}
