#include <doctest.h>

#include <cmath>
#include <map>
#include <racxpt/measures.hpp>
#include <racxpt/types.hpp>
#include <set>

using namespace racxpt;

TEST_CASE("type enumeration counts and order") {
    Alphabet bin(2), tern(3);
    CHECK(enumerate_types(bin, 4).size() == 5);
    CHECK(enumerate_types(Alphabet(1), 9).size() == 1);
    CHECK(enumerate_types(tern, 3).size() == 10);
    CHECK_THROWS(enumerate_types(bin, 0));

    // lexicographic by counts, duplicate-free
    auto types = enumerate_types(tern, 4);
    CHECK(types.size() == 15);  // C(6,2)
    std::set<std::vector<std::int64_t>> seen;
    std::vector<std::int64_t> prev;
    for (const auto& t : types) {
        CHECK(seen.insert(t.counts).second);
        if (!prev.empty()) CHECK(prev < t.counts);
        prev = t.counts;
    }
}

TEST_CASE("conditional type enumeration") {
    Alphabet U(2), X(2);
    EmpiricalType base({U}, {3, 2}, 5);
    auto conds = enumerate_conditional_types(X, base);
    CHECK(conds.size() == 4 * 3);  // C(3+1,1) * C(2+1,1)
    for (const auto& c : conds) {
        CHECK(c.counts[0] + c.counts[1] == 3);
        CHECK(c.counts[2] + c.counts[3] == 2);
    }
    // the fact-family bound |P^n(X|P_u)| <= (n+1)^{|X||U|}
    CHECK((double)conds.size() <= std::pow(6.0, 4.0));
}

TEST_CASE("type class sizes") {
    Alphabet bin(2);
    CHECK(type_class_size(EmpiricalType({bin}, {2, 2}, 4)).as_u64() == 6);
    CHECK(type_class_size(EmpiricalType({bin}, {0, 7}, 7)).as_u64() == 1);
    CHECK(type_class_size(EmpiricalType({bin}, {2, 6}, 8)).as_u64() == 28);

    // fact-family sandwich: 2^{nH}/(n+1)^{|X|} <= |T| <= 2^{nH}, n <= 12, |X| <= 3
    for (int k = 1; k <= 3; ++k) {
        for (std::int64_t n = 1; n <= 12; ++n) {
            for (const auto& t : enumerate_types(Alphabet(k), n)) {
                double H = entropy(t.to_distribution(), {0});
                double lg = type_class_size(t).log2();
                CHECK(lg <= n * H + 1e-9);
                CHECK(lg >= n * H - k * std::log2((double)n + 1) - 1e-9);
            }
        }
    }
}

TEST_CASE("iid law of a type class obeys the divergence bound") {
    // Q^n(T^n_P) <= 2^{-n D(P||Q)} verified by exact summation over all
    // sequences, n <= 10 binary (and a ternary spot check at n <= 5).
    auto run = [](int k, std::int64_t n, const std::vector<double>& q) {
        JointDistribution Q({Alphabet(k)}, q);
        std::map<std::vector<std::int64_t>, double> class_mass;
        std::vector<int> seq((std::size_t)n, 0);
        for (;;) {
            double p = 1.0;
            std::vector<std::int64_t> counts(k, 0);
            for (int s : seq) {
                p *= q[(std::size_t)s];
                ++counts[(std::size_t)s];
            }
            class_mass[counts] += p;
            int i = (int)n - 1;
            for (; i >= 0; --i) {
                if (++seq[(std::size_t)i] < k) break;
                seq[(std::size_t)i] = 0;
            }
            if (i < 0) break;
        }
        for (const auto& [counts, mass] : class_mass) {
            EmpiricalType t({Alphabet(k)}, counts, n);
            double d = kl_divergence(t.to_distribution(), Q);
            CHECK(std::log2(mass) <= -(double)n * d + 1e-9);
        }
    };
    for (std::int64_t n = 1; n <= 10; ++n) run(2, n, {0.3, 0.7});
    for (std::int64_t n = 1; n <= 5; ++n) run(3, n, {0.2, 0.5, 0.3});
}

TEST_CASE("joint types") {
    Alphabet bin(2);
    Sequence x(bin, {0, 1, 1, 0, 1, 0});
    EmpiricalType diag = joint_type_of({x, x});
    CHECK(diag.counts == std::vector<std::int64_t>{3, 0, 0, 3});

    Sequence c0(bin, {0, 0, 0, 0});
    Sequence c1(bin, {1, 1, 1, 1});
    EmpiricalType pm = joint_type_of({c0, c1});
    CHECK(pm.counts == std::vector<std::int64_t>{0, 4, 0, 0});

    Sequence y(bin, {1, 1, 0, 0, 1, 0});
    EmpiricalType j = joint_type_of({x, y});
    CHECK(j.n == 6);
    std::int64_t total = 0;
    for (auto v : j.counts) total += v;
    CHECK(total == 6);
    // marginal consistency with each sequence's own type
    CHECK(j.counts[0] + j.counts[1] == type_of(x).counts[0]);
    CHECK(j.counts[0] + j.counts[2] == type_of(y).counts[0]);

    Sequence shorter(bin, {0, 1});
    CHECK_THROWS(joint_type_of({x, shorter}));
}

TEST_CASE("rank and unrank are inverse bijections over the class") {
    Alphabet tern(3);
    EmpiricalType t({tern}, {2, 2, 1}, 5);
    ClassSize size = type_class_size(t);
    CHECK(size.as_u64() == 30);
    std::set<std::vector<int>> seen;
    for (std::uint64_t r = 0; r < size.as_u64(); ++r) {
        Sequence s = unrank_in_class(t, BigUint(r));
        CHECK(rank_in_class(s).as_u64() == r);
        CHECK(seen.insert(s.symbols).second);
        CHECK(type_of(s) == t);
    }
    // rank 0 is the lexicographically smallest member
    CHECK(unrank_in_class(t, BigUint(0)).symbols == smallest_in_class(t).symbols);
}

TEST_CASE("class sampling is uniform-ish and type-correct") {
    Alphabet bin(2);
    EmpiricalType t({bin}, {2, 2}, 4);
    Rng rng(2024);
    std::map<std::vector<int>, int> freq;
    for (int i = 0; i < 6000; ++i) ++freq[sample_from_class(t, rng).symbols];
    CHECK(freq.size() == 6);
    for (const auto& [sym, count] : freq) CHECK(count > 800);

    // conditional class: counts per u-group respected
    Sequence u(bin, {0, 0, 0, 1, 1, 1});
    EmpiricalType cond({bin, bin}, {1, 2, 2, 1}, 6);
    Sequence x = sample_from_conditional_class(u, cond, rng);
    CHECK(joint_type_of({u, x}) == cond);

    auto members = enumerate_conditional_class(u, cond);
    CHECK(members.size() == conditional_class_size(cond).as_u64());
    CHECK(members.size() == 9);
    for (const auto& m : members) CHECK(joint_type_of({u, m}) == cond);
}
