#include "doctest.h"

#include <cmath>

#include "metrics.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace cdln;

TEST_CASE("denormalize_and_round") {
    auto specs = default_prompt_specs();
    CHECK(denormalize_and_round(0.5, prompt_spec_for(specs, 8)) == 30);
    CHECK(denormalize_and_round(1.0, prompt_spec_for(specs, 1)) == 12);
    PromptSpec ten{9, 0, 10, 0, 0};
    CHECK(denormalize_and_round(0.049, ten) == 0);   // 0.49 rounds down
    CHECK(denormalize_and_round(0.05, ten) == 1);    // 0.50 rounds half-up
    CHECK(denormalize_and_round(0.0, prompt_spec_for(specs, 1)) == 2);
}

TEST_CASE("round trip: normalize then denormalize is identity on every raw score") {
    for (const PromptSpec& spec : default_prompt_specs())
        for (int raw = spec.score_min; raw <= spec.score_max; ++raw)
            CHECK(denormalize_and_round(normalize_score(raw, spec), spec) == raw);
}

TEST_CASE("accuracy") {
    CHECK(accuracy(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3}) == 1.0);
    CHECK(accuracy(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 4}) ==
          doctest::Approx(2.0 / 3.0));
    CHECK(accuracy(std::vector<int>{1, 2}, std::vector<int>{3, 4}) == 0.0);
    CHECK_THROWS_AS(accuracy(std::vector<int>{1}, std::vector<int>{1, 2}), error);
    CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), error);
}

TEST_CASE("pearson") {
    SUBCASE("perfect positive and negative") {
        std::vector<double> x{1, 2, 3};
        std::vector<double> y2x{2, 4, 6};
        std::vector<double> ynegx{-1, -2, -3};
        CHECK(*pearson(x, y2x) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*pearson(x, ynegx) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("zero variance reports not-a-value") {
        std::vector<double> c{2, 2, 2};
        std::vector<double> y{1, 2, 3};
        CHECK_FALSE(pearson(c, y).has_value());
        CHECK_FALSE(pearson(y, c).has_value());
    }
    SUBCASE("affine invariance within 1e-12") {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x;
            for (int i = 0; i < 12; ++i) x.push_back(rng.uniform(-3, 3));
            const double a = 0.1 + rng.unit() * 4.0, b = rng.uniform(-5, 5);
            std::vector<double> y;
            for (double v : x) y.push_back(a * v + b);
            CHECK(std::fabs(*pearson(x, y) - 1.0) < 1e-12);
        }
    }
    SUBCASE("short inputs rejected") {
        CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), error);
    }
}

TEST_CASE("qwk hand cases") {
    SUBCASE("perfect non-constant agreement is 1") {
        std::vector<int> v{0, 1, 2, 1};
        CHECK(*qwk(v, v, 0, 2) == doctest::Approx(1.0));
    }
    SUBCASE("worked confusion-matrix example equals 2/3 exactly") {
        std::vector<int> gold{0, 1, 2};
        std::vector<int> pred{0, 1, 1};
        auto k = qwk(pred, gold, 0, 2);
        REQUIRE(k.has_value());
        CHECK(*k == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("constant equal vectors have no expected disagreement") {
        std::vector<int> c{1, 1, 1};
        CHECK_FALSE(qwk(c, c, 0, 2).has_value());
    }
    SUBCASE("out-of-range labels rejected") {
        std::vector<int> a{0, 3};
        std::vector<int> b{0, 1};
        CHECK_THROWS_AS(qwk(a, b, 0, 2), error);
    }
}

TEST_CASE("qwk matches the loop-based oracle on 1000 random pairs") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const int lo = static_cast<int>(rng.below(3));
        const int hi = lo + 1 + static_cast<int>(rng.below(8));
        const std::size_t n = 2 + rng.below(30);
        std::vector<int> pred, gold;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(lo + static_cast<int>(rng.below(hi - lo + 1)));
            gold.push_back(lo + static_cast<int>(rng.below(hi - lo + 1)));
        }
        bool defined = false;
        const double expect = oracles::qwk_loops(pred, gold, lo, hi, &defined);
        auto got = qwk(pred, gold, lo, hi);
        CHECK(got.has_value() == defined);
        if (defined) CHECK(std::fabs(*got - expect) < 1e-12);
    }
}

TEST_CASE("qwk is invariant under a shared affine relabeling") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng.below(20);
        std::vector<int> pred, gold, pred2, gold2;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(static_cast<int>(rng.below(5)));
            gold.push_back(static_cast<int>(rng.below(5)));
            pred2.push_back(3 * pred.back() + 7);
            gold2.push_back(3 * gold.back() + 7);
        }
        auto a = qwk(pred, gold, 0, 4);
        auto b = qwk(pred2, gold2, 7, 19);
        CHECK(a.has_value() == b.has_value());
        if (a) CHECK(std::fabs(*a - *b) < 1e-12);
    }
}

TEST_CASE("mse") {
    CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
    CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == doctest::Approx(1.0));
    CHECK(mse(std::vector<double>{1}, std::vector<double>{0.5}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(mse(std::vector<double>{1}, std::vector<double>{}), error);
}

TEST_CASE("robustness delta") {
    SUBCASE("identical grades give exactly zero") {
        std::vector<GradePair> pairs{{3, 3}, {7, 7}};
        CHECK(robustness_delta(pairs) == 0.0);
    }
    SUBCASE("worked fixture equals one half") {
        std::vector<GradePair> pairs{{1, 2}, {2, 2}};
        CHECK(robustness_delta(pairs) == doctest::Approx(0.5));
    }
    SUBCASE("nonnegative, zero only for equal pairs") {
        Rng rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<GradePair> pairs;
            bool all_equal = true;
            for (int i = 0; i < 6; ++i) {
                const double a = static_cast<double>(rng.below(10));
                const double b = static_cast<double>(rng.below(10));
                all_equal = all_equal && a == b;
                pairs.push_back({a, b});
            }
            const double d = robustness_delta(pairs);
            CHECK(d >= 0.0);
            CHECK((d == 0.0) == all_equal);
        }
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(robustness_delta(std::vector<GradePair>{}), error);
    }
}

TEST_CASE("bucket averages") {
    SUBCASE("100 grades in buckets of 50 give two rows") {
        std::vector<double> grades(100, 1.0);
        for (std::size_t i = 50; i < 100; ++i) grades[i] = 3.0;
        auto out = bucket_average(grades, 50);
        REQUIRE(out.size() == 2);
        CHECK(out[0] == doctest::Approx(1.0));
        CHECK(out[1] == doctest::Approx(3.0));
    }
    SUBCASE("bucket of one is the identity") {
        std::vector<double> grades{1, 2, 3};
        CHECK(bucket_average(grades, 1) == grades);
    }
    SUBCASE("final partial bucket averages over its own size") {
        std::vector<double> grades{2, 4, 6, 8, 10};
        auto out = bucket_average(grades, 2);
        REQUIRE(out.size() == 3);
        CHECK(out[2] == doctest::Approx(10.0));
    }
    SUBCASE("ceil(N/bucket) rows") {
        std::vector<double> grades(123, 1.0);
        CHECK(bucket_average(grades, 50).size() == 3);
    }
}

TEST_CASE("report serialization") {
    MetricsReport r;
    r.n = 4;
    r.accuracy = 0.75;
    r.pcc = std::nullopt;
    r.qwk = 2.0 / 3.0;
    r.mse = 0.125;
    CHECK(r.to_text() == "n=4\naccuracy=0.750000\npcc=na\nqwk=0.666667\nmse=0.125000\n");
    CHECK(r.to_record() == "metrics 4 0.750000 na 0.666667 0.125000");
}
