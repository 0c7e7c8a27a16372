#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "tokred/analysis.hpp"
#include "tokred/rng.hpp"

using namespace tokred;

namespace {

// quadratic pair-counting reference: ties count toward neither side,
// denominator stays binom(n, 2)
double kendall_tau_pairs(const std::vector<double>& a, const std::vector<double>& b) {
    const std::int64_t n = static_cast<std::int64_t>(a.size());
    std::int64_t concordant = 0, discordant = 0;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da * db > 0.0) ++concordant;
            else if (da * db < 0.0) ++discordant;
        }
    return static_cast<double>(concordant - discordant) / static_cast<double>(n * (n - 1) / 2);
}

// reference density: sum the m largest from scratch for each m
double density_brute(const std::vector<double>& scores, double mass) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double total = 0.0;
    for (double s : scores) total += s;
    const double target = mass * total * (1.0 - 1e-12);
    for (std::size_t m = 1; m <= sorted.size(); ++m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += sorted[i];
        if (acc >= target) return static_cast<double>(m) / static_cast<double>(sorted.size());
    }
    return 1.0;
}

}  // namespace

TEST_CASE("kendall tau basic values") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    SUBCASE("identical rankings") { CHECK(kendall_tau(a, a) == 1.0); }
    SUBCASE("reversed rankings") {
        const std::vector<double> rev{5, 4, 3, 2, 1};
        CHECK(kendall_tau(a, rev) == -1.0);
    }
    SUBCASE("one swapped pair") {
        const std::vector<double> x{1, 2, 3};
        const std::vector<double> y{1, 3, 2};
        CHECK(kendall_tau(x, y) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("length checks") {
        CHECK_THROWS_AS(kendall_tau(a, std::vector<double>{1, 2}), std::invalid_argument);
        CHECK_THROWS_AS(kendall_tau(std::vector<double>{1}, std::vector<double>{1}),
                        std::invalid_argument);
    }
}

TEST_CASE("kendall tau matches pair counting, ties included") {
    Rng rng(55);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 120);
        std::vector<double> a(n), b(n);
        // coarse integer grids force plenty of ties
        for (auto& v : a) v = static_cast<double>(rng.next_u64() % 7);
        for (auto& v : b) v = static_cast<double>(rng.next_u64() % 5);
        CHECK(kendall_tau(a, b) == kendall_tau_pairs(a, b));
    }
}

TEST_CASE("kendall tau is invariant under strictly increasing transforms") {
    Rng rng(56);
    std::vector<double> a(40), b(40);
    for (auto& v : a) v = rng.next_gaussian();
    for (auto& v : b) v = rng.next_gaussian();
    const double base = kendall_tau(a, b);
    std::vector<double> a2(40), b2(40);
    for (int i = 0; i < 40; ++i) {
        a2[i] = std::exp(a[i]);            // strictly increasing
        b2[i] = 3.0 * b[i] + 7.0;          // affine positive
    }
    CHECK(kendall_tau(a2, b2) == base);
}

TEST_CASE("density at mass") {
    SUBCASE("one-hot needs a single token") {
        std::vector<double> scores(10, 0.0);
        scores[3] = 5.0;
        CHECK(density_at_mass(scores, 0.8) == doctest::Approx(0.1));
    }
    SUBCASE("uniform needs eight of ten") {
        const std::vector<double> scores(10, 1.0);
        CHECK(density_at_mass(scores, 0.8) == doctest::Approx(0.8));
    }
    SUBCASE("hand-worked mixed vector") {
        const std::vector<double> scores{0.5, 0.3, 0.1, 0.05, 0.05};
        CHECK(density_at_mass(scores, 0.8) == doctest::Approx(0.4));
    }
    SUBCASE("matches the brute-force reference") {
        Rng rng(57);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 1 + static_cast<int>(rng.next_u64() % 500);
            std::vector<double> scores(n);
            for (auto& s : scores) s = rng.next_uniform();
            const double mass = rng.next_uniform(0.05, 1.0);
            CHECK(density_at_mass(scores, mass) == density_brute(scores, mass));
        }
    }
    SUBCASE("invariant under positive rescaling") {
        Rng rng(58);
        std::vector<double> scores(64);
        for (auto& s : scores) s = rng.next_uniform();
        std::vector<double> scaled = scores;
        for (auto& s : scaled) s *= 137.0;
        CHECK(density_at_mass(scores, 0.8) == density_at_mass(scaled, 0.8));
    }
    SUBCASE("all-zero scores are an error") {
        const std::vector<double> zeros(5, 0.0);
        CHECK_THROWS_AS(density_at_mass(zeros, 0.8), std::invalid_argument);
        CHECK_THROWS_AS(density_at_mass(std::vector<double>{1.0}, 0.0), std::invalid_argument);
    }
}

TEST_CASE("recency mass") {
    SUBCASE("uniform scores carry exactly the tail fraction") {
        const std::vector<double> scores(100, 0.5);
        CHECK(recency_mass(scores, 0.1) == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("geometric scores concentrate at the end") {
        const int n = 200;
        std::vector<double> scores(n);
        for (int i = 0; i < n; ++i) scores[i] = std::pow(0.5, n - i);
        CHECK(recency_mass(scores, 0.1) > 0.999);
    }
    SUBCASE("one-hot at the front carries nothing in the tail") {
        std::vector<double> scores(100, 0.0);
        scores[0] = 1.0;
        CHECK(recency_mass(scores, 0.1) == 0.0);
    }
}

TEST_CASE("stability report") {
    auto map_of = [](int layer, std::vector<double> scores) {
        ImportanceMap map;
        map.layer_index = layer;
        map.per_unit = MatD(1, scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) map.per_unit(0, i) = scores[i];
        map.scores = std::move(scores);
        return map;
    };

    SUBCASE("identical consecutive maps give tau one") {
        const auto report = stability_report({map_of(0, {3, 1, 2}), map_of(2, {3, 1, 2})});
        REQUIRE(report.taus.size() == 1);
        CHECK(report.taus[0] == 1.0);
        CHECK(report.tau_layer_pairs[0] == std::pair<int, int>{0, 2});
        CHECK(report.densities.size() == 2);
    }
    SUBCASE("a single map yields densities but no taus") {
        const auto report = stability_report({map_of(0, {3, 1, 2})});
        CHECK(report.taus.empty());
        CHECK(report.densities.size() == 1);
        for (double d : report.densities[0].unit_density) {
            CHECK(d > 0.0);
            CHECK(d <= 1.0);
        }
    }
    SUBCASE("mismatched token sets are rejected") {
        CHECK_THROWS_AS(stability_report({map_of(0, {1, 2}), map_of(1, {1, 2, 3})}),
                        std::invalid_argument);
    }
}
