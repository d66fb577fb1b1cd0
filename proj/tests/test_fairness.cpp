#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cdsim/error.hpp"
#include "cdsim/fairness.hpp"
#include "cdsim/rng.hpp"

#include <vector>

using namespace cdsim;
using namespace cdsim::fairness;

namespace {

ClaimsProblem problem(Rational supply, std::vector<Rational> demands) {
    ClaimsProblem p;
    p.supply = std::move(supply);
    p.demands = std::move(demands);
    return p;
}

Rational qr(long long n, long long d = 1) { return Rational(n, d); }

// Random crisis instance: supply uniform in [0, total demand].
ClaimsProblem random_problem(SplitMix64& rng, std::size_t max_claimants) {
    std::size_t n = 1 + static_cast<std::size_t>(rng.below(max_claimants));
    ClaimsProblem p;
    Rational total(0);
    for (std::size_t i = 0; i < n; ++i) {
        Rational d(static_cast<long long>(rng.below(120)), static_cast<long long>(rng.below(4)) + 1);
        p.demands.push_back(d);
        total += d;
    }
    // supply = total * k/64 for random k in [0,64]
    p.supply = total * Rational(static_cast<long long>(rng.below(65)), 64);
    return p;
}

void check_allocation_invariants(const ClaimsProblem& p, const Allocation& a) {
    REQUIRE(a.shares.size() == p.demands.size());
    Rational expected = std::min(p.supply, p.total_demand());
    CHECK(a.total() == expected);
    for (std::size_t i = 0; i < a.shares.size(); ++i) {
        CHECK(a.shares[i] >= Rational(0));
        CHECK(a.shares[i] <= p.demands[i]);
    }
}

} // namespace

TEST_CASE("proportional distribution") {
    CHECK(proportional_distribution(problem(qr(0), {qr(3), qr(5)})).shares ==
          std::vector<Rational>{qr(0), qr(0)});
    CHECK(proportional_distribution(problem(qr(8), {qr(3), qr(5)})).shares ==
          std::vector<Rational>{qr(3), qr(5)});
    CHECK(proportional_distribution(problem(qr(4), {qr(3), qr(5)})).shares ==
          std::vector<Rational>{qr(3, 2), qr(5, 2)});
    CHECK_THROWS_AS(proportional_distribution(problem(qr(1), {qr(0), qr(0)})), Error);
    CHECK_THROWS_AS(proportional_distribution(problem(qr(9), {qr(3), qr(5)})), Error);
}

TEST_CASE("constrained equal distribution, recursion") {
    CHECK(constrained_equal_distribution(problem(qr(100), {qr(30), qr(60), qr(70)})).shares ==
          std::vector<Rational>{qr(30), qr(35), qr(35)});
    CHECK(constrained_equal_distribution(problem(qr(0), {qr(1), qr(2), qr(3)})).shares ==
          std::vector<Rational>{qr(0), qr(0), qr(0)});
    CHECK(constrained_equal_distribution(problem(qr(6), {qr(1), qr(2), qr(3)})).shares ==
          std::vector<Rational>{qr(1), qr(2), qr(3)});
}

TEST_CASE("contested garment distribution") {
    CHECK(contested_garment_distribution(problem(qr(75), {qr(100), qr(50)})).shares ==
          std::vector<Rational>{qr(50), qr(25)});
    CHECK(contested_garment_distribution(problem(qr(100), {qr(100), qr(50)})).shares ==
          std::vector<Rational>{qr(75), qr(25)});
    CHECK(contested_garment_distribution(problem(qr(150), {qr(100), qr(50)})).shares ==
          std::vector<Rational>{qr(100), qr(50)});
}

TEST_CASE("rounding to indivisible units") {
    Allocation a;
    a.shares = {qr(3, 2), qr(5, 2)};
    PriorityOrder order = PriorityOrder::identity(2);
    std::vector<BigInt> rounded = round_indivisible(a, order);
    CHECK(rounded == std::vector<BigInt>{2, 2});

    a.shares = {qr(3), qr(5)};
    CHECK(round_indivisible(a, order) == std::vector<BigInt>{3, 5});

    a.shares = {qr(2, 5), qr(3, 10), qr(3, 10)};
    PriorityOrder reversed;
    reversed.order = {2, 1, 0};
    CHECK(round_indivisible(a, reversed) == std::vector<BigInt>{0, 0, 1});

    PriorityOrder bad;
    bad.order = {0, 0, 1};
    CHECK_THROWS_AS(round_indivisible(a, bad), Error);
}

TEST_CASE("rounding moves each share by less than one and keeps the floor total") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        ClaimsProblem p = random_problem(rng, 6);
        Allocation a = contested_garment_distribution(p);
        // Random priority order.
        PriorityOrder order = PriorityOrder::identity(p.demands.size());
        for (std::size_t i = order.order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(order.order[i - 1], order.order[j]);
        }
        std::vector<BigInt> rounded = round_indivisible(a, order);
        BigInt total = 0;
        for (std::size_t i = 0; i < rounded.size(); ++i) {
            Rational delta = Rational(rounded[i]) - a.shares[i];
            CHECK(delta.abs() < Rational(1));
            CHECK(Rational(rounded[i]) <= Rational(a.shares[i].ceil()));
            total += rounded[i];
        }
        CHECK(total == a.total().floor());
    }
}

TEST_CASE("all rules: efficiency and claims bounds on random instances") {
    SplitMix64 rng(13);
    for (int trial = 0; trial < 400; ++trial) {
        ClaimsProblem p = random_problem(rng, 6);
        if (p.total_demand().is_zero()) continue;
        for (DivisibleRule rule : {DivisibleRule::Proportional, DivisibleRule::ConstrainedEqual,
                                   DivisibleRule::ContestedGarment}) {
            if (rule == DivisibleRule::Proportional && p.supply.is_positive() &&
                p.total_demand().is_zero())
                continue;
            check_allocation_invariants(p, distribute(rule, p));
        }
    }
}

TEST_CASE("monotonicity in the supply") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        ClaimsProblem p = random_problem(rng, 5);
        if (p.total_demand().is_zero()) continue;
        ClaimsProblem smaller = p;
        smaller.supply = p.supply * Rational(static_cast<long long>(rng.below(64)), 64);
        for (DivisibleRule rule : {DivisibleRule::Proportional, DivisibleRule::ConstrainedEqual,
                                   DivisibleRule::ContestedGarment}) {
            Allocation lo = distribute(rule, smaller);
            Allocation hi = distribute(rule, p);
            for (std::size_t i = 0; i < lo.shares.size(); ++i)
                CHECK(lo.shares[i] <= hi.shares[i]);
        }
    }
}

TEST_CASE("consistency of contested garment and proportional") {
    SplitMix64 rng(19);
    for (int trial = 0; trial < 300; ++trial) {
        ClaimsProblem p = random_problem(rng, 6);
        if (p.demands.size() < 2 || p.total_demand().is_zero()) continue;
        std::size_t i = static_cast<std::size_t>(rng.below(p.demands.size()));
        std::size_t j = static_cast<std::size_t>(rng.below(p.demands.size()));
        if (i == j) continue;
        for (DivisibleRule rule : {DivisibleRule::Proportional, DivisibleRule::ContestedGarment}) {
            Allocation a = distribute(rule, p);
            ClaimsProblem pair;
            pair.supply = a.shares[i] + a.shares[j];
            pair.demands = {p.demands[i], p.demands[j]};
            if (pair.demands[0].is_zero() && pair.demands[1].is_zero()) continue;
            Allocation again = distribute(rule, pair);
            CHECK(again.shares[0] == a.shares[i]);
            CHECK(again.shares[1] == a.shares[j]);
        }
    }
}

TEST_CASE("self-duality of contested garment, exactly") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        ClaimsProblem p = random_problem(rng, 6);
        ClaimsProblem dual = p;
        dual.supply = p.total_demand() - p.supply;
        Allocation award = contested_garment_distribution(p);
        Allocation loss = contested_garment_distribution(dual);
        for (std::size_t i = 0; i < p.demands.size(); ++i)
            CHECK(award.shares[i] == p.demands[i] - loss.shares[i]);
    }
}

TEST_CASE("the two constrained-equal characterizations agree") {
    SplitMix64 rng(29);
    for (int trial = 0; trial < 500; ++trial) {
        ClaimsProblem p = random_problem(rng, 7);
        Allocation recursive = constrained_equal_distribution(p);
        Allocation threshold = constrained_equal_distribution_threshold(p);
        CHECK(recursive.shares == threshold.shares);
    }
}

TEST_CASE("structured parts are served in priority order") {
    ClaimsProblem p = problem(qr(10), {qr(8), qr(8), qr(8)});
    Allocation a = distribute_by_parts(DivisibleRule::ContestedGarment, p, {{1}, {0, 2}});
    CHECK(a.shares[1] == qr(8));           // first part fully served
    CHECK(a.shares[0] + a.shares[2] == qr(2));
    CHECK(a.shares[0] == a.shares[2]);
    CHECK_THROWS_AS(distribute_by_parts(DivisibleRule::ContestedGarment, p, {{0, 1}}), Error);
}
