#pragma once

// Fair-distribution rules for claims problems: a supply of one good that is
// smaller than the sum of the claims on it, to be divided ethically.
//
// Three divisible rules are provided (proportional, constrained-equal,
// contested-garment) plus an adaptation to indivisible items. All shares
// are exact rationals; the rules satisfy monotonicity, consistency and
// (contested-garment, proportional) self-duality, which the test suite
// checks as exact properties.

#include "cdsim/rational.hpp"

#include <cstddef>
#include <vector>

namespace cdsim::fairness {

// Buyers are addressed by their position in the demand sequence.
struct ClaimsProblem {
    Rational supply;
    std::vector<Rational> demands;

    Rational total_demand() const;
    // supply >= 0, demands >= 0, supply <= total demand.
    void check() const;
};

struct Allocation {
    std::vector<Rational> shares;

    Rational total() const;
};

// Permutation of buyer positions; earlier means served first when surplus
// units are handed out.
struct PriorityOrder {
    std::vector<std::size_t> order;

    static PriorityOrder identity(std::size_t n);
    bool is_permutation(std::size_t n) const;
};

// share(b) = supply * d_b / total demand.
// Degenerate input (all demands zero with positive supply) is an error.
Allocation proportional_distribution(const ClaimsProblem& p);

// Constrained equal distribution, by the recursive procedure: while some
// claimant demands less than an equal split of what remains, satisfy it in
// full and recurse on the rest; otherwise split equally.
Allocation constrained_equal_distribution(const ClaimsProblem& p);

// Same rule through its threshold characterization: share(b) = min(d_b, t)
// for the unique t with sum min(d_b, t) = supply. The two routes must agree
// exactly; the acceptance suite cross-checks them on random instances.
Allocation constrained_equal_distribution_threshold(const ClaimsProblem& p);

// Contested garment distribution: constrained equal distribution on
// half-claims while supply <= (total demand)/2, extended self-dually above
// (award = claim minus the contested-garment share of the loss).
Allocation contested_garment_distribution(const ClaimsProblem& p);

enum class DivisibleRule { Proportional, ConstrainedEqual, ContestedGarment };

Allocation distribute(DivisibleRule rule, const ClaimsProblem& p);

// Indivisible adaptation: round every share down, then hand the surplus
// units (target total minus sum of floors) one each to the first buyers in
// `order` whose share had a positive fractional part. Total is preserved;
// no share moves by 1 or more.
std::vector<BigInt> round_indivisible(const Allocation& fractional, const PriorityOrder& order);

// Hook for structuring buyers by social preference: parts are served in the
// given priority order, each part receiving what is left of the supply (up
// to its own total demand) and dividing it by `rule` internally.
Allocation distribute_by_parts(DivisibleRule rule, const ClaimsProblem& p,
                               const std::vector<std::vector<std::size_t>>& parts);

} // namespace cdsim::fairness
