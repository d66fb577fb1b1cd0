#pragma once

// The three-commodity Market model: participants, endowments, utilities,
// willingness to pay, frustration, scenario validation, and the
// solution/feasibility/equilibrium predicates.
//
// Commodities: Good (the scarce critical commodity), Right (a tradable
// entitlement; a holder may keep Good only up to its Rights), Money (unit
// price fixed at 1). Couple is a bundled Good+Right item used by the
// auction. Items are integers; prices and cash are exact rationals.

#include "cdsim/fairness.hpp"
#include "cdsim/rational.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cdsim::market {

enum class Commodity { Good, Right, Money, Couple };

// Utility of x items given by a finite non-increasing sequence of
// non-negative marginal values; zero marginal beyond the sequence.
// Monotone, concave, u(0) = 0, and subadditive as a consequence.
class PiecewiseConcaveUtility {
public:
    PiecewiseConcaveUtility() = default;
    explicit PiecewiseConcaveUtility(std::vector<Rational> marginals)
        : marginals_(std::move(marginals)) {}

    const std::vector<Rational>& marginals() const { return marginals_; }
    bool is_valid() const; // non-negative, non-increasing

    // v(k), the gain of the k-th item (1-based); zero beyond the sequence.
    Rational marginal(const BigInt& k) const;
    Rational value(const BigInt& x) const;

private:
    std::vector<Rational> marginals_;
};

struct LinearMoneyUtility {
    Rational slope{1}; // per item of Money; must be positive

    Rational value(const Rational& x) const { return slope * x; }
};

struct BuyerSpec {
    std::string id;
    BigInt money;  // m^b, items of Money endowed per Market
    BigInt rights; // r^b, items of Right assigned
    BigInt demand; // d_b, claim used when Rights are re-issued
    PiecewiseConcaveUtility good_utility;
    LinearMoneyUtility money_utility;

    bool is_degenerate() const { return money == 0 && rights == 0 && demand == 0; }
};

struct SellerSpec {
    std::string id;
    BigInt good; // items of Good brought to the Market
};

enum class Mechanism { Couple, Seller };

struct Scenario {
    std::vector<BuyerSpec> buyers;
    std::vector<SellerSpec> sellers;
    Rational epsilon;
    int markets = 1;
    fairness::DivisibleRule rights_rule = fairness::DivisibleRule::ContestedGarment;
    std::vector<std::size_t> priority; // surplus rounding order; empty = buyer order
    std::uint64_t rng_seed = 0;

    BigInt total_money() const;
    BigInt total_rights() const;
    BigInt total_good() const;
    fairness::PriorityOrder priority_order() const;
};

// w_b(x): the money amount whose utility equals that of x items of Good.
// Money utility is linear, so this is u_b(G,x) / slope, exactly.
Rational willingness_to_pay(const BuyerSpec& b, const BigInt& x);

// max(0, rights - purchased) / rights. Nullopt marks the no-rights case
// (rights == 0), which is distinct from zero frustration.
std::optional<Rational> frustration(const BigInt& rights_assigned, const BigInt& good_purchased);
std::optional<Rational> frustration(const Rational& rights_assigned,
                                    const Rational& good_purchased);

struct Violation {
    std::string where;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string str() const;
};

// Checks, per buyer b with endowments m^b (Money) and r^b (Rights):
//   (A1) m^b >= 4 r^b
//   (A2) u_b(G,x) > 2 u_b(M,x) for 1 <= x <= r^b
//   (A3) u_b(M,m^b) > u_b(M,m^b-x) + u_b(G,x) for m^b/2 <= x <= m^b
// plus the epsilon bounds 1 > eps > 2/m^b, rights total == good total, and
// the utility-shape invariants. Returns the complete violation list.
ValidationReport validate_scenario(const Scenario& s);

// Terminal holdings of one participant. Couples count as one Good and one
// Right. residual_cash is bookkeeping below the Money item granularity.
struct Basket {
    BigInt couples{0};
    BigInt goods{0};
    BigInt rights{0};
    BigInt money{0};
    Rational residual_cash{0};

    Rational price(const struct PriceVector& prices) const;
};

struct PriceVector {
    Rational good{1};
    Rational right{1};
    Rational couple{2};
    // Money is always 1.

    Rational money() const { return Rational(1); }
};

// Baskets indexed as buyers first (scenario order), then sellers.
struct Solution {
    PriceVector prices;
    std::vector<Basket> baskets;
};

Rational endowment_price(const Scenario& s, std::size_t participant, const PriceVector& prices);

struct FeasibilityResult {
    bool feasible = false;
    std::vector<std::string> diagnostics; // one entry per violated basket / structural problem
};

// A basket is feasible when (1) its price does not exceed the price of the
// participant's initial endowment and (2) it holds no more Good than Right.
// Baskets must jointly fit inside the union of initial endowments.
FeasibilityResult is_feasible(const Solution& sol, const Scenario& s);

struct OracleLimits {
    BigInt max_items{64};     // cap on per-commodity counts the search may touch
    BigInt max_money{100000}; // cap on Money items
};

struct OracleResult {
    bool applicable = false;
    Rational best_utility{0};
    Basket best_basket;
};

// Exhaustive search for the best feasible basket of one participant at the
// given prices, over integer Couple/Good/Right/Money counts bounded by the
// scenario totals. Desk-scale verification oracle, exponential in spirit;
// refuses instances beyond `limits`.
OracleResult optimal_feasible_basket(const Scenario& s, std::size_t participant,
                                     const PriceVector& prices, const OracleLimits& limits = {});

Rational basket_utility(const Scenario& s, std::size_t participant, const Basket& basket);

enum class EquilibriumStatus { Equilibrium, NotEquilibrium, OracleInapplicable };

struct EquilibriumResult {
    EquilibriumStatus status;
    std::string detail;
};

// Equilibrium: every basket is feasible, priced exactly at its endowment,
// and utility-maximal among feasible baskets (by the exhaustive oracle).
EquilibriumResult is_equilibrium(const Solution& sol, const Scenario& s,
                                 const OracleLimits& limits = {});

} // namespace cdsim::market
