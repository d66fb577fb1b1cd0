#include "cdsim/market.hpp"

#include "cdsim/error.hpp"

#include <algorithm>
#include <sstream>

namespace cdsim::market {

bool PiecewiseConcaveUtility::is_valid() const {
    for (std::size_t i = 0; i < marginals_.size(); ++i) {
        if (marginals_[i].is_negative()) return false;
        if (i > 0 && marginals_[i] > marginals_[i - 1]) return false;
    }
    return true;
}

Rational PiecewiseConcaveUtility::marginal(const BigInt& k) const {
    if (k <= 0 || k > BigInt(marginals_.size())) return Rational(0);
    return marginals_[static_cast<std::size_t>(k) - 1];
}

Rational PiecewiseConcaveUtility::value(const BigInt& x) const {
    if (x <= 0) return Rational(0);
    Rational sum(0);
    BigInt upto = x < BigInt(marginals_.size()) ? x : BigInt(marginals_.size());
    for (BigInt k = 1; k <= upto; ++k) sum += marginals_[static_cast<std::size_t>(k) - 1];
    return sum;
}

BigInt Scenario::total_money() const {
    BigInt sum = 0;
    for (const auto& b : buyers) sum += b.money;
    return sum;
}

BigInt Scenario::total_rights() const {
    BigInt sum = 0;
    for (const auto& b : buyers) sum += b.rights;
    return sum;
}

BigInt Scenario::total_good() const {
    BigInt sum = 0;
    for (const auto& s : sellers) sum += s.good;
    return sum;
}

fairness::PriorityOrder Scenario::priority_order() const {
    if (priority.empty()) return fairness::PriorityOrder::identity(buyers.size());
    fairness::PriorityOrder p;
    p.order = priority;
    return p;
}

Rational willingness_to_pay(const BuyerSpec& b, const BigInt& x) {
    if (x < 0) throw Error(ErrorKind::InvalidArgument, "willingness_to_pay of negative quantity");
    return b.good_utility.value(x) / b.money_utility.slope;
}

std::optional<Rational> frustration(const BigInt& rights_assigned, const BigInt& good_purchased) {
    return frustration(Rational(rights_assigned), Rational(good_purchased));
}

std::optional<Rational> frustration(const Rational& rights_assigned,
                                    const Rational& good_purchased) {
    if (!rights_assigned.is_positive()) return std::nullopt;
    Rational unmet = rights_assigned - good_purchased;
    if (unmet.is_negative()) return Rational(0);
    return unmet / rights_assigned;
}

std::string ValidationReport::str() const {
    std::ostringstream out;
    for (const auto& v : violations) out << v.where << ": " << v.message << "\n";
    return out.str();
}

ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport report;
    auto flag = [&](std::string where, std::string message) {
        report.violations.push_back({std::move(where), std::move(message)});
    };

    if (s.buyers.empty()) flag("scenario", "no buyers");
    if (s.markets < 1) flag("scenario", "market count must be at least 1");
    if (!s.priority.empty()) {
        fairness::PriorityOrder p;
        p.order = s.priority;
        if (!p.is_permutation(s.buyers.size()))
            flag("scenario", "priority order is not a permutation of the buyers");
    }

    if (s.total_rights() != s.total_good())
        flag("scenario", "total Rights (" + s.total_rights().str() + ") != total Good (" +
                             s.total_good().str() + ")");

    if (!(s.epsilon < Rational(1)) || !s.epsilon.is_positive())
        flag("scenario", "epsilon must satisfy 0 < epsilon < 1, got " + s.epsilon.str());

    for (const auto& b : s.buyers) {
        const std::string where = "buyer " + b.id;
        if (b.money < 0) flag(where, "negative Money endowment");
        if (b.rights < 0) flag(where, "negative Rights endowment");
        if (b.demand < 0) flag(where, "negative demand");
        if (!b.good_utility.is_valid())
            flag(where, "Good marginals must be non-negative and non-increasing");
        if (!b.money_utility.slope.is_positive()) flag(where, "Money utility slope must be positive");
        if (b.is_degenerate()) continue; // inert participant, exempt from the assumptions
        if (b.money == 0) {
            flag(where, "zero Money endowment on a non-degenerate buyer");
            continue;
        }
        if (b.demand == 0) flag(where, "zero demand on a non-degenerate buyer");
        // (A1)
        if (b.money < 4 * b.rights)
            flag(where, "m^b >= 4 r^b violated: " + b.money.str() + " < 4*" + b.rights.str());
        // epsilon > 2/m^b
        if (s.epsilon * Rational(b.money) <= Rational(2))
            flag(where, "epsilon <= 2/m^b: " + s.epsilon.str() + " <= 2/" + b.money.str());
        // (A2): strict preference for the fair share of Good over Money.
        // Marginals saturate, so beyond their count the binding case is the
        // largest x; below it every x is checked.
        const Rational& slope = b.money_utility.slope;
        const BigInt len(b.good_utility.marginals().size());
        BigInt a2_hi = std::min(b.rights, len);
        bool a2_ok = true;
        std::string a2_at;
        for (BigInt x = 1; x <= a2_hi && a2_ok; ++x)
            if (!(b.good_utility.value(x) > Rational(2) * slope * Rational(x))) {
                a2_ok = false;
                a2_at = x.str();
            }
        if (a2_ok && b.rights > len &&
            !(b.good_utility.value(len) > Rational(2) * slope * Rational(b.rights))) {
            a2_ok = false;
            a2_at = b.rights.str();
        }
        if (!a2_ok) flag(where, "u(G," + a2_at + ") <= 2 u(M," + a2_at + ")");
        // (A3): beyond half the Money endowment, Good no longer compensates.
        // u(M,m) > u(M,m-x) + u(G,x) reduces to slope*x > u(G,x) for every
        // m/2 <= x <= m. Checked per item while marginals last, then once at
        // the saturation point (u constant, slope*x increasing beyond it).
        BigInt lo = (Rational(b.money) / Rational(2)).ceil();
        bool a3_ok = true;
        std::string a3_at;
        BigInt a3_hi = std::min(b.money, len);
        for (BigInt x = lo; x <= a3_hi && a3_ok; ++x)
            if (!(slope * Rational(x) > b.good_utility.value(x))) {
                a3_ok = false;
                a3_at = x.str();
            }
        if (a3_ok && b.money > len) {
            BigInt x = std::max(lo, BigInt(len + 1));
            if (x <= b.money && !(slope * Rational(x) > b.good_utility.value(x))) {
                a3_ok = false;
                a3_at = x.str();
            }
        }
        if (!a3_ok) flag(where, "u(M,m) <= u(M,m-x) + u(G,x) at x = " + a3_at);
    }

    for (const auto& sel : s.sellers) {
        if (sel.good < 0) flag("seller " + sel.id, "negative Good endowment");
    }
    return report;
}

Rational Basket::price(const PriceVector& prices) const {
    return Rational(couples) * prices.couple + Rational(goods) * prices.good +
           Rational(rights) * prices.right + Rational(money);
}

Rational endowment_price(const Scenario& s, std::size_t participant, const PriceVector& prices) {
    if (participant < s.buyers.size()) {
        const auto& b = s.buyers[participant];
        return Rational(b.money) + Rational(b.rights) * prices.right;
    }
    const auto& sel = s.sellers[participant - s.buyers.size()];
    return Rational(sel.good) * prices.good;
}

FeasibilityResult is_feasible(const Solution& sol, const Scenario& s) {
    FeasibilityResult result;
    const std::size_t n = s.buyers.size() + s.sellers.size();
    if (sol.baskets.size() != n) {
        result.diagnostics.push_back("expected one basket per participant");
        return result;
    }

    BigInt total_couples = 0, total_goods = 0, total_rights = 0, total_money = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        const Basket& basket = sol.baskets[i];
        std::string who = i < s.buyers.size() ? "buyer " + s.buyers[i].id
                                              : "seller " + s.sellers[i - s.buyers.size()].id;
        if (basket.couples < 0 || basket.goods < 0 || basket.rights < 0 || basket.money < 0 ||
            basket.residual_cash.is_negative()) {
            result.diagnostics.push_back(who + ": negative item count");
            ok = false;
            continue;
        }
        total_couples += basket.couples;
        total_goods += basket.goods;
        total_rights += basket.rights;
        total_money += basket.money;
        if (basket.goods > basket.rights) {
            result.diagnostics.push_back(who + ": more Good than Right");
            ok = false;
        }
        Rational bp = basket.price(sol.prices);
        Rational ep = endowment_price(s, i, sol.prices);
        if (bp > ep) {
            result.diagnostics.push_back(who + ": basket price " + bp.str() +
                                         " exceeds endowment price " + ep.str());
            ok = false;
        }
    }
    if (total_couples + total_goods > s.total_good())
        result.diagnostics.push_back("baskets reference more Good than was endowed"), ok = false;
    if (total_couples + total_rights > s.total_rights())
        result.diagnostics.push_back("baskets reference more Right than was endowed"), ok = false;
    if (total_money > s.total_money())
        result.diagnostics.push_back("baskets reference more Money than was endowed"), ok = false;
    result.feasible = ok;
    return result;
}

Rational basket_utility(const Scenario& s, std::size_t participant, const Basket& basket) {
    if (participant < s.buyers.size()) {
        const auto& b = s.buyers[participant];
        return b.good_utility.value(basket.couples + basket.goods) +
               b.money_utility.slope * Rational(basket.money);
    }
    // Sellers value Money only, at unit slope.
    return Rational(basket.money);
}

OracleResult optimal_feasible_basket(const Scenario& s, std::size_t participant,
                                     const PriceVector& prices, const OracleLimits& limits) {
    OracleResult result;
    BigInt couples_cap = std::min(s.total_good(), s.total_rights());
    BigInt singles_cap = s.total_good() + s.total_rights();
    if (couples_cap > limits.max_items || singles_cap > limits.max_items ||
        s.total_money() > limits.max_money)
        return result; // inapplicable

    if (prices.couple.is_negative() || prices.good.is_negative() || prices.right.is_negative())
        return result;

    result.applicable = true;
    Rational budget = endowment_price(s, participant, prices);
    const BigInt money_cap = s.total_money();

    Rational best(-1);
    Basket best_basket;
    // Rights beyond the Good count only cost budget, so nR = nG suffices,
    // except when Rights are free.
    for (BigInt nc = 0; nc <= couples_cap; ++nc) {
        Rational cost_c = Rational(nc) * prices.couple;
        if (cost_c > budget) break;
        for (BigInt ng = 0; nc + ng <= s.total_good(); ++ng) {
            BigInt nr = ng;
            if (nc + nr > s.total_rights()) break;
            Rational cost = cost_c + Rational(ng) * (prices.good + prices.right);
            if (cost > budget) break;
            BigInt nm = (budget - cost).floor();
            if (nm > money_cap) nm = money_cap;
            Basket basket;
            basket.couples = nc;
            basket.goods = ng;
            basket.rights = nr;
            basket.money = nm;
            Rational u = basket_utility(s, participant, basket);
            if (u > best) {
                best = u;
                best_basket = basket;
            }
        }
    }
    result.best_utility = best;
    result.best_basket = best_basket;
    return result;
}

EquilibriumResult is_equilibrium(const Solution& sol, const Scenario& s,
                                 const OracleLimits& limits) {
    FeasibilityResult feas = is_feasible(sol, s);
    if (!feas.feasible) {
        std::string detail = "not feasible";
        for (const auto& d : feas.diagnostics) detail += "; " + d;
        return {EquilibriumStatus::NotEquilibrium, detail};
    }
    for (std::size_t i = 0; i < sol.baskets.size(); ++i) {
        Rational bp = sol.baskets[i].price(sol.prices);
        Rational ep = endowment_price(s, i, sol.prices);
        if (bp != ep)
            return {EquilibriumStatus::NotEquilibrium,
                    "participant " + std::to_string(i) + " basket price " + bp.str() +
                        " != endowment price " + ep.str()};
        OracleResult oracle = optimal_feasible_basket(s, i, sol.prices, limits);
        if (!oracle.applicable)
            return {EquilibriumStatus::OracleInapplicable, "instance exceeds oracle limits"};
        Rational u = basket_utility(s, i, sol.baskets[i]);
        if (u < oracle.best_utility)
            return {EquilibriumStatus::NotEquilibrium,
                    "participant " + std::to_string(i) + " utility " + u.str() +
                        " below optimum " + oracle.best_utility.str()};
    }
    return {EquilibriumStatus::Equilibrium, ""};
}

} // namespace cdsim::market
