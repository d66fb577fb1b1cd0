#pragma once

// Auction-based implementation of the Couple mechanism. Items of Couple
// (one Good paired with one Right) are auctioned on a price ladder that
// rises by a factor (1+eps) per iteration; every acquisition pays the
// raised price (1+eps)*pi_C while the previous holder receives pi_C. The
// run produces an approximate equilibrium: relative to terminal prices,
// every participant's basket is worth at least (1-2*eps) of its optimal
// feasible basket.
//
// The engine is a strictly sequential state machine. Identical scenarios
// produce byte-identical traces.

#include "cdsim/market.hpp"
#include "cdsim/rational.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cdsim::auction {

struct TraceEvent {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;

    const std::string* find(const std::string& key) const;
    std::string line() const;
};

struct AuctionTrace {
    std::vector<TraceEvent> events;

    std::string serialize() const;
    static AuctionTrace parse(const std::string& text); // throws Error(Parse) with line info
};

// One item of Couple: the pairing of a Good item and a Right item, tagged
// with its current sale price. tag_seq orders items with equal tags so the
// outbid source selection is deterministic. earmark_content tracks how much
// earmarked money the current owner has sunk into the item; when the item
// is outbid away, the sale proceeds refill the owner's earmark up to that
// amount, so carried Right-sale funds survive being outbid instead of
// washing out into ordinary cash.
struct CoupleRecord {
    std::size_t id;
    std::size_t good_item;
    std::size_t right_item;
    std::size_t owner; // buyer index
    Rational tag;
    std::uint64_t tag_seq;
    Rational earmark_content{0};
};

struct AuctionState {
    const market::Scenario* scenario = nullptr;
    Rational pi_g, pi_r, pi_c; // pi_m is always 1; pi_c == pi_g + pi_r throughout

    // Participants are indexed buyers first, then sellers.
    std::vector<Rational> cash;    // spendable, counts toward Money utility
    std::vector<Rational> earmark; // buyers only: funds usable for Couples, never for Money items

    std::vector<CoupleRecord> couples;
    std::vector<std::size_t> good_owner;  // per Good item, seller index
    std::vector<std::size_t> right_owner; // per Right item, buyer index
    std::vector<bool> good_coupled;
    std::vector<bool> right_coupled;

    int iteration = 0;
    std::uint64_t next_tag_seq = 0;
    std::size_t next_couple_id = 0;

    Rational raised_price() const;
    BigInt owned_couples(std::size_t buyer) const;
    BigInt owned_raised(std::size_t buyer) const;
    bool couple_available_at_base() const; // a Couple tagged pi_c, or a composable pair
    BigInt uncoupled_goods() const;
    Rational total_cash() const;  // across participants, excluding earmarks
    // Value, at current prices, of initial-endowment items not yet drawn
    // into a Couple; stays within twice the Money endowment.
    Rational surplus_account(std::size_t participant) const;
};

struct BasketChoice {
    BigInt couples;
    Rational money; // cash value retained, counted continuously
};

// The buyer's optimal basket at Couple price `price`, given plain cash,
// earmarked funds and `holdings` Couples currently owned (valued at
// `price`). Maximizes u(C,x) + slope * (countable money) over integer x;
// earmarked funds pay for Couples first and never count as money utility.
// Ties break toward fewer Couples.
BasketChoice optimal_basket(const market::BuyerSpec& b, const Rational& price,
                            const Rational& plain_cash, const Rational& earmark,
                            const BigInt& holdings);

// One outbid: buyer `b` acquires up to `target` Couples at the raised price,
// sourcing from its own base-priced Couples first, then other holders
// (ascending owner, oldest tag first), then by composing uncoupled Good and
// Right (b's own Rights first). Returns the number bought. Appends one
// `buy` event per item to `trace`.
BigInt outbid(AuctionState& state, std::size_t b, const BigInt& target, AuctionTrace& trace);

struct AuctionOutcome {
    market::PriceVector terminal_prices;
    market::Solution solution; // buyers then sellers
    std::vector<BigInt> couples_held;                  // per buyer
    std::vector<std::optional<Rational>> frustrations; // per buyer, vs. assigned Rights
    std::vector<Rational> right_sale_proceeds;         // per buyer: net Right sales at terminal pi_R
    std::vector<Rational> earmark_left;                // per buyer
    int iterations = 0;
    std::vector<int> rounds_per_iteration;
    BigInt purchases{0};
    Rational system_residue{0};
    BigInt system_money_items{0};
    AuctionTrace trace;
};

// Runs the full auction. `earmarks` (one per buyer, optional) are funds
// carried in from Right sales in an earlier Market. The scenario must pass
// validate_scenario.
AuctionOutcome run_auction(const market::Scenario& s, const std::vector<Rational>& earmarks = {});

// Statistics the replay checker accumulates while verifying a trace.
struct ReplayStats {
    int iterations = 0;
    std::vector<int> rounds_per_iteration;
    BigInt purchases{0};
    bool all_coupled_after_first_iteration = false;
    // Max of total participant cash over all events after iteration 1 ended.
    Rational max_cash_after_first_iteration{0};
    bool saw_post_first_iteration_event = false;
    market::PriceVector terminal_prices;
};

struct ReplayResult {
    bool ok = false;
    std::string message; // first mismatch, empty when ok
    ReplayStats stats;
};

// Re-executes a serialized trace against the scenario embedded in its
// header, re-deriving every decision (optimal baskets, sourcing, payments,
// price raises) and checking each event against the recomputation. The
// terminal state must match the trace's terminal records exactly.
ReplayResult replay_trace(const AuctionTrace& trace);
ReplayResult replay_trace_text(const std::string& text);

} // namespace cdsim::auction
