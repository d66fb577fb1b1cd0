#pragma once

// Seller-driven double auction with two auctioned commodities (Good and
// Right). Each Market: income and supply injection, seller offers, buyer
// demand declarations, Right issuance by the contested-garment rule, Right
// offers, buyer orders, then matching: offers ascending by price, random
// pairing among compatible counterparties, trades at the offer price.
// Quantities here are divisible (exact rationals), unlike the integer-item
// Couple auction.
//
// Strategies are pluggable; two scripted baselines ship with the library
// (fixed-price truthful, and a hill-climb that adjusts its price between
// episodes). Runs are deterministic given the configuration seed.

#include "cdsim/market.hpp"
#include "cdsim/rational.hpp"
#include "cdsim/rng.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cdsim::seller {

struct EconConstants {
    Rational store{-1, 2};      // per unit of Good kept at a Market's end
    Rational end_supply{1, 10}; // per unit of Good left at the episode's end
    Rational in_stock{2};       // demand-satisfaction reward scale
    Rational missing{-1};       // demand-miss penalty scale
    Rational money{1, 10};      // per unit of Money at the episode's end
};

struct BuyerParams {
    std::string id;
    Rational income; // m_b, Money injected per Market
    Rational demand; // d_b
};

struct SellerParams {
    std::string id;
};

struct StrategyParams {
    Rational seller_ask{3};      // fixed ask price for Good
    Rational buyer_good_cap{4};  // buyer's price cap for Good
    Rational right_ask{1, 2};    // price asked when selling Rights
    Rational right_cap{1};       // buyer's price cap for Rights
    Rational hill_step{1, 4};    // per-episode price adjustment of the hill-climb
};

struct EpisodeConfig {
    int markets = 10;
    std::vector<BuyerParams> buyers;
    std::vector<SellerParams> sellers;
    Rational supply_base{1, 4};
    Rational supply_variance{1, 40}; // variance of the per-seller supply noise
    EconConstants constants;
    std::uint64_t rng_seed = 0;
    std::string strategy = "truthful"; // "truthful" | "hillclimb"
    StrategyParams params;
};

market::ValidationReport validate_config(const EpisodeConfig& cfg);

struct SellerOffer {
    std::size_t seller;
    Rational quantity;
    Rational price;
};

struct RightOffer {
    std::size_t buyer;
    Rational quantity;
    Rational price;
};

struct BuyerOrder {
    std::size_t buyer;
    Rational good_volume;
    Rational good_cap;
    Rational right_volume;
    Rational right_cap;
};

// Supply offered in this Market becomes Rights, distributed over the
// declared demands by the contested-garment rule. Degenerate input
// (positive supply, all demands zero) is an error.
fairness::Allocation issue_rights(const std::vector<SellerOffer>& offers,
                                  const std::vector<Rational>& demands);

struct TradeRecord {
    int market = 0;
    int step = 0; // global matching sequence within the Market
    market::Commodity commodity = market::Commodity::Good;
    Rational quantity;
    Rational price;
    std::string from;
    std::string to;
};

// Holdings mid-market, as the matching engine mutates them.
struct Holdings {
    std::vector<Rational> buyer_money;
    std::vector<Rational> buyer_goods;
    std::vector<Rational> buyer_rights;       // current Rights held (expire at Market end)
    std::vector<Rational> buyer_goods_bought; // within the Market, for the pairing rule
    std::vector<Rational> buyer_rights_bought;
    std::vector<Rational> buyer_rights_sold;
    std::vector<Rational> seller_stock;
    std::vector<Rational> seller_revenue; // within the Market
};

// Matches offers and orders: all offers ascending by price (equal prices
// shuffled by the rng), each offer filled against a random compatible order
// until none remains. Good fills are capped by the buyer's unpaired Rights;
// Right sales are capped by the seller-buyer's unpaired Rights. Trades
// execute at the offer price; partial fills are allowed.
std::vector<TradeRecord> clear_market(const std::vector<SellerOffer>& offers,
                                      const std::vector<RightOffer>& right_offers,
                                      const std::vector<BuyerOrder>& orders,
                                      const EpisodeConfig& cfg, Holdings& holdings,
                                      SplitMix64& rng, int market_index);

// u_s(t) = dM + c_store * G + D(t) * c_end_supply * G, with D(T)=1.
Rational seller_utility(const EconConstants& c, const Rational& delta_money,
                        const Rational& goods_end, int t, int total_markets);

// u_b(t) = c_in_stock * min(1, G/d) + c_missing * max(0, 1 - G/d)
//          + D(t) * c_money * M, with D(T)=1.
Rational buyer_utility(const EconConstants& c, const Rational& goods_end, const Rational& demand,
                       const Rational& money_end, int t, int total_markets);

struct SellerView {
    std::size_t index;
    Rational stock;
    Rational revenue_so_far;
    int market = 1;
    const EpisodeConfig* config = nullptr;
};

struct BuyerView {
    std::size_t index;
    Rational money;
    Rational goods;
    Rational rights; // issued this Market (zero before issuance)
    Rational demand; // configured demand
    int market = 1;
    const EpisodeConfig* config = nullptr;
};

class SellerStrategy {
public:
    virtual ~SellerStrategy() = default;
    virtual SellerOffer offer(const SellerView& view) = 0;
    virtual void episode_end(const Rational& total_utility) { (void)total_utility; }
};

class BuyerStrategy {
public:
    virtual ~BuyerStrategy() = default;
    virtual Rational declare_demand(const BuyerView& view) = 0;
    virtual RightOffer right_offer(const BuyerView& view) = 0;
    virtual BuyerOrder order(const BuyerView& view, const std::vector<SellerOffer>& offers,
                             const std::vector<RightOffer>& right_offers) = 0;
    virtual void episode_end(const Rational& total_utility) { (void)total_utility; }
};

struct StrategySet {
    std::vector<std::unique_ptr<SellerStrategy>> sellers;
    std::vector<std::unique_ptr<BuyerStrategy>> buyers;
};

// Builds the configured baseline ("truthful" or "hillclimb") for every
// participant.
StrategySet make_strategies(const EpisodeConfig& cfg);

struct SellerMarketRecord {
    int index = 1;
    std::vector<Rational> supply_injected; // per seller, after truncation at zero
    std::vector<SellerOffer> offers;       // post-clamp
    std::vector<Rational> declared_demands;
    std::vector<Rational> issued_rights;
    std::vector<RightOffer> right_offers;
    std::vector<BuyerOrder> orders;
    std::vector<TradeRecord> trades;
    std::vector<Rational> goods_purchased;  // per buyer, within the Market
    std::vector<Rational> rights_bought;    // per buyer
    std::vector<Rational> rights_sold;      // per buyer
    std::vector<Rational> buyer_goods_end;  // before consumption
    std::vector<Rational> buyer_money_end;
    std::vector<Rational> seller_stock_end;
    std::vector<Rational> seller_revenue;
    std::vector<Rational> buyer_utilities;
    std::vector<Rational> seller_utilities;
    std::vector<std::optional<Rational>> frustrations; // vs. issued Rights
    std::vector<std::string> clamp_log;
};

struct SellerEpisodeResult {
    std::vector<SellerMarketRecord> markets;
    std::vector<Rational> buyer_total_utility;
    std::vector<Rational> seller_total_utility;
};

SellerEpisodeResult run_seller_episode(const EpisodeConfig& cfg, StrategySet& strategies);
SellerEpisodeResult run_seller_episode(const EpisodeConfig& cfg); // configured baselines

// Floor of sqrt(value) scaled to 12 decimal digits; the documented rational
// stand-in for the irrational standard deviation of the supply noise.
Rational rational_sqrt(const Rational& value);

} // namespace cdsim::seller
