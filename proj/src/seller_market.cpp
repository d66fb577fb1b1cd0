#include "cdsim/seller_market.hpp"

#include "cdsim/error.hpp"

#include <algorithm>
#include <utility>

namespace cdsim::seller {

market::ValidationReport validate_config(const EpisodeConfig& cfg) {
    market::ValidationReport report;
    auto flag = [&](std::string where, std::string message) {
        report.violations.push_back({std::move(where), std::move(message)});
    };
    if (cfg.markets < 1) flag("config", "market count must be at least 1");
    if (cfg.buyers.empty()) flag("config", "no buyers");
    if (cfg.sellers.empty()) flag("config", "no sellers");
    if (cfg.supply_base.is_negative()) flag("config", "negative supply base");
    if (cfg.supply_variance.is_negative()) flag("config", "negative supply variance");
    if (cfg.strategy != "truthful" && cfg.strategy != "hillclimb")
        flag("config", "unknown strategy: " + cfg.strategy);
    for (const auto& b : cfg.buyers) {
        if (!b.demand.is_positive()) flag("buyer " + b.id, "demand must be positive");
        if (b.income.is_negative()) flag("buyer " + b.id, "negative income");
    }
    return report;
}

fairness::Allocation issue_rights(const std::vector<SellerOffer>& offers,
                                  const std::vector<Rational>& demands) {
    Rational supply(0);
    for (const auto& o : offers) supply += o.quantity;
    fairness::ClaimsProblem claims;
    claims.demands = demands;
    Rational total = claims.total_demand();
    if (supply.is_positive() && total.is_zero())
        throw Error(ErrorKind::InvalidArgument, "Rights issuance with all-zero demands");
    // Offers beyond the total demand cannot be claimed; Rights cover the
    // contested part only.
    claims.supply = std::min(supply, total);
    return fairness::contested_garment_distribution(claims);
}

Rational seller_utility(const EconConstants& c, const Rational& delta_money,
                        const Rational& goods_end, int t, int total_markets) {
    Rational u = delta_money + c.store * goods_end;
    if (t == total_markets) u += c.end_supply * goods_end;
    return u;
}

Rational buyer_utility(const EconConstants& c, const Rational& goods_end, const Rational& demand,
                       const Rational& money_end, int t, int total_markets) {
    if (!demand.is_positive())
        throw Error(ErrorKind::InvalidArgument, "buyer utility with non-positive demand");
    Rational ratio = goods_end / demand;
    Rational in_stock = std::min(Rational(1), ratio);
    Rational missing = std::max(Rational(0), Rational(1) - ratio);
    Rational u = c.in_stock * in_stock + c.missing * missing;
    if (t == total_markets) u += c.money * money_end;
    return u;
}

Rational rational_sqrt(const Rational& value) {
    if (value.is_negative()) throw Error(ErrorKind::InvalidArgument, "sqrt of a negative value");
    if (value.is_zero()) return Rational(0);
    // floor(sqrt(v) * 10^12) / 10^12 via integer Newton iteration.
    BigInt scale = 1;
    for (int i = 0; i < 24; ++i) scale *= 10;
    BigInt n = value.numerator() * scale / value.denominator();
    BigInt x = n, y = (x + 1) / 2;
    while (y < x) {
        x = y;
        y = (x + n / x) / 2;
    }
    BigInt denom = 1;
    for (int i = 0; i < 12; ++i) denom *= 10;
    return Rational(x, denom);
}

namespace {

struct OfferEntry {
    market::Commodity commodity;
    std::size_t participant; // seller index or buyer index, per commodity
    Rational remaining;
    Rational price;
};

} // namespace

std::vector<TradeRecord> clear_market(const std::vector<SellerOffer>& offers,
                                      const std::vector<RightOffer>& right_offers,
                                      const std::vector<BuyerOrder>& orders,
                                      const EpisodeConfig& cfg, Holdings& holdings,
                                      SplitMix64& rng, int market_index) {
    std::vector<OfferEntry> book;
    for (const auto& o : offers)
        if (o.quantity.is_positive())
            book.push_back({market::Commodity::Good, o.seller, o.quantity, o.price});
    for (const auto& o : right_offers)
        if (o.quantity.is_positive())
            book.push_back({market::Commodity::Right, o.buyer, o.quantity, o.price});

    // Cheapest offers first; ties are ordered by the rng.
    std::stable_sort(book.begin(), book.end(),
                     [](const OfferEntry& a, const OfferEntry& b) { return a.price < b.price; });
    for (std::size_t lo = 0; lo < book.size();) {
        std::size_t hi = lo + 1;
        while (hi < book.size() && book[hi].price == book[lo].price) ++hi;
        for (std::size_t i = hi - 1; i > lo; --i) {
            std::size_t j = lo + static_cast<std::size_t>(rng.below(i - lo + 1));
            std::swap(book[i], book[j]);
        }
        lo = hi;
    }

    struct OrderSide {
        Rational good_remaining, good_cap, right_remaining, right_cap;
    };
    std::vector<OrderSide> side(cfg.buyers.size());
    for (const auto& o : orders) {
        side[o.buyer].good_remaining += o.good_volume;
        side[o.buyer].good_cap = o.good_cap;
        side[o.buyer].right_remaining += o.right_volume;
        side[o.buyer].right_cap = o.right_cap;
    }

    std::vector<TradeRecord> trades;
    int step = 0;
    for (auto& entry : book) {
        bool is_good = entry.commodity == market::Commodity::Good;
        while (entry.remaining.is_positive()) {
            // A compatible order has volume left, accepts the price, can pay,
            // and respects the pairing rule; self-trades are excluded.
            std::vector<std::pair<std::size_t, Rational>> fillable;
            for (std::size_t b = 0; b < cfg.buyers.size(); ++b) {
                if (!is_good && b == entry.participant) continue;
                const OrderSide& s = side[b];
                Rational volume = is_good ? s.good_remaining : s.right_remaining;
                const Rational& cap = is_good ? s.good_cap : s.right_cap;
                if (!volume.is_positive() || cap < entry.price) continue;
                Rational fill = std::min(entry.remaining, volume);
                if (is_good) {
                    // Good purchases pair against Rights held and not yet
                    // backing earlier purchases in this Market.
                    Rational headroom =
                        holdings.buyer_rights[b] - holdings.buyer_goods_bought[b];
                    fill = std::min(fill, headroom);
                } else {
                    // The seller-buyer can part only with unpaired Rights.
                    Rational loose = holdings.buyer_rights[entry.participant] -
                                     holdings.buyer_goods_bought[entry.participant];
                    fill = std::min(fill, loose);
                }
                if (entry.price.is_positive())
                    fill = std::min(fill, holdings.buyer_money[b] / entry.price);
                if (fill.is_positive()) fillable.emplace_back(b, fill);
            }
            if (fillable.empty()) break;
            const auto& [b, fill] =
                fillable[static_cast<std::size_t>(rng.below(fillable.size()))];

            Rational payment = fill * entry.price;
            holdings.buyer_money[b] -= payment;
            TradeRecord trade;
            trade.market = market_index;
            trade.step = ++step;
            trade.commodity = entry.commodity;
            trade.quantity = fill;
            trade.price = entry.price;
            trade.to = cfg.buyers[b].id;
            if (is_good) {
                holdings.buyer_goods[b] += fill;
                holdings.buyer_goods_bought[b] += fill;
                holdings.seller_stock[entry.participant] -= fill;
                holdings.seller_revenue[entry.participant] += payment;
                side[b].good_remaining -= fill;
                trade.from = cfg.sellers[entry.participant].id;
            } else {
                holdings.buyer_rights[b] += fill;
                holdings.buyer_rights_bought[b] += fill;
                holdings.buyer_rights[entry.participant] -= fill;
                holdings.buyer_rights_sold[entry.participant] += fill;
                holdings.buyer_money[entry.participant] += payment;
                side[b].right_remaining -= fill;
                trade.from = cfg.buyers[entry.participant].id;
            }
            entry.remaining -= fill;
            trades.push_back(std::move(trade));
        }
    }
    return trades;
}

namespace {

class TruthfulSeller final : public SellerStrategy {
public:
    explicit TruthfulSeller(Rational ask) : ask_(std::move(ask)) {}

    SellerOffer offer(const SellerView& view) override {
        return {view.index, view.stock, ask_};
    }

private:
    Rational ask_;
};

class TruthfulBuyer final : public BuyerStrategy {
public:
    TruthfulBuyer(Rational good_cap, Rational right_ask, Rational right_cap)
        : good_cap_(std::move(good_cap)), right_ask_(std::move(right_ask)),
          right_cap_(std::move(right_cap)) {}

    Rational declare_demand(const BuyerView& view) override { return view.demand; }

    RightOffer right_offer(const BuyerView& view) override {
        // Sell the Rights this buyer cannot afford to exercise.
        Rational target = desired_goods(view);
        Rational spare = std::max(Rational(0), view.rights - target);
        return {view.index, spare, right_ask_};
    }

    BuyerOrder order(const BuyerView& view, const std::vector<SellerOffer>&,
                     const std::vector<RightOffer>&) override {
        Rational target = desired_goods(view);
        Rational missing_rights = std::max(Rational(0), target - view.rights);
        return {view.index, target, good_cap_, missing_rights, right_cap_};
    }

protected:
    Rational desired_goods(const BuyerView& view) const {
        Rational affordable = good_cap_.is_positive() ? view.money / good_cap_ : Rational(0);
        Rational want = view.demand - view.goods; // keep a steady stock; surplus carries over
        if (want.is_negative()) want = Rational(0);
        return std::min(want, affordable);
    }

    Rational good_cap_;
    Rational right_ask_;
    Rational right_cap_;
};

// Keeps the price move that improved last episode's utility, reverses
// otherwise. Prices never drop below the floor.
class HillClimbSeller final : public SellerStrategy {
public:
    HillClimbSeller(Rational ask, Rational step) : ask_(std::move(ask)), step_(std::move(step)) {}

    SellerOffer offer(const SellerView& view) override { return {view.index, view.stock, ask_}; }

    void episode_end(const Rational& total_utility) override {
        if (has_previous_ && total_utility < previous_utility_) direction_ = -direction_;
        previous_utility_ = total_utility;
        has_previous_ = true;
        ask_ += Rational(direction_) * step_;
        if (ask_ < floor_) ask_ = floor_;
    }

private:
    Rational ask_;
    Rational step_;
    Rational floor_{1, 4};
    Rational previous_utility_{0};
    int direction_ = 1;
    bool has_previous_ = false;
};

class HillClimbBuyer final : public BuyerStrategy {
public:
    HillClimbBuyer(Rational good_cap, Rational right_ask, Rational right_cap, Rational step)
        : inner_(good_cap, right_ask, right_cap), good_cap_(std::move(good_cap)),
          right_ask_(std::move(right_ask)), right_cap_(std::move(right_cap)),
          step_(std::move(step)) {}

    Rational declare_demand(const BuyerView& view) override { return view.demand; }

    RightOffer right_offer(const BuyerView& view) override { return inner_.right_offer(view); }

    BuyerOrder order(const BuyerView& view, const std::vector<SellerOffer>& offers,
                     const std::vector<RightOffer>& right_offers) override {
        return inner_.order(view, offers, right_offers);
    }

    void episode_end(const Rational& total_utility) override {
        if (has_previous_ && total_utility < previous_utility_) direction_ = -direction_;
        previous_utility_ = total_utility;
        has_previous_ = true;
        good_cap_ += Rational(direction_) * step_;
        if (good_cap_ < floor_) good_cap_ = floor_;
        inner_ = TruthfulBuyer(good_cap_, right_ask_, right_cap_);
    }

private:
    TruthfulBuyer inner_;
    Rational good_cap_;
    Rational right_ask_;
    Rational right_cap_;
    Rational step_;
    Rational floor_{1, 4};
    Rational previous_utility_{0};
    int direction_ = 1;
    bool has_previous_ = false;
};

} // namespace

StrategySet make_strategies(const EpisodeConfig& cfg) {
    StrategySet set;
    for (std::size_t i = 0; i < cfg.sellers.size(); ++i) {
        if (cfg.strategy == "hillclimb")
            set.sellers.push_back(
                std::make_unique<HillClimbSeller>(cfg.params.seller_ask, cfg.params.hill_step));
        else
            set.sellers.push_back(std::make_unique<TruthfulSeller>(cfg.params.seller_ask));
    }
    for (std::size_t i = 0; i < cfg.buyers.size(); ++i) {
        if (cfg.strategy == "hillclimb")
            set.buyers.push_back(
                std::make_unique<HillClimbBuyer>(cfg.params.buyer_good_cap, cfg.params.right_ask,
                                                 cfg.params.right_cap, cfg.params.hill_step));
        else
            set.buyers.push_back(std::make_unique<TruthfulBuyer>(
                cfg.params.buyer_good_cap, cfg.params.right_ask, cfg.params.right_cap));
    }
    return set;
}

SellerEpisodeResult run_seller_episode(const EpisodeConfig& cfg, StrategySet& strategies) {
    auto report = validate_config(cfg);
    if (!report.ok())
        throw Error(ErrorKind::Validation, "episode config rejected:\n" + report.str());
    if (strategies.sellers.size() != cfg.sellers.size() ||
        strategies.buyers.size() != cfg.buyers.size())
        throw Error(ErrorKind::InvalidArgument, "one strategy per participant expected");

    const std::size_t nb = cfg.buyers.size(), ns = cfg.sellers.size();
    SplitMix64 rng(cfg.rng_seed);
    Rational sigma = rational_sqrt(cfg.supply_variance);

    Holdings h;
    h.buyer_money.assign(nb, Rational(0));
    h.buyer_goods.assign(nb, Rational(0));
    h.buyer_rights.assign(nb, Rational(0));
    h.seller_stock.assign(ns, Rational(0));

    SellerEpisodeResult result;
    result.buyer_total_utility.assign(nb, Rational(0));
    result.seller_total_utility.assign(ns, Rational(0));

    for (int t = 1; t <= cfg.markets; ++t) {
        SellerMarketRecord rec;
        rec.index = t;
        auto clamp_note = [&](std::string note) { rec.clamp_log.push_back(std::move(note)); };

        // (1) income and supply injection. One noise draw per seller, in
        // seller order; negative supply is truncated to zero.
        for (std::size_t b = 0; b < nb; ++b) h.buyer_money[b] += cfg.buyers[b].income;
        rec.supply_injected.resize(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            Rational supply = cfg.supply_base + sigma * rng.standard_normal();
            if (supply.is_negative()) supply = Rational(0);
            rec.supply_injected[s] = supply;
            h.seller_stock[s] += supply;
        }
        h.buyer_goods_bought.assign(nb, Rational(0));
        h.buyer_rights_bought.assign(nb, Rational(0));
        h.buyer_rights_sold.assign(nb, Rational(0));
        h.seller_revenue.assign(ns, Rational(0));

        // (2) seller offers, clamped to stock.
        for (std::size_t s = 0; s < ns; ++s) {
            SellerView view{s, h.seller_stock[s], Rational(0), t, &cfg};
            SellerOffer offer = strategies.sellers[s]->offer(view);
            offer.seller = s;
            if (offer.quantity.is_negative()) {
                clamp_note("seller " + cfg.sellers[s].id + ": negative offer clamped to 0");
                offer.quantity = Rational(0);
            }
            if (offer.quantity > h.seller_stock[s]) {
                clamp_note("seller " + cfg.sellers[s].id + ": offer clamped to stock");
                offer.quantity = h.seller_stock[s];
            }
            if (!offer.price.is_positive() && offer.quantity.is_positive()) {
                clamp_note("seller " + cfg.sellers[s].id + ": non-positive price, offer dropped");
                offer.quantity = Rational(0);
            }
            rec.offers.push_back(offer);
        }

        // (3) demand declarations.
        rec.declared_demands.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            BuyerView view{b, h.buyer_money[b], h.buyer_goods[b], Rational(0),
                           cfg.buyers[b].demand, t, &cfg};
            Rational declared = strategies.buyers[b]->declare_demand(view);
            if (!declared.is_positive()) {
                clamp_note("buyer " + cfg.buyers[b].id +
                           ": non-positive declared demand replaced by the configured demand");
                declared = cfg.buyers[b].demand;
            }
            rec.declared_demands[b] = declared;
        }

        // (4) Rights issuance over the declared demands.
        fairness::Allocation rights = issue_rights(rec.offers, rec.declared_demands);
        rec.issued_rights = rights.shares;
        for (std::size_t b = 0; b < nb; ++b) h.buyer_rights[b] = rights.shares[b];

        // (5) Right offers, clamped to the issued amount.
        for (std::size_t b = 0; b < nb; ++b) {
            BuyerView view{b, h.buyer_money[b], h.buyer_goods[b], h.buyer_rights[b],
                           cfg.buyers[b].demand, t, &cfg};
            RightOffer offer = strategies.buyers[b]->right_offer(view);
            offer.buyer = b;
            if (offer.quantity.is_negative()) {
                clamp_note("buyer " + cfg.buyers[b].id + ": negative Right offer clamped to 0");
                offer.quantity = Rational(0);
            }
            if (offer.quantity > h.buyer_rights[b]) {
                clamp_note("buyer " + cfg.buyers[b].id + ": Right offer clamped to issued Rights");
                offer.quantity = h.buyer_rights[b];
            }
            if (offer.price.is_negative()) {
                clamp_note("buyer " + cfg.buyers[b].id + ": negative Right price, offer dropped");
                offer.quantity = Rational(0);
            }
            rec.right_offers.push_back(offer);
        }

        // Orders, with declared quantities and prices visible.
        for (std::size_t b = 0; b < nb; ++b) {
            BuyerView view{b, h.buyer_money[b], h.buyer_goods[b], h.buyer_rights[b],
                           cfg.buyers[b].demand, t, &cfg};
            BuyerOrder order = strategies.buyers[b]->order(view, rec.offers, rec.right_offers);
            order.buyer = b;
            if (order.good_volume.is_negative()) order.good_volume = Rational(0);
            if (order.right_volume.is_negative()) order.right_volume = Rational(0);
            if (order.good_cap.is_negative()) order.good_cap = Rational(0);
            if (order.right_cap.is_negative()) order.right_cap = Rational(0);
            rec.orders.push_back(order);
        }

        rec.trades = clear_market(rec.offers, rec.right_offers, rec.orders, cfg, h, rng, t);

        rec.goods_purchased = h.buyer_goods_bought;
        rec.rights_bought = h.buyer_rights_bought;
        rec.rights_sold = h.buyer_rights_sold;
        rec.buyer_goods_end = h.buyer_goods;
        rec.buyer_money_end = h.buyer_money;
        rec.seller_stock_end = h.seller_stock;
        rec.seller_revenue = h.seller_revenue;

        rec.frustrations.resize(nb);
        rec.buyer_utilities.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            rec.frustrations[b] =
                market::frustration(rec.issued_rights[b], rec.goods_purchased[b]);
            rec.buyer_utilities[b] =
                buyer_utility(cfg.constants, h.buyer_goods[b], rec.declared_demands[b],
                              h.buyer_money[b], t, cfg.markets);
            result.buyer_total_utility[b] += rec.buyer_utilities[b];
        }
        rec.seller_utilities.resize(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            rec.seller_utilities[s] =
                seller_utility(cfg.constants, h.seller_revenue[s], h.seller_stock[s], t,
                               cfg.markets);
            result.seller_total_utility[s] += rec.seller_utilities[s];
        }

        // Consumption: at most the declared demand; the surplus carries over.
        // Unmatched Rights disappear with the Market.
        for (std::size_t b = 0; b < nb; ++b) {
            Rational consumed = std::min(rec.declared_demands[b], h.buyer_goods[b]);
            h.buyer_goods[b] -= consumed;
            h.buyer_rights[b] = Rational(0);
        }

        result.markets.push_back(std::move(rec));
    }

    for (std::size_t s = 0; s < ns; ++s)
        strategies.sellers[s]->episode_end(result.seller_total_utility[s]);
    for (std::size_t b = 0; b < nb; ++b)
        strategies.buyers[b]->episode_end(result.buyer_total_utility[b]);
    return result;
}

SellerEpisodeResult run_seller_episode(const EpisodeConfig& cfg) {
    StrategySet strategies = make_strategies(cfg);
    return run_seller_episode(cfg, strategies);
}

} // namespace cdsim::seller
