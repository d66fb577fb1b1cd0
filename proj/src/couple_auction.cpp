#include "cdsim/couple_auction.hpp"

#include "cdsim/error.hpp"

#include <algorithm>
#include <cstddef>
#include <sstream>

namespace cdsim::auction {

const std::string* TraceEvent::find(const std::string& key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return &v;
    return nullptr;
}

std::string TraceEvent::line() const {
    std::string out = kind;
    for (const auto& [k, v] : fields) {
        out += ' ';
        out += k;
        out += '=';
        out += v;
    }
    return out;
}

std::string AuctionTrace::serialize() const {
    std::string out;
    for (const auto& ev : events) {
        out += ev.line();
        out += '\n';
    }
    return out;
}

AuctionTrace AuctionTrace::parse(const std::string& text) {
    AuctionTrace trace;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        TraceEvent ev;
        if (!(ls >> ev.kind))
            throw Error(ErrorKind::Parse, "trace line " + std::to_string(line_no) + ": empty event");
        std::string token;
        while (ls >> token) {
            auto eq = token.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::Parse, "trace line " + std::to_string(line_no) +
                                                  ": token without '=': " + token);
            ev.fields.emplace_back(token.substr(0, eq), token.substr(eq + 1));
        }
        trace.events.push_back(std::move(ev));
    }
    return trace;
}

Rational AuctionState::raised_price() const { return pi_c * (Rational(1) + scenario->epsilon); }

BigInt AuctionState::owned_couples(std::size_t buyer) const {
    BigInt n = 0;
    for (const auto& c : couples)
        if (c.owner == buyer) ++n;
    return n;
}

BigInt AuctionState::owned_raised(std::size_t buyer) const {
    Rational raised = raised_price();
    BigInt n = 0;
    for (const auto& c : couples)
        if (c.owner == buyer && c.tag == raised) ++n;
    return n;
}

BigInt AuctionState::uncoupled_goods() const {
    BigInt n = 0;
    for (bool coupled : good_coupled)
        if (!coupled) ++n;
    return n;
}

bool AuctionState::couple_available_at_base() const {
    for (const auto& c : couples)
        if (c.tag == pi_c) return true;
    bool have_good = false, have_right = false;
    for (bool coupled : good_coupled)
        if (!coupled) {
            have_good = true;
            break;
        }
    for (bool coupled : right_coupled)
        if (!coupled) {
            have_right = true;
            break;
        }
    return have_good && have_right;
}

Rational AuctionState::total_cash() const {
    Rational sum(0);
    for (const auto& c : cash) sum += c;
    return sum;
}

Rational AuctionState::surplus_account(std::size_t participant) const {
    Rational sum(0);
    const std::size_t nb = scenario->buyers.size();
    if (participant < nb) {
        for (std::size_t i = 0; i < right_owner.size(); ++i)
            if (right_owner[i] == participant && !right_coupled[i]) sum += pi_r;
    } else {
        std::size_t seller = participant - nb;
        for (std::size_t i = 0; i < good_owner.size(); ++i)
            if (good_owner[i] == seller && !good_coupled[i]) sum += pi_g;
    }
    return sum;
}

BasketChoice optimal_basket(const market::BuyerSpec& b, const Rational& price,
                            const Rational& plain_cash, const Rational& earmark,
                            const BigInt& holdings) {
    if (!price.is_positive())
        throw Error(ErrorKind::InvalidArgument, "optimal_basket needs a positive Couple price");
    Rational budget = plain_cash + earmark + price * Rational(holdings);
    BigInt cap = (budget / price).floor();
    const Rational& slope = b.money_utility.slope;

    BigInt x = 0;
    Rational plain_spent(0); // max(0, price*x - earmark)
    for (BigInt k = 1; k <= cap; ++k) {
        Rational gross = price * Rational(k);
        Rational plain_cum = gross > earmark ? gross - earmark : Rational(0);
        Rational step_cost = plain_cum - plain_spent;
        // Strict improvement required; a tie keeps the smaller basket.
        if (!(b.good_utility.marginal(k) > slope * step_cost)) break;
        x = k;
        plain_spent = plain_cum;
    }
    Rational countable = plain_cash + price * Rational(holdings) - plain_spent;
    return {x, countable};
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct TraceSink {
    virtual ~TraceSink() = default;
    virtual void emit(TraceEvent ev) = 0;
};

struct RecordingSink final : TraceSink {
    AuctionTrace trace;
    void emit(TraceEvent ev) override { trace.events.push_back(std::move(ev)); }
};

struct CheckingSink final : TraceSink {
    const AuctionTrace& expected;
    std::size_t pos = 0;

    explicit CheckingSink(const AuctionTrace& t) : expected(t) {}

    void emit(TraceEvent ev) override {
        if (pos >= expected.events.size())
            throw Error(ErrorKind::Runtime,
                        "trace ends early; replay produced: " + ev.line());
        const TraceEvent& want = expected.events[pos];
        if (ev.line() != want.line())
            throw Error(ErrorKind::Runtime, "trace mismatch at event " + std::to_string(pos + 1) +
                                                ": trace has '" + want.line() +
                                                "', replay produced '" + ev.line() + "'");
        ++pos;
    }
};

using Fields = std::vector<std::pair<std::string, std::string>>;

TraceEvent make_event(std::string kind, Fields fields) {
    return TraceEvent{std::move(kind), std::move(fields)};
}

struct Engine {
    const market::Scenario& sc;
    TraceSink& sink;
    AuctionState st;
    std::vector<int> rounds_per_iter;
    BigInt purchases_total{0};

    Engine(const market::Scenario& scenario, const std::vector<Rational>& earmarks,
           TraceSink& sink_)
        : sc(scenario), sink(sink_) {
        auto report = market::validate_scenario(sc);
        if (!report.ok())
            throw Error(ErrorKind::Validation, "scenario rejected:\n" + report.str());
        if (!earmarks.empty() && earmarks.size() != sc.buyers.size())
            throw Error(ErrorKind::InvalidArgument, "one earmark per buyer expected");
        // Good and Right items are materialized individually.
        if (sc.total_good() > 1000000)
            throw Error(ErrorKind::InvalidArgument,
                        "scenario exceeds the supported item count (10^6 Good items)");

        st.scenario = &sc;
        st.pi_g = Rational(1);
        st.pi_r = Rational(1);
        st.pi_c = Rational(2);
        const std::size_t nb = sc.buyers.size(), ns = sc.sellers.size();
        st.cash.assign(nb + ns, Rational(0));
        st.earmark.assign(nb, Rational(0));
        // The surplus money covering each initial endowment: one unit per
        // Right and per Good item, topped up at every price raise.
        for (std::size_t i = 0; i < nb; ++i) {
            st.cash[i] = Rational(sc.buyers[i].money) + Rational(sc.buyers[i].rights);
            if (!earmarks.empty()) st.earmark[i] = earmarks[i];
            if (st.earmark[i].is_negative())
                throw Error(ErrorKind::InvalidArgument, "negative earmark");
        }
        for (std::size_t j = 0; j < ns; ++j) st.cash[nb + j] = Rational(sc.sellers[j].good);
        for (std::size_t j = 0; j < ns; ++j)
            for (BigInt k = 0; k < sc.sellers[j].good; ++k) {
                st.good_owner.push_back(j);
                st.good_coupled.push_back(false);
            }
        for (std::size_t i = 0; i < nb; ++i)
            for (BigInt k = 0; k < sc.buyers[i].rights; ++k) {
                st.right_owner.push_back(i);
                st.right_coupled.push_back(false);
            }
    }

    std::string pid(std::size_t p) const {
        return p < sc.buyers.size() ? sc.buyers[p].id : sc.sellers[p - sc.buyers.size()].id;
    }

    void emit(std::string kind, Fields fields) { sink.emit(make_event(std::move(kind), std::move(fields))); }

    void emit_header() {
        emit("scenario", {{"buyers", std::to_string(sc.buyers.size())},
                          {"sellers", std::to_string(sc.sellers.size())},
                          {"epsilon", sc.epsilon.str()},
                          {"money", sc.total_money().str()},
                          {"rights", sc.total_rights().str()},
                          {"good", sc.total_good().str()}});
        for (const auto& b : sc.buyers) {
            std::string marginals;
            for (std::size_t i = 0; i < b.good_utility.marginals().size(); ++i) {
                if (i) marginals += ',';
                marginals += b.good_utility.marginals()[i].str();
            }
            emit("buyer", {{"id", b.id},
                           {"money", b.money.str()},
                           {"rights", b.rights.str()},
                           {"demand", b.demand.str()},
                           {"lambda", b.money_utility.slope.str()},
                           {"marginals", marginals}});
        }
        for (const auto& s : sc.sellers) emit("seller", {{"id", s.id}, {"good", s.good.str()}});
        emit("init", {{"pi_g", st.pi_g.str()}, {"pi_r", st.pi_r.str()}, {"pi_c", st.pi_c.str()}});
        for (std::size_t p = 0; p < st.cash.size(); ++p) {
            Rational e = p < st.earmark.size() ? st.earmark[p] : Rational(0);
            emit("cash-init",
                 {{"participant", pid(p)}, {"cash", st.cash[p].str()}, {"earmark", e.str()}});
        }
    }

    AuctionOutcome run() {
        emit_header();
        bool ended = false;
        while (!ended) {
            ++st.iteration;
            emit("iteration-start", {{"n", std::to_string(st.iteration)},
                                     {"pi_g", st.pi_g.str()},
                                     {"pi_r", st.pi_r.str()},
                                     {"pi_c", st.pi_c.str()}});
            int rounds = 0;
            BigInt iteration_purchases = 0;
            bool cut = false;
            while (!cut && !ended) {
                ++rounds;
                emit("round-start",
                     {{"iteration", std::to_string(st.iteration)}, {"n", std::to_string(rounds)}});
                BigInt round_purchases = 0;
                for (std::size_t bi = 0; bi < sc.buyers.size(); ++bi) {
                    BigInt o = st.owned_couples(bi);
                    BigInt o_plus = st.owned_raised(bi);
                    BasketChoice choice = optimal_basket(sc.buyers[bi], st.pi_c, st.cash[bi],
                                                         st.earmark[bi], o);
                    Rational budget = st.cash[bi] + st.earmark[bi] + st.pi_c * Rational(o);
                    emit("consider", {{"buyer", sc.buyers[bi].id},
                                      {"o", o.str()},
                                      {"o_plus", o_plus.str()},
                                      {"budget", budget.str()},
                                      {"s", choice.couples.str()}});
                    if (choice.couples < o) continue; // current basket still optimal
                    BigInt target = choice.couples - o_plus;
                    if (target <= 0) continue;
                    AuctionTrace scratch;
                    BigInt n = outbid(st, bi, target, scratch);
                    for (auto& ev : scratch.events) sink.emit(std::move(ev));
                    round_purchases += n;
                    iteration_purchases += n;
                    purchases_total += n;
                    if (iteration_purchases > 0 && !st.couple_available_at_base()) {
                        emit("iteration-cut", {{"iteration", std::to_string(st.iteration)},
                                               {"round", std::to_string(rounds)}});
                        cut = true;
                        break;
                    }
                }
                if (!cut) {
                    emit("round-end", {{"iteration", std::to_string(st.iteration)},
                                       {"n", std::to_string(rounds)},
                                       {"purchases", round_purchases.str()}});
                    if (round_purchases == 0) ended = true; // nobody wants to buy
                }
            }
            rounds_per_iter.push_back(rounds);
            if (ended) break;
            // Iteration over: top up the surplus money covering initial
            // endowments (at pre-raise prices), then raise all prices.
            for (std::size_t p = 0; p < st.cash.size(); ++p) {
                Rational amount(0);
                if (p < sc.buyers.size())
                    amount = sc.epsilon * st.pi_r * Rational(sc.buyers[p].rights);
                else
                    amount = sc.epsilon * st.pi_g * Rational(sc.sellers[p - sc.buyers.size()].good);
                if (amount.is_zero()) continue;
                st.cash[p] += amount;
                emit("topup", {{"participant", pid(p)}, {"amount", amount.str()}});
            }
            Rational growth = Rational(1) + sc.epsilon;
            st.pi_g *= growth;
            st.pi_r *= growth;
            st.pi_c *= growth;
            emit("price-raise",
                 {{"pi_g", st.pi_g.str()}, {"pi_r", st.pi_r.str()}, {"pi_c", st.pi_c.str()}});
        }
        emit("trading-end", {{"reason", "idle-round"}, {"iterations", std::to_string(st.iteration)}});
        return finish();
    }

    AuctionOutcome finish() {
        const std::size_t nb = sc.buyers.size(), ns = sc.sellers.size();
        AuctionOutcome out;
        out.terminal_prices.good = st.pi_g;
        out.terminal_prices.right = st.pi_r;
        out.terminal_prices.couple = st.pi_c;
        out.iterations = st.iteration;
        out.rounds_per_iteration = rounds_per_iter;
        out.purchases = purchases_total;

        // Final Money sweep: every participant converts its cash into Money
        // items at price 1; the sub-unit remainder stays with the system.
        std::vector<BigInt> money_items(nb + ns);
        BigInt swept_total = 0;
        for (std::size_t p = 0; p < st.cash.size(); ++p) {
            BigInt items = st.cash[p].floor();
            Rational residue = st.cash[p] - Rational(items);
            money_items[p] = items;
            swept_total += items;
            out.system_residue += residue;
            st.cash[p] = Rational(0);
            emit("sweep", {{"participant", pid(p)},
                           {"money", items.str()},
                           {"residue", residue.str()}});
        }
        BigInt kept = sc.total_money() - swept_total;
        if (kept < 0) kept = 0; // only reachable when endowments never traded
        out.system_money_items = kept;
        emit("system", {{"money", kept.str()}, {"residue", out.system_residue.str()}});

        // Unmatched Rights disappear at the end of trading.
        std::vector<BigInt> loose_rights(nb), loose_goods(ns);
        for (std::size_t i = 0; i < st.right_owner.size(); ++i)
            if (!st.right_coupled[i]) ++loose_rights[st.right_owner[i]];
        for (std::size_t i = 0; i < st.good_owner.size(); ++i)
            if (!st.good_coupled[i]) ++loose_goods[st.good_owner[i]];
        for (std::size_t b = 0; b < nb; ++b)
            if (loose_rights[b] > 0)
                emit("right-expire", {{"buyer", sc.buyers[b].id}, {"count", loose_rights[b].str()}});

        out.couples_held.assign(nb, BigInt(0));
        for (const auto& c : st.couples) ++out.couples_held[c.owner];

        out.solution.prices = out.terminal_prices;
        out.solution.baskets.resize(nb + ns);
        for (std::size_t b = 0; b < nb; ++b) {
            market::Basket& basket = out.solution.baskets[b];
            basket.couples = out.couples_held[b];
            basket.money = money_items[b];
        }
        for (std::size_t s = 0; s < ns; ++s) {
            market::Basket& basket = out.solution.baskets[nb + s];
            basket.money = money_items[nb + s];
            basket.goods = loose_goods[s];
            basket.rights = 0;
        }

        emit("terminal",
             {{"pi_g", st.pi_g.str()}, {"pi_r", st.pi_r.str()}, {"pi_c", st.pi_c.str()}});
        for (std::size_t p = 0; p < nb + ns; ++p) {
            const market::Basket& basket = out.solution.baskets[p];
            emit("basket", {{"participant", pid(p)},
                            {"couples", basket.couples.str()},
                            {"goods", basket.goods.str()},
                            {"rights", basket.rights.str()},
                            {"money", basket.money.str()}});
        }

        out.frustrations.resize(nb);
        out.right_sale_proceeds.assign(nb, Rational(0));
        out.earmark_left.assign(nb, Rational(0));
        for (std::size_t b = 0; b < nb; ++b) {
            out.frustrations[b] = market::frustration(sc.buyers[b].rights, out.couples_held[b]);
            BigInt sold = sc.buyers[b].rights - loose_rights[b];
            BigInt net = sold - out.couples_held[b];
            if (net > 0) out.right_sale_proceeds[b] = Rational(net) * st.pi_r;
            out.earmark_left[b] = st.earmark[b];
            emit("frustration",
                 {{"buyer", sc.buyers[b].id},
                  {"rights", sc.buyers[b].rights.str()},
                  {"purchased", out.couples_held[b].str()},
                  {"value", out.frustrations[b] ? out.frustrations[b]->str() : std::string("na")}});
        }
        return out;
    }
};

// Source of the next Couple an outbid can take at the base price.
struct Source {
    enum Kind { OwnCouple, OtherCouple, Compose, None } kind = None;
    std::size_t couple_index = kNone; // OwnCouple / OtherCouple
    std::size_t good_item = kNone;    // Compose
    std::size_t right_item = kNone;   // Compose
};

Source pick_source(const AuctionState& st, std::size_t b) {
    Source src;
    // Own base-priced Couples first, then other holders (ascending owner,
    // oldest tag first, lowest id).
    std::size_t best = kNone;
    bool best_own = false;
    for (std::size_t i = 0; i < st.couples.size(); ++i) {
        const CoupleRecord& c = st.couples[i];
        if (c.tag != st.pi_c) continue;
        bool own = c.owner == b;
        if (best == kNone) {
            best = i;
            best_own = own;
            continue;
        }
        const CoupleRecord& cur = st.couples[best];
        auto rank = [&](const CoupleRecord& r, bool is_own) {
            return std::tuple<int, std::size_t, std::uint64_t, std::size_t>(
                is_own ? 0 : 1, is_own ? 0 : r.owner, r.tag_seq, r.id);
        };
        if (rank(c, own) < rank(cur, best_own)) {
            best = i;
            best_own = own;
        }
    }
    if (best != kNone) {
        src.kind = best_own ? Source::OwnCouple : Source::OtherCouple;
        src.couple_index = best;
        return src;
    }
    // Compose from uncoupled items: Rights from b itself first, then other
    // buyers ascending; Good from sellers ascending.
    std::size_t right_item = kNone;
    for (std::size_t i = 0; i < st.right_owner.size(); ++i)
        if (!st.right_coupled[i] && st.right_owner[i] == b) {
            right_item = i;
            break;
        }
    if (right_item == kNone) {
        std::size_t best_owner = kNone;
        for (std::size_t i = 0; i < st.right_owner.size(); ++i)
            if (!st.right_coupled[i] && (best_owner == kNone || st.right_owner[i] < best_owner)) {
                right_item = i;
                best_owner = st.right_owner[i];
            }
    }
    std::size_t good_item = kNone;
    std::size_t best_seller = kNone;
    for (std::size_t i = 0; i < st.good_owner.size(); ++i)
        if (!st.good_coupled[i] && (best_seller == kNone || st.good_owner[i] < best_seller)) {
            good_item = i;
            best_seller = st.good_owner[i];
        }
    if (right_item != kNone && good_item != kNone) {
        src.kind = Source::Compose;
        src.right_item = right_item;
        src.good_item = good_item;
        return src;
    }
    return src;
}

} // namespace

BigInt outbid(AuctionState& st, std::size_t b, const BigInt& target, AuctionTrace& trace) {
    const market::Scenario& sc = *st.scenario;
    Rational raised = st.raised_price();
    BigInt bought = 0;
    while (bought < target) {
        Source src = pick_source(st, b);
        if (src.kind == Source::None) break;

        Rational sale_credit =
            src.kind == Source::OwnCouple ? st.pi_c : Rational(0); // proceeds to b itself
        if (st.cash[b] + st.earmark[b] + sale_credit < raised) {
            trace.events.push_back(
                make_event("stop", {{"buyer", sc.buyers[b].id}, {"reason", "insufficient-cash"}}));
            break;
        }

        // b pays the raised price, earmarked funds first. Rebuying an own
        // item nets to the price increment; the sale leg cancels against
        // the purchase instead of washing earmarked funds into plain cash.
        Rational net = src.kind == Source::OwnCouple ? raised - st.pi_c : raised;
        Rational earmark_spent = std::min(st.earmark[b], net);
        st.earmark[b] -= earmark_spent;
        st.cash[b] -= net - earmark_spent;

        Fields fields;
        if (src.kind == Source::Compose) {
            // Fresh pairing. The components sit in initial endowments at the
            // base price; their payment is already in the surplus money, so
            // no cash moves to the previous owners.
            st.right_coupled[src.right_item] = true;
            st.good_coupled[src.good_item] = true;
            CoupleRecord rec;
            rec.id = st.next_couple_id++;
            rec.good_item = src.good_item;
            rec.right_item = src.right_item;
            rec.owner = b;
            rec.tag = raised;
            rec.tag_seq = st.next_tag_seq++;
            rec.earmark_content = earmark_spent;
            st.couples.push_back(rec);
            fields = {{"kind", "compose"},
                      {"buyer", sc.buyers[b].id},
                      {"couple", "c" + std::to_string(rec.id)},
                      {"good", "g" + std::to_string(src.good_item)},
                      {"right", "r" + std::to_string(src.right_item)},
                      {"good_from", sc.sellers[st.good_owner[src.good_item]].id},
                      {"right_from", sc.buyers[st.right_owner[src.right_item]].id}};
        } else {
            CoupleRecord& rec = st.couples[src.couple_index];
            std::size_t owner = rec.owner;
            Rational refund(0);
            if (src.kind == Source::OtherCouple) {
                refund = std::min(rec.earmark_content, st.pi_c);
                st.earmark[owner] += refund;
                st.cash[owner] += st.pi_c - refund;
                rec.earmark_content = earmark_spent;
            } else {
                rec.earmark_content += earmark_spent;
            }
            rec.owner = b;
            rec.tag = raised;
            rec.tag_seq = st.next_tag_seq++;
            fields = {{"kind", src.kind == Source::OwnCouple ? "self" : "outbid"},
                      {"buyer", sc.buyers[b].id},
                      {"couple", "c" + std::to_string(rec.id)},
                      {"owner", sc.buyers[owner].id},
                      {"earmark_refund", refund.str()}};
        }
        fields.emplace_back("price", st.pi_c.str());
        fields.emplace_back("paid", raised.str());
        fields.emplace_back("earmark_spent", earmark_spent.str());
        fields.emplace_back(
            "received",
            (src.kind == Source::Compose ? Rational(0) : st.pi_c).str());
        trace.events.push_back(make_event("buy", std::move(fields)));
        ++bought;
    }
    return bought;
}

AuctionOutcome run_auction(const market::Scenario& s, const std::vector<Rational>& earmarks) {
    RecordingSink sink;
    Engine engine(s, earmarks, sink);
    AuctionOutcome out = engine.run();
    out.trace = std::move(sink.trace);
    return out;
}

namespace {

Rational parse_rational_field(const TraceEvent& ev, const std::string& key) {
    const std::string* v = ev.find(key);
    if (!v) throw Error(ErrorKind::Parse, "trace event '" + ev.kind + "' misses field " + key);
    auto r = Rational::parse(*v);
    if (!r) throw Error(ErrorKind::Parse, "trace field " + key + " is not a rational: " + *v);
    return *r;
}

BigInt parse_int_field(const TraceEvent& ev, const std::string& key) {
    Rational r = parse_rational_field(ev, key);
    if (!r.is_integer())
        throw Error(ErrorKind::Parse, "trace field " + key + " is not an integer");
    return r.numerator();
}

std::string string_field(const TraceEvent& ev, const std::string& key) {
    const std::string* v = ev.find(key);
    if (!v) throw Error(ErrorKind::Parse, "trace event '" + ev.kind + "' misses field " + key);
    return *v;
}

// Rebuild the scenario and initial earmarks from the trace header.
std::pair<market::Scenario, std::vector<Rational>> scenario_from_trace(const AuctionTrace& trace) {
    market::Scenario sc;
    std::vector<Rational> earmarks;
    bool saw_scenario = false;
    for (const auto& ev : trace.events) {
        if (ev.kind == "scenario") {
            sc.epsilon = parse_rational_field(ev, "epsilon");
            saw_scenario = true;
        } else if (ev.kind == "buyer") {
            market::BuyerSpec b;
            b.id = string_field(ev, "id");
            b.money = parse_int_field(ev, "money");
            b.rights = parse_int_field(ev, "rights");
            b.demand = parse_int_field(ev, "demand");
            b.money_utility.slope = parse_rational_field(ev, "lambda");
            std::vector<Rational> marginals;
            std::string text = string_field(ev, "marginals");
            std::size_t start = 0;
            while (start < text.size()) {
                std::size_t comma = text.find(',', start);
                std::string piece = comma == std::string::npos ? text.substr(start)
                                                               : text.substr(start, comma - start);
                auto r = Rational::parse(piece);
                if (!r) throw Error(ErrorKind::Parse, "bad marginal in trace: " + piece);
                marginals.push_back(*r);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            b.good_utility = market::PiecewiseConcaveUtility(std::move(marginals));
            sc.buyers.push_back(std::move(b));
        } else if (ev.kind == "seller") {
            market::SellerSpec s;
            s.id = string_field(ev, "id");
            s.good = parse_int_field(ev, "good");
            sc.sellers.push_back(std::move(s));
        } else if (ev.kind == "cash-init") {
            if (earmarks.size() < sc.buyers.size()) {
                earmarks.push_back(parse_rational_field(ev, "earmark"));
            }
        } else if (ev.kind == "iteration-start") {
            break;
        }
    }
    if (!saw_scenario) throw Error(ErrorKind::Parse, "trace has no scenario header");
    earmarks.resize(sc.buyers.size(), Rational(0));
    return {std::move(sc), std::move(earmarks)};
}

ReplayStats stats_from_events(const AuctionTrace& trace) {
    ReplayStats stats;
    BigInt total_good = 0;
    std::vector<std::string> ids;
    std::vector<Rational> cash;
    auto index_of = [&](const std::string& id) -> std::size_t {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return i;
        throw Error(ErrorKind::Parse, "trace names unknown participant " + id);
    };

    BigInt composed_iteration1 = 0;
    bool in_first_iteration = false;
    bool past_first_iteration = false;

    auto observe = [&]() {
        if (!past_first_iteration) return;
        Rational total(0);
        for (const auto& c : cash) total += c;
        stats.saw_post_first_iteration_event = true;
        if (total > stats.max_cash_after_first_iteration)
            stats.max_cash_after_first_iteration = total;
    };

    for (const auto& ev : trace.events) {
        if (ev.kind == "scenario") {
            total_good = parse_int_field(ev, "good");
        } else if (ev.kind == "buyer" || ev.kind == "seller") {
            ids.push_back(string_field(ev, "id"));
            cash.push_back(Rational(0));
        } else if (ev.kind == "cash-init") {
            cash[index_of(string_field(ev, "participant"))] = parse_rational_field(ev, "cash");
        } else if (ev.kind == "iteration-start") {
            ++stats.iterations;
            stats.rounds_per_iteration.push_back(0);
            in_first_iteration = stats.iterations == 1;
            if (stats.iterations == 2) past_first_iteration = true;
            observe();
        } else if (ev.kind == "round-start") {
            ++stats.rounds_per_iteration.back();
            observe();
        } else if (ev.kind == "buy") {
            ++stats.purchases;
            std::string kind = string_field(ev, "kind");
            if (kind == "compose" && in_first_iteration) ++composed_iteration1;
            Rational paid = parse_rational_field(ev, "paid");
            Rational from_earmark = parse_rational_field(ev, "earmark_spent");
            Rational received = parse_rational_field(ev, "received");
            std::size_t buyer = index_of(string_field(ev, "buyer"));
            if (kind == "self") {
                // Net exchange: the sale leg cancels inside one account.
                cash[buyer] -= paid - received - from_earmark;
            } else {
                cash[buyer] -= paid - from_earmark;
                if (received.is_positive()) {
                    Rational refund = ev.find("earmark_refund")
                                          ? parse_rational_field(ev, "earmark_refund")
                                          : Rational(0);
                    cash[index_of(string_field(ev, "owner"))] += received - refund;
                }
            }
            observe();
        } else if (ev.kind == "topup") {
            cash[index_of(string_field(ev, "participant"))] += parse_rational_field(ev, "amount");
            observe();
        } else if (ev.kind == "sweep") {
            std::size_t p = index_of(string_field(ev, "participant"));
            cash[p] -= Rational(parse_int_field(ev, "money")) + parse_rational_field(ev, "residue");
            observe();
        } else if (ev.kind == "terminal") {
            stats.terminal_prices.good = parse_rational_field(ev, "pi_g");
            stats.terminal_prices.right = parse_rational_field(ev, "pi_r");
            stats.terminal_prices.couple = parse_rational_field(ev, "pi_c");
        } else {
            observe();
        }
    }
    stats.all_coupled_after_first_iteration = composed_iteration1 == total_good;
    return stats;
}

} // namespace

ReplayResult replay_trace(const AuctionTrace& trace) {
    ReplayResult result;
    try {
        auto [scenario, earmarks] = scenario_from_trace(trace);
        CheckingSink sink(trace);
        Engine engine(scenario, earmarks, sink);
        engine.run();
        if (sink.pos != trace.events.size())
            throw Error(ErrorKind::Runtime,
                        "trace has " + std::to_string(trace.events.size() - sink.pos) +
                            " trailing event(s) the replay did not produce");
        result.stats = stats_from_events(trace);
        result.ok = true;
    } catch (const Error& e) {
        result.ok = false;
        result.message = e.what();
    }
    return result;
}

ReplayResult replay_trace_text(const std::string& text) {
    try {
        return replay_trace(AuctionTrace::parse(text));
    } catch (const Error& e) {
        ReplayResult result;
        result.message = e.what();
        return result;
    }
}

} // namespace cdsim::auction
