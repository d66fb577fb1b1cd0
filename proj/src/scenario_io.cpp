#include "cdsim/scenario_io.hpp"

#include "cdsim/couple_auction.hpp"
#include "cdsim/error.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace cdsim::io {

using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

struct Issues {
    std::vector<std::string> list;

    void add(std::string issue) { list.push_back(std::move(issue)); }
    void raise_if_any() const {
        if (list.empty()) return;
        std::string joined;
        for (const auto& s : list) {
            joined += s;
            joined += '\n';
        }
        throw Error(ErrorKind::Parse, joined);
    }
};

bool valid_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

void check_fields(const ordered_json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed, Issues& issues) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) issues.add(where + ": unknown field '" + item.key() + "'");
    }
}

Rational require_rational(const ordered_json& obj, const std::string& where, const char* key,
                          Issues& issues, const Rational& fallback = Rational(0)) {
    if (!obj.contains(key)) {
        issues.add(where + ": missing field '" + key + "'");
        return fallback;
    }
    if (!obj[key].is_string()) {
        issues.add(where + ": field '" + key + "' must be a rational string like \"3/4\"");
        return fallback;
    }
    auto r = Rational::parse(obj[key].get<std::string>());
    if (!r) {
        issues.add(where + ": field '" + key + "' is not a valid rational: " +
                   obj[key].get<std::string>());
        return fallback;
    }
    return *r;
}

BigInt require_integer(const ordered_json& obj, const std::string& where, const char* key,
                       Issues& issues) {
    Rational r = require_rational(obj, where, key, issues);
    if (!r.is_integer()) {
        issues.add(where + ": field '" + key + "' must be an integer string");
        return 0;
    }
    return r.numerator();
}

std::string require_id(const ordered_json& obj, const std::string& where, Issues& issues) {
    if (!obj.contains("id") || !obj["id"].is_string()) {
        issues.add(where + ": missing string field 'id'");
        return "";
    }
    std::string id = obj["id"].get<std::string>();
    if (!valid_id(id)) {
        issues.add(where + ": id must be non-empty [A-Za-z0-9_-]: '" + id + "'");
        return "";
    }
    return id;
}

market::Scenario parse_couple(const ordered_json& root, Issues& issues) {
    market::Scenario sc;
    check_fields(root,
                 "scenario", {"version", "mechanism", "epsilon", "markets", "rng_seed",
                              "rights_rule", "priority", "buyers", "sellers"},
                 issues);
    sc.epsilon = require_rational(root, "scenario", "epsilon", issues);
    if (root.contains("markets")) {
        if (!root["markets"].is_number_integer())
            issues.add("scenario: 'markets' must be an integer");
        else
            sc.markets = root["markets"].get<int>();
    }
    if (root.contains("rng_seed")) {
        if (!root["rng_seed"].is_number_unsigned() && !root["rng_seed"].is_number_integer())
            issues.add("scenario: 'rng_seed' must be a non-negative integer");
        else
            sc.rng_seed = root["rng_seed"].get<std::uint64_t>();
    }
    if (root.contains("rights_rule")) {
        std::string rule = root["rights_rule"].is_string() ? root["rights_rule"].get<std::string>()
                                                           : std::string();
        if (rule == "cgd")
            sc.rights_rule = fairness::DivisibleRule::ContestedGarment;
        else if (rule == "cea")
            sc.rights_rule = fairness::DivisibleRule::ConstrainedEqual;
        else if (rule == "proportional")
            sc.rights_rule = fairness::DivisibleRule::Proportional;
        else
            issues.add("scenario: rights_rule must be cgd, cea or proportional");
    }
    if (!root.contains("buyers") || !root["buyers"].is_array() || root["buyers"].empty())
        issues.add("scenario: non-empty 'buyers' array required");
    else {
        for (const auto& b : root["buyers"]) {
            std::string where = "buyer " + std::to_string(sc.buyers.size() + 1);
            if (!b.is_object()) {
                issues.add(where + ": must be an object");
                continue;
            }
            check_fields(b, where, {"id", "money", "rights", "demand", "lambda", "marginals"},
                         issues);
            market::BuyerSpec spec;
            spec.id = require_id(b, where, issues);
            spec.money = require_integer(b, where, "money", issues);
            spec.rights = require_integer(b, where, "rights", issues);
            spec.demand = require_integer(b, where, "demand", issues);
            spec.money_utility.slope = require_rational(b, where, "lambda", issues, Rational(1));
            std::vector<Rational> marginals;
            if (!b.contains("marginals") || !b["marginals"].is_array())
                issues.add(where + ": 'marginals' array required");
            else
                for (const auto& m : b["marginals"]) {
                    if (!m.is_string()) {
                        issues.add(where + ": marginals must be rational strings");
                        break;
                    }
                    auto r = Rational::parse(m.get<std::string>());
                    if (!r) {
                        issues.add(where + ": bad marginal '" + m.get<std::string>() + "'");
                        break;
                    }
                    marginals.push_back(*r);
                }
            spec.good_utility = market::PiecewiseConcaveUtility(std::move(marginals));
            sc.buyers.push_back(std::move(spec));
        }
    }
    if (!root.contains("sellers") || !root["sellers"].is_array() || root["sellers"].empty())
        issues.add("scenario: non-empty 'sellers' array required");
    else {
        for (const auto& s : root["sellers"]) {
            std::string where = "seller " + std::to_string(sc.sellers.size() + 1);
            if (!s.is_object()) {
                issues.add(where + ": must be an object");
                continue;
            }
            check_fields(s, where, {"id", "good"}, issues);
            market::SellerSpec spec;
            spec.id = require_id(s, where, issues);
            spec.good = require_integer(s, where, "good", issues);
            sc.sellers.push_back(std::move(spec));
        }
    }
    if (root.contains("priority")) {
        if (!root["priority"].is_array())
            issues.add("scenario: 'priority' must be an array of buyer ids");
        else
            for (const auto& p : root["priority"]) {
                if (!p.is_string()) {
                    issues.add("scenario: 'priority' must contain buyer ids");
                    break;
                }
                std::string id = p.get<std::string>();
                bool found = false;
                for (std::size_t i = 0; i < sc.buyers.size(); ++i)
                    if (sc.buyers[i].id == id) {
                        sc.priority.push_back(i);
                        found = true;
                        break;
                    }
                if (!found) issues.add("scenario: priority names unknown buyer '" + id + "'");
            }
    }
    // Duplicate ids break trace attribution.
    for (std::size_t i = 0; i < sc.buyers.size(); ++i)
        for (std::size_t j = i + 1; j < sc.buyers.size(); ++j)
            if (!sc.buyers[i].id.empty() && sc.buyers[i].id == sc.buyers[j].id)
                issues.add("duplicate buyer id '" + sc.buyers[i].id + "'");
    for (std::size_t i = 0; i < sc.sellers.size(); ++i) {
        for (std::size_t j = i + 1; j < sc.sellers.size(); ++j)
            if (!sc.sellers[i].id.empty() && sc.sellers[i].id == sc.sellers[j].id)
                issues.add("duplicate seller id '" + sc.sellers[i].id + "'");
        for (const auto& b : sc.buyers)
            if (!b.id.empty() && b.id == sc.sellers[i].id)
                issues.add("id '" + b.id + "' used by both a buyer and a seller");
    }
    return sc;
}

seller::EpisodeConfig parse_seller(const ordered_json& root, Issues& issues) {
    seller::EpisodeConfig cfg;
    check_fields(root,
                 "config", {"version", "mechanism", "markets", "rng_seed", "buyers", "sellers",
                            "supply_base", "supply_variance", "constants", "strategy",
                            "strategy_params"},
                 issues);
    if (root.contains("markets")) {
        if (!root["markets"].is_number_integer())
            issues.add("config: 'markets' must be an integer");
        else
            cfg.markets = root["markets"].get<int>();
    }
    if (root.contains("rng_seed")) {
        if (!root["rng_seed"].is_number_unsigned() && !root["rng_seed"].is_number_integer())
            issues.add("config: 'rng_seed' must be a non-negative integer");
        else
            cfg.rng_seed = root["rng_seed"].get<std::uint64_t>();
    }
    cfg.supply_base = require_rational(root, "config", "supply_base", issues);
    cfg.supply_variance = require_rational(root, "config", "supply_variance", issues);
    if (!root.contains("buyers") || !root["buyers"].is_array() || root["buyers"].empty())
        issues.add("config: non-empty 'buyers' array required");
    else
        for (const auto& b : root["buyers"]) {
            std::string where = "buyer " + std::to_string(cfg.buyers.size() + 1);
            if (!b.is_object()) {
                issues.add(where + ": must be an object");
                continue;
            }
            check_fields(b, where, {"id", "income", "demand"}, issues);
            seller::BuyerParams params;
            params.id = require_id(b, where, issues);
            params.income = require_rational(b, where, "income", issues);
            params.demand = require_rational(b, where, "demand", issues);
            cfg.buyers.push_back(std::move(params));
        }
    if (!root.contains("sellers") || !root["sellers"].is_array() || root["sellers"].empty())
        issues.add("config: non-empty 'sellers' array required");
    else
        for (const auto& s : root["sellers"]) {
            std::string where = "seller " + std::to_string(cfg.sellers.size() + 1);
            if (!s.is_object()) {
                issues.add(where + ": must be an object");
                continue;
            }
            check_fields(s, where, {"id"}, issues);
            seller::SellerParams params;
            params.id = require_id(s, where, issues);
            cfg.sellers.push_back(std::move(params));
        }
    if (!root.contains("constants") || !root["constants"].is_object())
        issues.add("config: 'constants' object required");
    else {
        const auto& c = root["constants"];
        check_fields(c, "constants", {"store", "end_supply", "in_stock", "missing", "money"},
                     issues);
        cfg.constants.store = require_rational(c, "constants", "store", issues);
        cfg.constants.end_supply = require_rational(c, "constants", "end_supply", issues);
        cfg.constants.in_stock = require_rational(c, "constants", "in_stock", issues);
        cfg.constants.missing = require_rational(c, "constants", "missing", issues);
        cfg.constants.money = require_rational(c, "constants", "money", issues);
    }
    if (root.contains("strategy")) {
        if (!root["strategy"].is_string())
            issues.add("config: 'strategy' must be a string");
        else
            cfg.strategy = root["strategy"].get<std::string>();
    }
    if (root.contains("strategy_params")) {
        const auto& p = root["strategy_params"];
        if (!p.is_object())
            issues.add("config: 'strategy_params' must be an object");
        else {
            check_fields(p, "strategy_params",
                         {"seller_ask", "buyer_good_cap", "right_ask", "right_cap", "hill_step"},
                         issues);
            auto opt = [&](const char* key, Rational& into) {
                if (p.contains(key)) into = require_rational(p, "strategy_params", key, issues);
            };
            opt("seller_ask", cfg.params.seller_ask);
            opt("buyer_good_cap", cfg.params.buyer_good_cap);
            opt("right_ask", cfg.params.right_ask);
            opt("right_cap", cfg.params.right_cap);
            opt("hill_step", cfg.params.hill_step);
        }
    }
    for (std::size_t i = 0; i < cfg.buyers.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.buyers.size(); ++j)
            if (!cfg.buyers[i].id.empty() && cfg.buyers[i].id == cfg.buyers[j].id)
                issues.add("duplicate buyer id '" + cfg.buyers[i].id + "'");
    for (std::size_t i = 0; i < cfg.sellers.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.sellers.size(); ++j)
            if (!cfg.sellers[i].id.empty() && cfg.sellers[i].id == cfg.sellers[j].id)
                issues.add("duplicate seller id '" + cfg.sellers[i].id + "'");
    return cfg;
}

} // namespace

LoadedScenario parse_scenario_text(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("JSON parse error: ") + e.what());
    }
    Issues issues;
    if (!root.is_object()) {
        issues.add("scenario file must contain a JSON object");
        issues.raise_if_any();
    }
    if (!root.contains("version") || !root["version"].is_number_integer())
        issues.add("missing integer field 'version'");
    else if (root["version"].get<int>() != kFormatVersion)
        issues.add("unsupported format version " + root["version"].dump() + ", expected " +
                   std::to_string(kFormatVersion));
    std::string mechanism;
    if (!root.contains("mechanism") || !root["mechanism"].is_string())
        issues.add("missing string field 'mechanism' (couple|seller)");
    else
        mechanism = root["mechanism"].get<std::string>();
    if (mechanism != "couple" && mechanism != "seller") {
        if (!mechanism.empty()) issues.add("mechanism must be 'couple' or 'seller'");
        issues.raise_if_any();
    }
    if (mechanism == "couple") {
        market::Scenario sc = parse_couple(root, issues);
        issues.raise_if_any();
        return sc;
    }
    seller::EpisodeConfig cfg = parse_seller(root, issues);
    issues.raise_if_any();
    return cfg;
}

LoadedScenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str());
}

void validate_loaded(const LoadedScenario& loaded) {
    market::ValidationReport report;
    if (std::holds_alternative<market::Scenario>(loaded))
        report = market::validate_scenario(std::get<market::Scenario>(loaded));
    else
        report = seller::validate_config(std::get<seller::EpisodeConfig>(loaded));
    if (!report.ok()) throw Error(ErrorKind::Validation, report.str());
}

LoadedScenario load_scenario_file(const std::string& path) {
    LoadedScenario loaded = parse_scenario_file(path);
    validate_loaded(loaded);
    return loaded;
}

std::string save_scenario(const LoadedScenario& loaded) {
    ordered_json root;
    root["version"] = kFormatVersion;
    if (std::holds_alternative<market::Scenario>(loaded)) {
        const auto& sc = std::get<market::Scenario>(loaded);
        root["mechanism"] = "couple";
        root["epsilon"] = sc.epsilon.str();
        root["markets"] = sc.markets;
        root["rng_seed"] = sc.rng_seed;
        switch (sc.rights_rule) {
            case fairness::DivisibleRule::ContestedGarment: root["rights_rule"] = "cgd"; break;
            case fairness::DivisibleRule::ConstrainedEqual: root["rights_rule"] = "cea"; break;
            case fairness::DivisibleRule::Proportional: root["rights_rule"] = "proportional"; break;
        }
        if (!sc.priority.empty()) {
            ordered_json arr = ordered_json::array();
            for (std::size_t i : sc.priority) arr.push_back(sc.buyers[i].id);
            root["priority"] = arr;
        }
        ordered_json buyers = ordered_json::array();
        for (const auto& b : sc.buyers) {
            ordered_json obj;
            obj["id"] = b.id;
            obj["money"] = b.money.str();
            obj["rights"] = b.rights.str();
            obj["demand"] = b.demand.str();
            obj["lambda"] = b.money_utility.slope.str();
            ordered_json marginals = ordered_json::array();
            for (const auto& m : b.good_utility.marginals()) marginals.push_back(m.str());
            obj["marginals"] = marginals;
            buyers.push_back(obj);
        }
        root["buyers"] = buyers;
        ordered_json sellers = ordered_json::array();
        for (const auto& s : sc.sellers) {
            ordered_json obj;
            obj["id"] = s.id;
            obj["good"] = s.good.str();
            sellers.push_back(obj);
        }
        root["sellers"] = sellers;
    } else {
        const auto& cfg = std::get<seller::EpisodeConfig>(loaded);
        root["mechanism"] = "seller";
        root["markets"] = cfg.markets;
        root["rng_seed"] = cfg.rng_seed;
        root["supply_base"] = cfg.supply_base.str();
        root["supply_variance"] = cfg.supply_variance.str();
        ordered_json buyers = ordered_json::array();
        for (const auto& b : cfg.buyers) {
            ordered_json obj;
            obj["id"] = b.id;
            obj["income"] = b.income.str();
            obj["demand"] = b.demand.str();
            buyers.push_back(obj);
        }
        root["buyers"] = buyers;
        ordered_json sellers = ordered_json::array();
        for (const auto& s : cfg.sellers) {
            ordered_json obj;
            obj["id"] = s.id;
            sellers.push_back(obj);
        }
        root["sellers"] = sellers;
        ordered_json constants;
        constants["store"] = cfg.constants.store.str();
        constants["end_supply"] = cfg.constants.end_supply.str();
        constants["in_stock"] = cfg.constants.in_stock.str();
        constants["missing"] = cfg.constants.missing.str();
        constants["money"] = cfg.constants.money.str();
        root["constants"] = constants;
        root["strategy"] = cfg.strategy;
        ordered_json params;
        params["seller_ask"] = cfg.params.seller_ask.str();
        params["buyer_good_cap"] = cfg.params.buyer_good_cap.str();
        params["right_ask"] = cfg.params.right_ask.str();
        params["right_cap"] = cfg.params.right_cap.str();
        params["hill_step"] = cfg.params.hill_step.str();
        root["strategy_params"] = params;
    }
    return root.dump(2) + "\n";
}

namespace {

std::string csv_escape(const std::string& s) { return s; } // ids are [A-Za-z0-9_-]

void append_rational_pair(std::string& row, const Rational& value) {
    row += value.str();
    row += ',';
    row += value.decimal();
}

void append_opt_rational_pair(std::string& row, const std::optional<Rational>& value) {
    if (value) {
        append_rational_pair(row, *value);
    } else {
        row += "na,na";
    }
}

std::string commodity_name(market::Commodity c) {
    switch (c) {
        case market::Commodity::Good: return "good";
        case market::Commodity::Right: return "right";
        case market::Commodity::Money: return "money";
        case market::Commodity::Couple: return "couple";
    }
    return "?";
}

} // namespace

std::string couple_prices_csv(const sequence::EpisodeResult& episode) {
    std::string out = "market,pi_g,pi_g_dec,pi_r,pi_r_dec,pi_c,pi_c_dec\n";
    for (const auto& m : episode.markets) {
        std::string row = std::to_string(m.index) + ",";
        append_rational_pair(row, m.outcome.terminal_prices.good);
        row += ',';
        append_rational_pair(row, m.outcome.terminal_prices.right);
        row += ',';
        append_rational_pair(row, m.outcome.terminal_prices.couple);
        out += row + "\n";
    }
    return out;
}

std::string couple_frustration_csv(const market::Scenario& s,
                                   const sequence::EpisodeResult& episode) {
    std::string out = "market,buyer,rights,purchased,frustration,frustration_dec\n";
    for (const auto& m : episode.markets) {
        for (std::size_t b = 0; b < s.buyers.size(); ++b) {
            std::string row = std::to_string(m.index) + "," + csv_escape(s.buyers[b].id) + "," +
                              m.issued_rights[b].str() + "," +
                              m.outcome.couples_held[b].str() + ",";
            append_opt_rational_pair(row, m.outcome.frustrations[b]);
            out += row + "\n";
        }
    }
    return out;
}

std::string couple_trades_csv(const sequence::EpisodeResult& episode) {
    std::string out = "market,step,commodity,qty,price,price_dec,from,to\n";
    for (const auto& m : episode.markets) {
        int step = 0;
        for (const auto& ev : m.outcome.trace.events) {
            if (ev.kind != "buy") continue;
            ++step;
            const std::string* paid = ev.find("paid");
            const std::string* buyer = ev.find("buyer");
            const std::string* owner = ev.find("owner");
            const std::string* good_from = ev.find("good_from");
            Rational price = *Rational::parse(*paid);
            std::string from = owner ? *owner : (good_from ? *good_from : std::string("-"));
            std::string row = std::to_string(m.index) + "," + std::to_string(step) + ",couple,1,";
            append_rational_pair(row, price);
            row += "," + from + "," + *buyer;
            out += row + "\n";
        }
    }
    return out;
}

std::string couple_final_csv(const market::Scenario& s, const sequence::EpisodeResult& episode) {
    std::string out = "market,participant,kind,couples,goods,rights,money,utility,utility_dec\n";
    if (episode.markets.empty()) return out;
    const auto& last = episode.markets.back();
    const std::size_t nb = s.buyers.size();
    for (std::size_t p = 0; p < last.outcome.solution.baskets.size(); ++p) {
        const auto& basket = last.outcome.solution.baskets[p];
        bool buyer = p < nb;
        // Utility of the terminal basket under the stage scenario (issued
        // rights do not change utilities).
        Rational utility = buyer
                               ? s.buyers[p].good_utility.value(basket.couples + basket.goods) +
                                     s.buyers[p].money_utility.slope * Rational(basket.money)
                               : Rational(basket.money);
        std::string id = buyer ? s.buyers[p].id : s.sellers[p - nb].id;
        std::string row = std::to_string(last.index) + "," + id + "," +
                          (buyer ? "buyer" : "seller") + "," + basket.couples.str() + "," +
                          basket.goods.str() + "," + basket.rights.str() + "," +
                          basket.money.str() + ",";
        append_rational_pair(row, utility);
        out += row + "\n";
    }
    return out;
}

std::string couple_trace(const sequence::EpisodeResult& episode) {
    std::string out;
    for (const auto& m : episode.markets) {
        out += "market-begin t=" + std::to_string(m.index) + "\n";
        out += m.outcome.trace.serialize();
        out += "market-end t=" + std::to_string(m.index) + "\n";
    }
    return out;
}

std::string seller_prices_csv(const seller::SellerEpisodeResult& result) {
    std::string out =
        "market,ask_good,ask_good_dec,bid_good,bid_good_dec,ask_right,ask_right_dec,"
        "bid_right,bid_right_dec\n";
    auto mean = [](const std::vector<Rational>& xs) -> std::optional<Rational> {
        if (xs.empty()) return std::nullopt;
        Rational sum(0);
        for (const auto& x : xs) sum += x;
        return sum / Rational(static_cast<long long>(xs.size()));
    };
    for (const auto& m : result.markets) {
        std::vector<Rational> ask_good, bid_good, ask_right, bid_right;
        for (const auto& o : m.offers)
            if (o.quantity.is_positive()) ask_good.push_back(o.price);
        for (const auto& o : m.right_offers)
            if (o.quantity.is_positive()) ask_right.push_back(o.price);
        for (const auto& o : m.orders) {
            if (o.good_volume.is_positive()) bid_good.push_back(o.good_cap);
            if (o.right_volume.is_positive()) bid_right.push_back(o.right_cap);
        }
        std::string row = std::to_string(m.index) + ",";
        append_opt_rational_pair(row, mean(ask_good));
        row += ',';
        append_opt_rational_pair(row, mean(bid_good));
        row += ',';
        append_opt_rational_pair(row, mean(ask_right));
        row += ',';
        append_opt_rational_pair(row, mean(bid_right));
        out += row + "\n";
    }
    return out;
}

std::string seller_frustration_csv(const seller::EpisodeConfig& cfg,
                                   const seller::SellerEpisodeResult& result) {
    std::string out = "market,buyer,rights,purchased,frustration,frustration_dec\n";
    for (const auto& m : result.markets) {
        for (std::size_t b = 0; b < cfg.buyers.size(); ++b) {
            std::string row = std::to_string(m.index) + "," + cfg.buyers[b].id + "," +
                              m.issued_rights[b].str() + "," + m.goods_purchased[b].str() + ",";
            append_opt_rational_pair(row, m.frustrations[b]);
            out += row + "\n";
        }
    }
    return out;
}

std::string seller_trades_csv(const seller::SellerEpisodeResult& result) {
    std::string out = "market,step,commodity,qty,price,price_dec,from,to\n";
    for (const auto& m : result.markets) {
        for (const auto& t : m.trades) {
            std::string row = std::to_string(t.market) + "," + std::to_string(t.step) + "," +
                              commodity_name(t.commodity) + "," + t.quantity.str() + ",";
            append_rational_pair(row, t.price);
            row += "," + t.from + "," + t.to;
            out += row + "\n";
        }
    }
    return out;
}

std::string seller_final_csv(const seller::EpisodeConfig& cfg,
                             const seller::SellerEpisodeResult& result) {
    std::string out = "market,participant,kind,couples,goods,rights,money,utility,utility_dec\n";
    if (result.markets.empty()) return out;
    const auto& last = result.markets.back();
    for (std::size_t b = 0; b < cfg.buyers.size(); ++b) {
        std::string row = std::to_string(last.index) + "," + cfg.buyers[b].id + ",buyer,0," +
                          last.buyer_goods_end[b].str() + ",0," + last.buyer_money_end[b].str() +
                          ",";
        append_rational_pair(row, result.buyer_total_utility[b]);
        out += row + "\n";
    }
    for (std::size_t s = 0; s < cfg.sellers.size(); ++s) {
        std::string row = std::to_string(last.index) + "," + cfg.sellers[s].id + ",seller,0," +
                          last.seller_stock_end[s].str() + ",0,0,";
        append_rational_pair(row, result.seller_total_utility[s]);
        out += row + "\n";
    }
    return out;
}

std::string seller_trace(const seller::EpisodeConfig& cfg,
                         const seller::SellerEpisodeResult& result) {
    std::string out;
    out += "seller-episode markets=" + std::to_string(cfg.markets) +
           " seed=" + std::to_string(cfg.rng_seed) + " strategy=" + cfg.strategy + "\n";
    for (const auto& m : result.markets) {
        out += "market-begin t=" + std::to_string(m.index) + "\n";
        for (std::size_t s = 0; s < m.supply_injected.size(); ++s)
            out += "supply seller=" + cfg.sellers[s].id + " amount=" +
                   m.supply_injected[s].str() + "\n";
        for (const auto& o : m.offers)
            out += "offer seller=" + cfg.sellers[o.seller].id + " qty=" + o.quantity.str() +
                   " price=" + o.price.str() + "\n";
        for (std::size_t b = 0; b < m.declared_demands.size(); ++b)
            out += "demand buyer=" + cfg.buyers[b].id + " amount=" + m.declared_demands[b].str() +
                   "\n";
        for (std::size_t b = 0; b < m.issued_rights.size(); ++b)
            out += "rights buyer=" + cfg.buyers[b].id + " amount=" + m.issued_rights[b].str() +
                   "\n";
        for (const auto& o : m.right_offers)
            out += "right-offer buyer=" + cfg.buyers[o.buyer].id + " qty=" + o.quantity.str() +
                   " price=" + o.price.str() + "\n";
        for (const auto& o : m.orders)
            out += "order buyer=" + cfg.buyers[o.buyer].id + " good_vol=" + o.good_volume.str() +
                   " good_cap=" + o.good_cap.str() + " right_vol=" + o.right_volume.str() +
                   " right_cap=" + o.right_cap.str() + "\n";
        for (const auto& t : m.trades)
            out += "trade step=" + std::to_string(t.step) + " commodity=" +
                   commodity_name(t.commodity) + " qty=" + t.quantity.str() + " price=" +
                   t.price.str() + " from=" + t.from + " to=" + t.to + "\n";
        for (const auto& note : m.clamp_log) out += "clamp note=" + note + "\n";
        out += "market-end t=" + std::to_string(m.index) + "\n";
    }
    return out;
}

RunOutput run_loaded(const LoadedScenario& loaded, const RunOverrides& overrides) {
    LoadedScenario adjusted = loaded;
    if (std::holds_alternative<market::Scenario>(adjusted)) {
        auto& sc = std::get<market::Scenario>(adjusted);
        if (overrides.mechanism && *overrides.mechanism != "couple")
            throw Error(ErrorKind::Validation,
                        "mechanism override '" + *overrides.mechanism +
                            "' conflicts with a couple scenario file");
        if (overrides.seed) sc.rng_seed = *overrides.seed;
        if (overrides.markets) sc.markets = *overrides.markets;
        if (overrides.epsilon) sc.epsilon = *overrides.epsilon;
        validate_loaded(adjusted);

        sequence::EpisodeResult episode = sequence::run_episode(sc);
        if (episode.aborted)
            throw Error(ErrorKind::Runtime, "episode aborted: " + episode.abort_reason);
        RunOutput out;
        out.mechanism = "couple";
        out.prices_csv = couple_prices_csv(episode);
        out.frustration_csv = couple_frustration_csv(sc, episode);
        out.trades_csv = couple_trades_csv(episode);
        out.final_csv = couple_final_csv(sc, episode);
        out.trace = couple_trace(episode);
        return out;
    }

    auto& cfg = std::get<seller::EpisodeConfig>(adjusted);
    if (overrides.mechanism && *overrides.mechanism != "seller")
        throw Error(ErrorKind::Validation, "mechanism override '" + *overrides.mechanism +
                                               "' conflicts with a seller scenario file");
    if (overrides.epsilon)
        throw Error(ErrorKind::Validation, "epsilon override applies to the couple mechanism only");
    if (overrides.seed) cfg.rng_seed = *overrides.seed;
    if (overrides.markets) cfg.markets = *overrides.markets;
    validate_loaded(adjusted);

    seller::SellerEpisodeResult result = seller::run_seller_episode(cfg);
    RunOutput out;
    out.mechanism = "seller";
    out.prices_csv = seller_prices_csv(result);
    out.frustration_csv = seller_frustration_csv(cfg, result);
    out.trades_csv = seller_trades_csv(result);
    out.final_csv = seller_final_csv(cfg, result);
    out.trace = seller_trace(cfg, result);
    return out;
}

void write_run_output(const RunOutput& output, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec && !fs::is_directory(out_dir))
        throw Error(ErrorKind::Io, "cannot create output directory: " + out_dir);
    auto write = [&](const std::string& name, const std::string& content) {
        fs::path path = fs::path(out_dir) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
        f << content;
        if (!f) throw Error(ErrorKind::Io, "short write on " + path.string());
    };
    write("prices.csv", output.prices_csv);
    write("frustration.csv", output.frustration_csv);
    write("trades.csv", output.trades_csv);
    write("final.csv", output.final_csv);
    write("trace.txt", output.trace);
}

std::optional<std::string> replay_trace_file_text(const std::string& text) {
    if (text.rfind("seller-episode", 0) == 0)
        return "seller episode traces are event logs; replay verification covers couple traces";
    std::istringstream in(text);
    std::string line;
    std::string segment;
    bool in_segment = false;
    bool saw_segment = false;
    int segment_index = 0;
    while (std::getline(in, line)) {
        if (line.rfind("market-begin", 0) == 0) {
            in_segment = true;
            saw_segment = true;
            ++segment_index;
            segment.clear();
            continue;
        }
        if (line.rfind("market-end", 0) == 0) {
            in_segment = false;
            auto result = auction::replay_trace_text(segment);
            if (!result.ok)
                return "market " + std::to_string(segment_index) + ": " + result.message;
            continue;
        }
        if (in_segment) {
            segment += line;
            segment += '\n';
        } else if (!line.empty()) {
            // Bare trace without market framing: replay the whole text.
            auto result = auction::replay_trace_text(text);
            if (!result.ok) return result.message;
            return std::nullopt;
        }
    }
    if (in_segment) return "trace ends inside a market segment";
    if (!saw_segment) return "no auction trace found";
    return std::nullopt;
}

} // namespace cdsim::io
