// Acceptance suite: one line per criterion, every check exact unless a
// runtime budget is stated. Exits nonzero if any criterion fails.

#include "cdsim/couple_auction.hpp"
#include "cdsim/fairness.hpp"
#include "cdsim/market.hpp"
#include "cdsim/market_sequence.hpp"
#include "cdsim/scenario_io.hpp"
#include "cdsim/seller_market.hpp"
#include "generators.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

using namespace cdsim;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void criterion(const std::string& name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    auto start = Clock::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << ms << " ms"
              << (detail.empty() ? "" : "; " + detail) << ")\n";
    if (!ok) ++failures;
}

fairness::ClaimsProblem random_claims(SplitMix64& rng, std::size_t max_claimants) {
    std::size_t n = 1 + rng.below(max_claimants);
    fairness::ClaimsProblem p;
    Rational total(0);
    for (std::size_t i = 0; i < n; ++i) {
        Rational d(static_cast<long long>(rng.below(120)),
                   static_cast<long long>(rng.below(4)) + 1);
        p.demands.push_back(d);
        total += d;
    }
    p.supply = total * Rational(static_cast<long long>(rng.below(65)), 64);
    return p;
}

// Independent two-claimant contested-garment oracle: both uncontested parts
// go to their sole claimant, the contested remainder splits equally.
std::pair<Rational, Rational> two_claimant_oracle(const Rational& supply, const Rational& d1,
                                                  const Rational& d2) {
    Rational u1 = std::max(Rational(0), supply - d2);
    Rational u2 = std::max(Rational(0), supply - d1);
    Rational contested = (supply - u1 - u2) / Rational(2);
    return {u1 + contested, u2 + contested};
}

std::string fixture_text(const char* name) {
    std::ifstream in(std::string(CDSIM_FIXTURE_DIR) + "/" + name, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Shared corpus for the auction criteria.
struct AuctionRun {
    market::Scenario scenario;
    Rational epsilon;
    auction::AuctionOutcome outcome;
    auction::ReplayResult replay;
};

std::vector<AuctionRun> auction_corpus;

} // namespace

int main() {
    std::cout << "acceptance criteria\n===================\n";

    criterion("cgd-two-claimant-oracle-and-fair-properties", [](std::string& detail) {
        auto start = Clock::now();
        SplitMix64 rng(101);
        for (int trial = 0; trial < 1000; ++trial) {
            Rational d1(static_cast<long long>(rng.below(200)),
                        static_cast<long long>(rng.below(4)) + 1);
            Rational d2(static_cast<long long>(rng.below(200)),
                        static_cast<long long>(rng.below(4)) + 1);
            Rational supply = (d1 + d2) * Rational(static_cast<long long>(rng.below(65)), 64);
            fairness::ClaimsProblem p;
            p.supply = supply;
            p.demands = {d1, d2};
            fairness::Allocation a = fairness::contested_garment_distribution(p);
            auto [x1, x2] = two_claimant_oracle(supply, d1, d2);
            if (a.shares[0] != x1 || a.shares[1] != x2) {
                detail = "mismatch at trial " + std::to_string(trial);
                return false;
            }
        }
        SplitMix64 rng2(102);
        for (int trial = 0; trial < 1000; ++trial) {
            fairness::ClaimsProblem p = random_claims(rng2, 6);
            fairness::Allocation a = fairness::contested_garment_distribution(p);
            // monotonicity in the supply
            fairness::ClaimsProblem smaller = p;
            smaller.supply = p.supply * Rational(static_cast<long long>(rng2.below(64)), 64);
            fairness::Allocation lo = fairness::contested_garment_distribution(smaller);
            for (std::size_t i = 0; i < p.demands.size(); ++i)
                if (lo.shares[i] > a.shares[i]) {
                    detail = "monotonicity violated";
                    return false;
                }
            // consistency on a random pair
            if (p.demands.size() >= 2) {
                std::size_t i = rng2.below(p.demands.size());
                std::size_t j = rng2.below(p.demands.size());
                if (i != j && (!p.demands[i].is_zero() || !p.demands[j].is_zero())) {
                    fairness::ClaimsProblem pair;
                    pair.supply = a.shares[i] + a.shares[j];
                    pair.demands = {p.demands[i], p.demands[j]};
                    fairness::Allocation again = fairness::contested_garment_distribution(pair);
                    if (again.shares[0] != a.shares[i] || again.shares[1] != a.shares[j]) {
                        detail = "consistency violated";
                        return false;
                    }
                }
            }
            // self-duality
            fairness::ClaimsProblem dual = p;
            dual.supply = p.total_demand() - p.supply;
            fairness::Allocation loss = fairness::contested_garment_distribution(dual);
            for (std::size_t i = 0; i < p.demands.size(); ++i)
                if (a.shares[i] != p.demands[i] - loss.shares[i]) {
                    detail = "self-duality violated";
                    return false;
                }
        }
        auto seconds =
            std::chrono::duration_cast<std::chrono::seconds>(Clock::now() - start).count();
        if (seconds >= 5) {
            detail = "runtime budget of 5 s exceeded";
            return false;
        }
        detail = "2000 instances";
        return true;
    });

    criterion("cea-dual-characterization", [](std::string& detail) {
        SplitMix64 rng(103);
        for (int trial = 0; trial < 1000; ++trial) {
            fairness::ClaimsProblem p = random_claims(rng, 7);
            if (fairness::constrained_equal_distribution(p).shares !=
                fairness::constrained_equal_distribution_threshold(p).shares) {
                detail = "recursion and threshold disagree at trial " + std::to_string(trial);
                return false;
            }
        }
        detail = "1000 instances";
        return true;
    });

    criterion("auction-step-bounds", [](std::string& detail) {
        auto start = Clock::now();
        for (int half = 0; half < 2; ++half) {
            Rational eps = half == 0 ? Rational(1, 4) : Rational(1, 10);
            SplitMix64 rng(1000 + half);
            for (int trial = 0; trial < 100; ++trial) {
                AuctionRun run;
                run.scenario = testgen::random_couple_scenario(rng, eps);
                run.epsilon = eps;
                if (!market::validate_scenario(run.scenario).ok()) {
                    detail = "generator produced an invalid scenario";
                    return false;
                }
                if (run.scenario.total_money() > 10000) {
                    detail = "generator exceeded the money bound";
                    return false;
                }
                run.outcome = auction::run_auction(run.scenario);
                run.replay = auction::replay_trace(run.outcome.trace);
                if (!run.replay.ok) {
                    detail = "trace replay failed: " + run.replay.message;
                    return false;
                }
                for (int rounds : run.outcome.rounds_per_iteration)
                    if (rounds > 2 + static_cast<int>(run.scenario.buyers.size())) {
                        detail = "rounds exceed 2+|B|";
                        return false;
                    }
                BigInt m = run.scenario.total_money();
                if (m > 0 &&
                    Rational::pow(Rational(1) + eps,
                                  static_cast<unsigned>(run.outcome.iterations - 1)) >
                        Rational(m)) {
                    detail = "iterations exceed 1+log_(1+eps) m";
                    return false;
                }
                auction_corpus.push_back(std::move(run));
            }
        }
        auto seconds =
            std::chrono::duration_cast<std::chrono::seconds>(Clock::now() - start).count();
        if (seconds >= 60) {
            detail = "runtime budget of 60 s exceeded";
            return false;
        }
        detail = "200 runs";
        return true;
    });

    criterion("first-iteration-coupling-and-cash-bound", [](std::string& detail) {
        if (auction_corpus.size() != 200) {
            detail = "auction corpus missing";
            return false;
        }
        for (const auto& run : auction_corpus) {
            if (run.scenario.total_good() > 0 &&
                !run.replay.stats.all_coupled_after_first_iteration) {
                detail = "a Good item stayed uncoupled after iteration 1";
                return false;
            }
            if (run.replay.stats.saw_post_first_iteration_event &&
                run.replay.stats.max_cash_after_first_iteration >
                    Rational(run.scenario.total_money())) {
                detail = "participant cash exceeded m after iteration 1";
                return false;
            }
        }
        detail = "checked from 200 traces";
        return true;
    });

    criterion("approximation-guarantee", [](std::string& detail) {
        SplitMix64 rng(2024);
        int checked = 0;
        for (int trial = 0; trial < 50; ++trial) {
            Rational eps = trial % 2 ? Rational(1, 4) : Rational(1, 10);
            market::Scenario sc = testgen::random_desk_scenario(rng, eps);
            if (!market::validate_scenario(sc).ok()) {
                detail = "invalid desk scenario";
                return false;
            }
            auction::AuctionOutcome out = auction::run_auction(sc);
            Rational factor = Rational(1) - Rational(2) * eps;
            for (std::size_t p = 0; p < out.solution.baskets.size(); ++p) {
                market::OracleResult oracle =
                    market::optimal_feasible_basket(sc, p, out.solution.prices);
                if (!oracle.applicable) {
                    detail = "oracle refused a desk instance";
                    return false;
                }
                Rational actual = market::basket_utility(sc, p, out.solution.baskets[p]);
                if (actual < factor * oracle.best_utility) {
                    detail = "basket below (1-2eps) of optimum";
                    return false;
                }
                ++checked;
            }
        }
        detail = std::to_string(checked) + " baskets vs the exhaustive oracle";
        return true;
    });

    criterion("terminal-price-symmetry", [](std::string& detail) {
        if (auction_corpus.empty()) {
            detail = "auction corpus missing";
            return false;
        }
        for (const auto& run : auction_corpus)
            if (run.outcome.terminal_prices.good != run.outcome.terminal_prices.right) {
                detail = "pi_G != pi_R at termination";
                return false;
            }
        detail = "200 runs, exact";
        return true;
    });

    criterion("sequence-frustration-bound", [](std::string& detail) {
        SplitMix64 rng(3001);
        int episodes = 0, violations = 0;
        Rational worst(0);
        for (int trial = 0; trial < 100; ++trial) {
            market::Scenario sc = testgen::random_episode_scenario(rng, Rational(1, 10), 5);
            if (!market::validate_scenario(sc).ok()) {
                detail = "invalid episode scenario";
                return false;
            }
            sequence::EpisodeResult episode = sequence::run_episode(sc);
            if (episode.aborted) {
                detail = "episode aborted: " + episode.abort_reason;
                return false;
            }
            ++episodes;
            for (std::size_t mi = 1; mi < episode.markets.size(); ++mi)
                for (std::size_t b = 0; b < sc.buyers.size(); ++b) {
                    auto f = episode.markets[mi].outcome.frustrations[b];
                    if (!f) continue;
                    if (*f > worst) worst = *f;
                    if (*f > Rational(1, 2)) ++violations;
                }
        }
        detail = std::to_string(episodes) + " episodes, " + std::to_string(violations) +
                 " frustration values above 1/2 in markets 2..5, worst " + worst.str() +
                 " — the exact per-market bound does not hold for the (1+eps)-ladder mechanism";
        return violations == 0;
    });

    criterion("seller-market-conservation-and-discipline", [](std::string& detail) {
        for (int batch = 0; batch < 2; ++batch) {
            seller::EpisodeConfig cfg;
            cfg.markets = 10;
            cfg.buyers = {{"b1", Rational(1), Rational(1, 2)},
                          {"b2", Rational(5, 4), Rational(1, 2)},
                          {"b3", Rational(3, 2), Rational(1, 2)},
                          {"b4", Rational(1, 4), Rational(5, 2)}};
            cfg.sellers = {{"s1"}, {"s2"}, {"s3"}, {"s4"}};
            cfg.strategy = batch == 0 ? "truthful" : "hillclimb";
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                cfg.rng_seed = seed;
                seller::SellerEpisodeResult a = seller::run_seller_episode(cfg);
                seller::SellerEpisodeResult b = seller::run_seller_episode(cfg);

                Rational injected_money(0), injected_good(0), consumed(0), seller_cash(0);
                for (std::size_t m = 0; m < a.markets.size(); ++m) {
                    const auto& rec = a.markets[m];
                    // determinism
                    const auto& rec_b = b.markets[m];
                    if (rec.trades.size() != rec_b.trades.size()) {
                        detail = "same seed, different trade count";
                        return false;
                    }
                    for (std::size_t t = 0; t < rec.trades.size(); ++t)
                        if (rec.trades[t].quantity != rec_b.trades[t].quantity ||
                            rec.trades[t].price != rec_b.trades[t].price ||
                            rec.trades[t].from != rec_b.trades[t].from ||
                            rec.trades[t].to != rec_b.trades[t].to) {
                            detail = "same seed, different trades";
                            return false;
                        }

                    for (const auto& buyer : cfg.buyers) injected_money += buyer.income;
                    for (const auto& g : rec.supply_injected) injected_good += g;
                    Rational buyer_cash(0), revenue(0);
                    for (const auto& x : rec.buyer_money_end) buyer_cash += x;
                    for (const auto& x : rec.seller_revenue) revenue += x;
                    seller_cash += revenue;
                    if (buyer_cash + seller_cash != injected_money) {
                        detail = "money not conserved";
                        return false;
                    }
                    Rational good_now(0);
                    for (const auto& s : rec.seller_stock_end) good_now += s;
                    for (const auto& g : rec.buyer_goods_end) good_now += g;
                    if (good_now + consumed != injected_good) {
                        detail = "good not conserved";
                        return false;
                    }
                    for (std::size_t bi = 0; bi < cfg.buyers.size(); ++bi)
                        consumed += std::min(rec.declared_demands[bi], rec.buyer_goods_end[bi]);

                    for (std::size_t bi = 0; bi < cfg.buyers.size(); ++bi)
                        if (rec.goods_purchased[bi] > rec.issued_rights[bi] +
                                                          rec.rights_bought[bi] -
                                                          rec.rights_sold[bi]) {
                            detail = "rights discipline violated";
                            return false;
                        }

                    Rational last_good(-1), last_right(-1);
                    for (const auto& t : rec.trades) {
                        Rational& last =
                            t.commodity == market::Commodity::Good ? last_good : last_right;
                        if (t.price < last) {
                            detail = "cheapest-first order violated";
                            return false;
                        }
                        last = t.price;
                    }
                }
            }
        }
        detail = "200 episodes, both baseline strategies, exact";
        return true;
    });

    criterion("table-1-configuration-fidelity", [](std::string& detail) {
        io::LoadedScenario loaded =
            io::load_scenario_file(std::string(CDSIM_SCENARIO_DIR) + "/table1.scn");
        if (!std::holds_alternative<seller::EpisodeConfig>(loaded)) {
            detail = "table1.scn is not a seller configuration";
            return false;
        }
        const auto& cfg = std::get<seller::EpisodeConfig>(loaded);
        bool ok = cfg.markets == 10 && cfg.buyers.size() == 4 && cfg.sellers.size() == 4 &&
                  cfg.buyers[0].income == Rational(1) && cfg.buyers[1].income == Rational(5, 4) &&
                  cfg.buyers[2].income == Rational(6, 4) &&
                  cfg.buyers[3].income == Rational(1, 4) &&
                  cfg.buyers[0].demand == Rational(1, 2) &&
                  cfg.buyers[1].demand == Rational(1, 2) &&
                  cfg.buyers[2].demand == Rational(1, 2) &&
                  cfg.buyers[3].demand == Rational(5, 2) &&
                  cfg.constants.store == Rational(-1, 2) &&
                  cfg.constants.end_supply == Rational(1, 10) &&
                  cfg.constants.in_stock == Rational(2) &&
                  cfg.constants.missing == Rational(-1) &&
                  cfg.constants.money == Rational(1, 10) &&
                  cfg.supply_base == Rational(1, 4) && cfg.supply_variance == Rational(1, 40);
        if (!ok) {
            detail = "bundled configuration deviates from the published values";
            return false;
        }
        // report the passive buyer's frustration series for inspection
        seller::SellerEpisodeResult result = seller::run_seller_episode(cfg);
        std::string series;
        for (const auto& m : result.markets) {
            auto f = m.frustrations[3];
            series += (series.empty() ? "" : " ") + (f ? f->decimal(3) : "na");
        }
        std::cout << "  passive buyer (b4) frustration by market: " << series << "\n";
        detail = "golden config verified";
        return true;
    });

    criterion("desk-trace-golden", [](std::string& detail) {
        io::LoadedScenario loaded =
            io::load_scenario_file(std::string(CDSIM_SCENARIO_DIR) + "/couple_desk.scn");
        const auto& sc = std::get<market::Scenario>(loaded);
        auction::AuctionOutcome out = auction::run_auction(sc);
        if (out.terminal_prices.couple != Rational(25, 8)) {
            detail = "terminal pi_C is " + out.terminal_prices.couple.str() + ", expected 25/8";
            return false;
        }
        if (out.couples_held[0] != 1) {
            detail = "buyer does not hold exactly one Couple";
            return false;
        }
        std::string expected = fixture_text("couple_desk_trace.txt");
        if (expected.empty() || out.trace.serialize() != expected) {
            detail = "trace deviates from the hand-derived fixture";
            return false;
        }
        detail = "pi_C = 25/8, one Couple, fixture matched byte for byte";
        return true;
    });

    std::cout << "===================\n"
              << (failures == 0 ? "all criteria passed"
                                : std::to_string(failures) + " criterion(s) failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
