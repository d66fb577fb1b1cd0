#pragma once

// A critical episode as a sequence of Markets. Before each Market, Rights
// are re-issued by the configured fairness rule on (total Good, demands),
// independently of trading history; the Couple auction then runs; finally
// each buyer's willingness to pay is shifted by the money it earned from
// net Right sales (Money that stays in the system, usable only for
// Good/Right purchases in later Markets — carried as earmarked funds).

#include "cdsim/couple_auction.hpp"
#include "cdsim/market.hpp"
#include "cdsim/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cdsim::sequence {

// A buyer's effective willingness to pay: the scenario willingness shifted
// up by the earmarked carry. w'(z) = w(z) + earmark for z >= 1, w'(0) = 0.
struct EffectiveBuyer {
    const market::BuyerSpec* spec = nullptr;
    Rational earmark{0};

    Rational effective_willingness(const BigInt& x) const;
};

// Willingness development: add the Right-sale proceeds of the
// Market that just ended. Proceeds are zero for buyers who net-bought
// Rights; unspent carry persists.
void update_willingness(EffectiveBuyer& b, const Rational& proceeds);

struct MarketRecord {
    int index = 1;                        // t, 1-based
    std::vector<BigInt> issued_rights;    // per buyer, after indivisible rounding
    std::vector<Rational> earmark_before; // per buyer
    auction::AuctionOutcome outcome;
};

struct EpisodeResult {
    std::vector<MarketRecord> markets;
    std::vector<Rational> final_earmarks;
    bool aborted = false;
    std::string abort_reason;
};

// Runs `markets_override` Markets (scenario.markets when <= 0). Aborts with
// the partial series when a Market fails validation.
EpisodeResult run_episode(const market::Scenario& s, int markets_override = 0);

} // namespace cdsim::sequence
