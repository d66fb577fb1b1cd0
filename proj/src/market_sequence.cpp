#include "cdsim/market_sequence.hpp"

#include "cdsim/error.hpp"
#include "cdsim/fairness.hpp"

namespace cdsim::sequence {

Rational EffectiveBuyer::effective_willingness(const BigInt& x) const {
    if (x <= 0) return Rational(0);
    return market::willingness_to_pay(*spec, x) + earmark;
}

void update_willingness(EffectiveBuyer& b, const Rational& proceeds) {
    if (proceeds.is_negative())
        throw Error(ErrorKind::InvalidArgument, "negative Right-sale proceeds");
    b.earmark += proceeds;
}

EpisodeResult run_episode(const market::Scenario& s, int markets_override) {
    const int total_markets = markets_override > 0 ? markets_override : s.markets;
    if (total_markets < 1)
        throw Error(ErrorKind::InvalidArgument, "episode needs at least one Market");

    EpisodeResult result;
    std::vector<Rational> earmarks(s.buyers.size(), Rational(0));

    for (int t = 1; t <= total_markets; ++t) {
        // Rights are recalculated before each Market from (supply, demands)
        // alone, never from the Market that just ended.
        fairness::ClaimsProblem claims;
        claims.supply = Rational(s.total_good());
        claims.demands.reserve(s.buyers.size());
        for (const auto& b : s.buyers) claims.demands.push_back(Rational(b.demand));

        market::Scenario stage = s;
        try {
            fairness::Allocation fractional = fairness::distribute(s.rights_rule, claims);
            std::vector<BigInt> issued =
                fairness::round_indivisible(fractional, s.priority_order());
            for (std::size_t i = 0; i < stage.buyers.size(); ++i)
                stage.buyers[i].rights = issued[i];

            MarketRecord record;
            record.index = t;
            record.issued_rights = issued;
            record.earmark_before = earmarks;
            record.outcome = auction::run_auction(stage, earmarks);

            // Willingness development: earmarks carry unspent funds plus the
            // proceeds of net Right sales in this Market.
            for (std::size_t i = 0; i < stage.buyers.size(); ++i) {
                EffectiveBuyer eb{&s.buyers[i], record.outcome.earmark_left[i]};
                update_willingness(eb, record.outcome.right_sale_proceeds[i]);
                earmarks[i] = eb.earmark;
            }
            result.markets.push_back(std::move(record));
        } catch (const Error& e) {
            result.aborted = true;
            result.abort_reason = "market " + std::to_string(t) + ": " + e.what();
            break;
        }
    }
    result.final_earmarks = earmarks;
    return result;
}

} // namespace cdsim::sequence
