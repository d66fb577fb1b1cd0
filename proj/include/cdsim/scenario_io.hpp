#pragma once

// Scenario ingestion and result emission. Scenario files are strict,
// versioned JSON documents: unknown fields are rejected, every rational is
// a "p/q" or integer string, never a float. Results are emitted as four
// fixed-schema CSV tables plus the full trace; all formats are documented
// bit-exact in the README.

#include "cdsim/market.hpp"
#include "cdsim/market_sequence.hpp"
#include "cdsim/rational.hpp"
#include "cdsim/seller_market.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace cdsim::io {

using LoadedScenario = std::variant<market::Scenario, seller::EpisodeConfig>;

// Structural parse only; collects every structural problem into one
// Error(Parse). Semantic validation is separate so overrides can apply
// in between.
LoadedScenario parse_scenario_text(const std::string& text);
LoadedScenario parse_scenario_file(const std::string& path);

// Runs validate_scenario / validate_config; throws Error(Validation) with
// the complete violation list.
void validate_loaded(const LoadedScenario& loaded);

// Parse + validate.
LoadedScenario load_scenario_file(const std::string& path);

// Canonical JSON rendering; load(save(x)) == x for every valid scenario.
std::string save_scenario(const LoadedScenario& loaded);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> markets;
    std::optional<Rational> epsilon;      // couple mechanism only
    std::optional<std::string> mechanism; // must match the file's mechanism
};

struct RunOutput {
    std::string mechanism; // "couple" | "seller"
    std::string prices_csv;
    std::string frustration_csv;
    std::string trades_csv;
    std::string final_csv;
    std::string trace;
};

// Applies overrides, validates, dispatches to the configured mechanism and
// renders all tables. Deterministic for a fixed (scenario, overrides).
RunOutput run_loaded(const LoadedScenario& loaded, const RunOverrides& overrides);

// Writes prices.csv, frustration.csv, trades.csv, final.csv and trace.txt.
void write_run_output(const RunOutput& output, const std::string& out_dir);

// Table builders, exposed for tests.
std::string couple_prices_csv(const sequence::EpisodeResult& episode);
std::string couple_frustration_csv(const market::Scenario& s, const sequence::EpisodeResult& episode);
std::string couple_trades_csv(const sequence::EpisodeResult& episode);
std::string couple_final_csv(const market::Scenario& s, const sequence::EpisodeResult& episode);
std::string couple_trace(const sequence::EpisodeResult& episode);

std::string seller_prices_csv(const seller::SellerEpisodeResult& result);
std::string seller_frustration_csv(const seller::EpisodeConfig& cfg,
                                   const seller::SellerEpisodeResult& result);
std::string seller_trades_csv(const seller::SellerEpisodeResult& result);
std::string seller_final_csv(const seller::EpisodeConfig& cfg,
                             const seller::SellerEpisodeResult& result);
std::string seller_trace(const seller::EpisodeConfig& cfg,
                         const seller::SellerEpisodeResult& result);

// Replays every framed auction trace inside trace.txt content (couple
// mechanism only). Returns the first failure message, or nullopt when all
// segments verify.
std::optional<std::string> replay_trace_file_text(const std::string& text);

} // namespace cdsim::io
