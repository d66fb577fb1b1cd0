#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cdsim.h"

#include <string>

namespace {

std::string scenario_path(const char* name) {
    return std::string(CDSIM_SCENARIO_DIR) + "/" + name;
}

} // namespace

TEST_CASE("load, validate, run and read the tables through the C API") {
    cdsim_scenario* scenario = nullptr;
    REQUIRE(cdsim_scenario_load_file(scenario_path("couple_desk.scn").c_str(), &scenario) ==
            CDSIM_OK);
    REQUIRE(scenario != nullptr);
    CHECK(std::string(cdsim_scenario_mechanism(scenario)) == "couple");
    CHECK(cdsim_scenario_validate(scenario) == CDSIM_OK);

    cdsim_result* result = nullptr;
    REQUIRE(cdsim_run(scenario, nullptr, &result) == CDSIM_OK);
    REQUIRE(result != nullptr);
    CHECK(std::string(cdsim_result_mechanism(result)) == "couple");
    std::string prices = cdsim_result_table(result, CDSIM_TABLE_PRICES);
    CHECK(prices.find("25/8") != std::string::npos);
    CHECK(cdsim_result_table(result, CDSIM_TABLE_FRUSTRATION) != nullptr);
    CHECK(cdsim_result_table(result, CDSIM_TABLE_TRADES) != nullptr);
    CHECK(cdsim_result_table(result, CDSIM_TABLE_FINAL) != nullptr);
    CHECK(cdsim_result_table(result, static_cast<cdsim_table>(9)) == nullptr);

    // the emitted trace replays cleanly
    CHECK(cdsim_trace_replay_text(cdsim_result_trace(result)) == CDSIM_OK);

    cdsim_result_free(result);
    cdsim_scenario_free(scenario);
}

TEST_CASE("save round-trips through the C string") {
    cdsim_scenario* scenario = nullptr;
    REQUIRE(cdsim_scenario_load_file(scenario_path("table1.scn").c_str(), &scenario) == CDSIM_OK);
    char* text = nullptr;
    REQUIRE(cdsim_scenario_save(scenario, &text) == CDSIM_OK);
    REQUIRE(text != nullptr);

    cdsim_scenario* reparsed = nullptr;
    REQUIRE(cdsim_scenario_parse(text, &reparsed) == CDSIM_OK);
    char* text2 = nullptr;
    REQUIRE(cdsim_scenario_save(reparsed, &text2) == CDSIM_OK);
    CHECK(std::string(text) == std::string(text2));

    cdsim_string_free(text);
    cdsim_string_free(text2);
    cdsim_scenario_free(reparsed);
    cdsim_scenario_free(scenario);
}

TEST_CASE("status codes distinguish failure kinds") {
    cdsim_scenario* scenario = nullptr;
    CHECK(cdsim_scenario_load_file("/nonexistent/file.scn", &scenario) == CDSIM_ERR_IO);
    CHECK(scenario == nullptr);
    CHECK(std::string(cdsim_last_error()).find("cannot open") != std::string::npos);

    CHECK(cdsim_scenario_parse("{not json", &scenario) == CDSIM_ERR_PARSE);

    REQUIRE(cdsim_scenario_load_file(scenario_path("couple_desk.scn").c_str(), &scenario) ==
            CDSIM_OK);
    cdsim_options* options = cdsim_options_new();
    CHECK(cdsim_options_set_epsilon(options, "2") == CDSIM_OK);
    cdsim_result* result = nullptr;
    CHECK(cdsim_run(scenario, options, &result) == CDSIM_ERR_VALIDATION);
    CHECK(result == nullptr);
    CHECK(std::string(cdsim_last_error()).find("epsilon") != std::string::npos);

    CHECK(cdsim_options_set_epsilon(options, "zebra") == CDSIM_ERR_PARSE);
    CHECK(cdsim_options_set_mechanism(options, "barter") == CDSIM_ERR_INVALID_ARGUMENT);
    CHECK(cdsim_options_set_markets(options, 0) == CDSIM_ERR_INVALID_ARGUMENT);

    cdsim_options_free(options);
    cdsim_scenario_free(scenario);

    CHECK(cdsim_run(nullptr, nullptr, &result) == CDSIM_ERR_INVALID_ARGUMENT);
    CHECK(cdsim_trace_replay_text("garbage") == CDSIM_ERR_RUNTIME);
    CHECK(cdsim_version() != nullptr);
}

TEST_CASE("seed and market overrides reach the run") {
    cdsim_scenario* scenario = nullptr;
    REQUIRE(cdsim_scenario_load_file(scenario_path("table1.scn").c_str(), &scenario) == CDSIM_OK);
    cdsim_options* options = cdsim_options_new();
    cdsim_options_set_seed(options, 123);
    cdsim_options_set_markets(options, 3);

    cdsim_result* a = nullptr;
    cdsim_result* b = nullptr;
    REQUIRE(cdsim_run(scenario, options, &a) == CDSIM_OK);
    REQUIRE(cdsim_run(scenario, options, &b) == CDSIM_OK);
    CHECK(std::string(cdsim_result_table(a, CDSIM_TABLE_TRADES)) ==
          cdsim_result_table(b, CDSIM_TABLE_TRADES));
    // three markets -> last prices row starts with "3,"
    std::string prices = cdsim_result_table(a, CDSIM_TABLE_PRICES);
    CHECK(prices.find("\n3,") != std::string::npos);
    CHECK(prices.find("\n4,") == std::string::npos);

    cdsim_result_free(a);
    cdsim_result_free(b);
    cdsim_options_free(options);
    cdsim_scenario_free(scenario);
}
