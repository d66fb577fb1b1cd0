#include "cdsim.h"

#include "cdsim/error.hpp"
#include "cdsim/scenario_io.hpp"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

namespace {

thread_local std::string g_last_error;

void set_error(std::string message) { g_last_error = std::move(message); }

cdsim_status status_of(cdsim::ErrorKind kind) {
    switch (kind) {
        case cdsim::ErrorKind::InvalidArgument: return CDSIM_ERR_INVALID_ARGUMENT;
        case cdsim::ErrorKind::Parse: return CDSIM_ERR_PARSE;
        case cdsim::ErrorKind::Validation: return CDSIM_ERR_VALIDATION;
        case cdsim::ErrorKind::Runtime: return CDSIM_ERR_RUNTIME;
        case cdsim::ErrorKind::Io: return CDSIM_ERR_IO;
    }
    return CDSIM_ERR_RUNTIME;
}

template <typename Fn>
cdsim_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return CDSIM_OK;
    } catch (const cdsim::Error& e) {
        set_error(e.what());
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        set_error("out of memory");
        return CDSIM_ERR_RUNTIME;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CDSIM_ERR_RUNTIME;
    }
}

} // namespace

struct cdsim_scenario {
    cdsim::io::LoadedScenario loaded;
};

struct cdsim_options {
    cdsim::io::RunOverrides overrides;
};

struct cdsim_result {
    cdsim::io::RunOutput output;
};

extern "C" {

const char* cdsim_version(void) { return "1.0.0"; }

const char* cdsim_last_error(void) { return g_last_error.c_str(); }

cdsim_status cdsim_scenario_load_file(const char* path, cdsim_scenario** out) {
    if (!path || !out) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        auto* handle = new cdsim_scenario{cdsim::io::parse_scenario_file(path)};
        *out = handle;
    });
}

cdsim_status cdsim_scenario_parse(const char* text, cdsim_scenario** out) {
    if (!text || !out) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        auto* handle = new cdsim_scenario{cdsim::io::parse_scenario_text(text)};
        *out = handle;
    });
}

cdsim_status cdsim_scenario_validate(const cdsim_scenario* scenario) {
    if (!scenario) {
        set_error("null scenario");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] { cdsim::io::validate_loaded(scenario->loaded); });
}

cdsim_status cdsim_scenario_save(const cdsim_scenario* scenario, char** out_text) {
    if (!scenario || !out_text) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    *out_text = nullptr;
    return guarded([&] {
        std::string text = cdsim::io::save_scenario(scenario->loaded);
        char* buffer = new char[text.size() + 1];
        std::memcpy(buffer, text.c_str(), text.size() + 1);
        *out_text = buffer;
    });
}

const char* cdsim_scenario_mechanism(const cdsim_scenario* scenario) {
    if (!scenario) return nullptr;
    return std::holds_alternative<cdsim::market::Scenario>(scenario->loaded) ? "couple" : "seller";
}

void cdsim_scenario_free(cdsim_scenario* scenario) { delete scenario; }

cdsim_options* cdsim_options_new(void) { return new (std::nothrow) cdsim_options(); }

cdsim_status cdsim_options_set_seed(cdsim_options* options, uint64_t seed) {
    if (!options) {
        set_error("null options");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    options->overrides.seed = seed;
    return CDSIM_OK;
}

cdsim_status cdsim_options_set_markets(cdsim_options* options, int markets) {
    if (!options) {
        set_error("null options");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    if (markets < 1) {
        set_error("markets override must be at least 1");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    options->overrides.markets = markets;
    return CDSIM_OK;
}

cdsim_status cdsim_options_set_epsilon(cdsim_options* options, const char* rational) {
    if (!options || !rational) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    auto value = cdsim::Rational::parse(rational);
    if (!value) {
        set_error(std::string("not a rational: ") + rational);
        return CDSIM_ERR_PARSE;
    }
    options->overrides.epsilon = *value;
    return CDSIM_OK;
}

cdsim_status cdsim_options_set_mechanism(cdsim_options* options, const char* mechanism) {
    if (!options || !mechanism) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    std::string m = mechanism;
    if (m != "couple" && m != "seller") {
        set_error("mechanism must be 'couple' or 'seller'");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    options->overrides.mechanism = m;
    return CDSIM_OK;
}

void cdsim_options_free(cdsim_options* options) { delete options; }

cdsim_status cdsim_run(const cdsim_scenario* scenario, const cdsim_options* options,
                       cdsim_result** out) {
    if (!scenario || !out) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        cdsim::io::RunOverrides overrides;
        if (options) overrides = options->overrides;
        auto* handle = new cdsim_result{cdsim::io::run_loaded(scenario->loaded, overrides)};
        *out = handle;
    });
}

const char* cdsim_result_table(const cdsim_result* result, cdsim_table table) {
    if (!result) return nullptr;
    switch (table) {
        case CDSIM_TABLE_PRICES: return result->output.prices_csv.c_str();
        case CDSIM_TABLE_FRUSTRATION: return result->output.frustration_csv.c_str();
        case CDSIM_TABLE_TRADES: return result->output.trades_csv.c_str();
        case CDSIM_TABLE_FINAL: return result->output.final_csv.c_str();
    }
    return nullptr;
}

const char* cdsim_result_trace(const cdsim_result* result) {
    return result ? result->output.trace.c_str() : nullptr;
}

const char* cdsim_result_mechanism(const cdsim_result* result) {
    return result ? result->output.mechanism.c_str() : nullptr;
}

cdsim_status cdsim_result_write(const cdsim_result* result, const char* out_dir) {
    if (!result || !out_dir) {
        set_error("null argument");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] { cdsim::io::write_run_output(result->output, out_dir); });
}

void cdsim_result_free(cdsim_result* result) { delete result; }

cdsim_status cdsim_trace_replay_text(const char* text) {
    if (!text) {
        set_error("null trace");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        auto failure = cdsim::io::replay_trace_file_text(text);
        if (failure) throw cdsim::Error(cdsim::ErrorKind::Runtime, *failure);
    });
}

cdsim_status cdsim_trace_replay_file(const char* path) {
    if (!path) {
        set_error("null path");
        return CDSIM_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw cdsim::Error(cdsim::ErrorKind::Io, std::string("cannot open ") + path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        auto failure = cdsim::io::replay_trace_file_text(buffer.str());
        if (failure) throw cdsim::Error(cdsim::ErrorKind::Runtime, *failure);
    });
}

void cdsim_string_free(char* text) { delete[] text; }

} // extern "C"
