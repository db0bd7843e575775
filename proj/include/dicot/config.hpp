#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dicot/encoder.hpp"
#include "dicot/objective.hpp"
#include "dicot/partition.hpp"
#include "dicot/trainer.hpp"

namespace dicot {

// Flat key-value run configuration. Defaults follow the recommended
// operating point: tau 0.07, rho 0.5, k in {2..10}, seeds {1..5}.
struct RunConfig {
    EncoderConfig encoder;
    PartitionParams partition;
    LossConfig loss;
    OptimizerConfig optimizer;
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5};

    void validate() const;
};

// One `key = value` assignment per line, `#` starts a comment, blank lines
// ignored. Unknown keys raise ConfigError.
RunConfig load_run_config(const std::string& path);

void apply_config_key(RunConfig& config, const std::string& key, const std::string& value);

std::string config_help();

// shared small parsers (ConfigError on garbage)
int64_t parse_int(const std::string& text, const std::string& what);
double parse_real(const std::string& text, const std::string& what);
std::vector<int64_t> parse_int_list(const std::string& text, const std::string& what);

PositiveMode parse_positive_mode(const std::string& text);
std::string positive_mode_name(PositiveMode mode);

}  // namespace dicot
