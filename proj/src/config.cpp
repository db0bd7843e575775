#include "dicot/config.hpp"

#include <fstream>
#include <sstream>

#include "dicot/errors.hpp"

namespace dicot {

void RunConfig::validate() const {
    encoder.validate();
    partition.validate();
    loss.validate();
    optimizer.validate();
    if (seeds.empty()) throw ConfigError("seeds list must not be empty");
}

int64_t parse_int(const std::string& text, const std::string& what) {
    try {
        size_t used = 0;
        const int64_t v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": cannot parse integer '" + text + "'");
    }
}

double parse_real(const std::string& text, const std::string& what) {
    try {
        size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": cannot parse number '" + text + "'");
    }
}

std::vector<int64_t> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const size_t b = item.find_first_not_of(" \t");
        if (b == std::string::npos) throw ConfigError(what + ": empty list element");
        const size_t e = item.find_last_not_of(" \t");
        out.push_back(parse_int(item.substr(b, e - b + 1), what));
    }
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

PositiveMode parse_positive_mode(const std::string& text) {
    if (text == "preceding") return PositiveMode::Preceding;
    if (text == "next") return PositiveMode::Next;
    if (text == "bidirectional") return PositiveMode::Bidirectional;
    if (text == "shuffled") return PositiveMode::Shuffled;
    throw ConfigError("unknown positive_mode '" + text +
                      "' (expected preceding|next|bidirectional|shuffled)");
}

std::string positive_mode_name(PositiveMode mode) {
    switch (mode) {
        case PositiveMode::Preceding: return "preceding";
        case PositiveMode::Next: return "next";
        case PositiveMode::Bidirectional: return "bidirectional";
        case PositiveMode::Shuffled: return "shuffled";
    }
    return "preceding";
}

void apply_config_key(RunConfig& config, const std::string& key, const std::string& value) {
    auto ints = [&](const std::string& what) { return parse_int_list(value, what); };
    if (key == "channels") {
        config.encoder.channels.clear();
        for (int64_t v : ints(key)) config.encoder.channels.push_back(static_cast<int>(v));
    } else if (key == "kernel_sizes") {
        config.encoder.kernel_sizes.clear();
        for (int64_t v : ints(key)) config.encoder.kernel_sizes.push_back(static_cast<int>(v));
    } else if (key == "embed_dim") {
        config.encoder.embed_dim = static_cast<int>(parse_int(value, key));
    } else if (key == "in_channels") {
        config.encoder.in_channels = static_cast<int>(parse_int(value, key));
    } else if (key == "projection") {
        if (value == "none")
            config.encoder.projection.reset();
        else if (value == "nonlinear") {
            if (!config.encoder.projection) config.encoder.projection = ProjectionHead{};
        } else
            throw ConfigError("projection must be none|nonlinear, got '" + value + "'");
    } else if (key == "projection_hidden") {
        if (!config.encoder.projection) config.encoder.projection = ProjectionHead{};
        config.encoder.projection->hidden_dim = static_cast<int>(parse_int(value, key));
    } else if (key == "rho") {
        config.partition.rho = parse_real(value, key);
    } else if (key == "split_mode") {
        if (value == "uniform")
            config.partition.mode = SplitMode::Uniform;
        else if (value == "fixed")
            config.partition.mode = SplitMode::Fixed;
        else
            throw ConfigError("split_mode must be uniform|fixed, got '" + value + "'");
    } else if (key == "k_fixed") {
        config.partition.k_fixed = static_cast<int>(parse_int(value, key));
    } else if (key == "k_min") {
        config.partition.k_min = static_cast<int>(parse_int(value, key));
    } else if (key == "k_max") {
        config.partition.k_max = static_cast<int>(parse_int(value, key));
    } else if (key == "tau") {
        config.loss.tau = parse_real(value, key);
    } else if (key == "positive_mode") {
        config.loss.positive_mode = parse_positive_mode(value);
    } else if (key == "base_lr") {
        config.optimizer.base_lr = parse_real(value, key);
    } else if (key == "weight_decay") {
        config.optimizer.weight_decay = parse_real(value, key);
    } else if (key == "beta1") {
        config.optimizer.beta1 = parse_real(value, key);
    } else if (key == "beta2") {
        config.optimizer.beta2 = parse_real(value, key);
    } else if (key == "eps") {
        config.optimizer.eps = parse_real(value, key);
    } else if (key == "warmup_frac") {
        config.optimizer.warmup_frac = parse_real(value, key);
    } else if (key == "total_iters") {
        config.optimizer.total_iters = parse_int(value, key);
    } else if (key == "batch_size") {
        config.optimizer.batch_size = parse_int(value, key);
    } else if (key == "seed") {
        config.optimizer.seed = static_cast<uint64_t>(parse_int(value, key));
    } else if (key == "seeds") {
        config.seeds.clear();
        for (int64_t v : ints(key)) config.seeds.push_back(static_cast<uint64_t>(v));
    } else {
        throw ConfigError("unknown config key '" + key + "' (see --help config)");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    RunConfig config;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const size_t x = s.find_first_not_of(" \t\r");
            if (x == std::string::npos) return std::string();
            const size_t y = s.find_last_not_of(" \t\r");
            return s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
        apply_config_key(config, key, value);
    }
    return config;
}

std::string config_help() {
    return
        "Config file keys (key = value, '#' comments), defaults in parentheses:\n"
        "  channels          conv output channels, comma list (32,64,128)\n"
        "  kernel_sizes      conv kernel widths, comma list (8,5,3)\n"
        "  embed_dim         embedding dimension F (64)\n"
        "  in_channels       input channels; overridden by the dataset (1)\n"
        "  projection        none|nonlinear (none)\n"
        "  projection_hidden hidden width of the nonlinear head (64)\n"
        "  rho               sub-block overlap ratio in [0,1) (0.5)\n"
        "  split_mode        uniform|fixed (uniform)\n"
        "  k_fixed           block count for fixed mode (10)\n"
        "  k_min             lower bound of uniform k draw (2)\n"
        "  k_max             upper bound of uniform k draw (10)\n"
        "  tau               softmax temperature (0.07)\n"
        "  positive_mode     preceding|next|bidirectional|shuffled (preceding)\n"
        "  base_lr           peak learning rate (3e-4)\n"
        "  weight_decay      decoupled weight decay (3e-4)\n"
        "  beta1             first-moment decay (0.9)\n"
        "  beta2             second-moment decay (0.99)\n"
        "  eps               optimizer epsilon (1e-8)\n"
        "  warmup_frac       linear warmup fraction (0.10)\n"
        "  total_iters       training iterations (1500)\n"
        "  batch_size        windows per iteration (128)\n"
        "  seed              training seed (1)\n"
        "  seeds             evaluation seeds, comma list (1,2,3,4,5)\n";
}

}  // namespace dicot
