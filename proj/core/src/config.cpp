#include "svt/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace svt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + key + ": '" + value + "'");
    }
}

Surrogate parse_surrogate(const std::string& value) {
    if (value == "atan") return Surrogate::Atan;
    if (value == "rectangular") return Surrogate::Rectangular;
    throw ConfigError("unknown surrogate: " + value);
}

void apply_neuron(NeuronConfig& n, const std::string& key, const std::string& value) {
    if (key == "beta") n.beta = parse_double(key, value);
    else if (key == "u_th") n.u_th = parse_double(key, value);
    else if (key == "s") n.s = parse_double(key, value);
    else if (key == "levels") n.levels = static_cast<int>(parse_uint(key, value));
    else if (key == "surrogate") n.surrogate = parse_surrogate(value);
    else if (key == "alpha") n.alpha = parse_double(key, value);
    else throw ConfigError("unknown key neuron." + key);
}

} // namespace

WorkbenchConfig WorkbenchConfig::parse(const std::string& text) {
    WorkbenchConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("bad section header at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            if (section != "neuron" && section != "attention" && section != "backbone" &&
                section != "cost" && section != "training") {
                throw ConfigError("unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key outside a section: " + key);

        if (section == "neuron") {
            apply_neuron(cfg.neuron, key, value);
        } else if (section == "attention") {
            if (key == "variant") cfg.attention.variant = attention_variant_from_string(value);
            else if (key == "score") cfg.attention.score = score_kind_from_string(value);
            else if (key == "T") cfg.attention.t = parse_uint(key, value);
            else if (key == "N") cfg.attention.n = parse_uint(key, value);
            else if (key == "D") cfg.attention.d = parse_uint(key, value);
            else if (key == "M") cfg.attention.heads = parse_uint(key, value);
            else if (key == "score_scale") cfg.attention.score_scale = parse_double(key, value);
            else throw ConfigError("unknown key attention." + key);
        } else if (section == "backbone") {
            if (key == "base_channels") cfg.backbone.base_channels = parse_uint(key, value);
            else if (key == "in_channels") cfg.backbone.in_channels = parse_uint(key, value);
            else if (key == "T") cfg.backbone.t = parse_uint(key, value);
            else if (key == "H") cfg.backbone.height = parse_uint(key, value);
            else if (key == "W") cfg.backbone.width = parse_uint(key, value);
            else if (key == "heads") cfg.backbone.heads = parse_uint(key, value);
            else if (key == "mlp_ratio") cfg.backbone.mlp_ratio = parse_uint(key, value);
            else if (key == "variant") cfg.backbone.attention_variant = attention_variant_from_string(value);
            else if (key == "score") cfg.backbone.score = score_kind_from_string(value);
            else if (key == "seed") cfg.backbone.seed = parse_uint(key, value);
            else throw ConfigError("unknown key backbone." + key);
        } else if (section == "cost") {
            if (key == "e_mac_pj") cfg.cost.e_mac_pj = parse_double(key, value);
            else if (key == "e_ac_pj") cfg.cost.e_ac_pj = parse_double(key, value);
            else throw ConfigError("unknown key cost." + key);
        } else if (section == "training") {
            if (key == "epochs") cfg.training.epochs = parse_uint(key, value);
            else if (key == "seed") cfg.training.seed = parse_uint(key, value);
            else if (key == "train_size") cfg.training.options.train_size = parse_uint(key, value);
            else if (key == "test_size") cfg.training.options.test_size = parse_uint(key, value);
            else if (key == "batch_size") cfg.training.options.batch_size = parse_uint(key, value);
            else if (key == "lr") cfg.training.options.lr = parse_double(key, value);
            else if (key == "momentum") cfg.training.options.momentum = parse_double(key, value);
            else if (key == "channels") cfg.training.options.channels = parse_uint(key, value);
            else throw ConfigError("unknown key training." + key);
        }
    }
    cfg.neuron.validate();
    cfg.backbone.neuron = cfg.neuron;
    cfg.attention.neuron = cfg.neuron;
    return cfg;
}

WorkbenchConfig WorkbenchConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

} // namespace svt
