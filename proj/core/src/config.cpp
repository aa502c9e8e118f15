#include "hfq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hfq {

using nlohmann::json;

HfqConfig HfqConfig::desk() { return HfqConfig{}; }

HfqConfig HfqConfig::full_scale() {
    HfqConfig cfg;
    cfg.d_model = 1280;
    cfg.num_stages = 3;
    cfg.queries_per_stage = 80;
    cfg.compressed_tokens = 50;
    cfg.heads = 8;
    return cfg;
}

void HfqConfig::validate() const {
    if (d_model < 2 || d_model % 2 != 0) {
        throw ConfigError("d_model must be even and >= 2, got " + std::to_string(d_model));
    }
    if (num_stages < 1 || num_stages > 3) {
        throw ConfigError("num_stages must be 1, 2, or 3, got " + std::to_string(num_stages));
    }
    if (queries_per_stage < 1) {
        throw ConfigError("queries_per_stage must be >= 1");
    }
    if (compressed_tokens < 1) {
        throw ConfigError("compressed_tokens must be >= 1");
    }
    if (attention_mode == AttentionMode::literal_eq1) {
        if (heads != 1) {
            throw ConfigError("literal_eq1 attention is single-head; set heads to 1");
        }
    } else if (heads < 1 || d_model % heads != 0) {
        throw ConfigError("heads must divide d_model: d_model=" + std::to_string(d_model) +
                          ", heads=" + std::to_string(heads));
    }
    if (downsample_kernel < 1 || downsample_kernel % 2 == 0) {
        throw ConfigError("downsample_kernel must be odd and >= 1");
    }
    if (downsample_stride < 1) {
        throw ConfigError("downsample_stride must be >= 1");
    }
    if (window_seconds <= 0 || frame_rate_hz <= 0) {
        throw ConfigError("window_seconds and frame_rate_hz must be positive");
    }
}

std::string HfqConfig::to_json() const {
    json j;
    j["d_model"] = d_model;
    j["num_stages"] = num_stages;
    j["queries_per_stage"] = queries_per_stage;
    j["compressed_tokens"] = compressed_tokens;
    j["heads"] = heads;
    j["downsample_kernel"] = downsample_kernel;
    j["downsample_stride"] = downsample_stride;
    j["window_seconds"] = window_seconds;
    j["frame_rate_hz"] = frame_rate_hz;
    j["attention_mode"] = to_string(attention_mode);
    return j.dump(2);
}

HfqConfig HfqConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "d_model",           "num_stages",     "queries_per_stage", "compressed_tokens",
        "heads",             "downsample_kernel", "downsample_stride", "window_seconds",
        "frame_rate_hz",     "attention_mode"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown config key \"" + it.key() + "\"");
        }
    }
    HfqConfig cfg;
    try {
        if (j.contains("d_model")) cfg.d_model = j["d_model"].get<int>();
        if (j.contains("num_stages")) cfg.num_stages = j["num_stages"].get<int>();
        if (j.contains("queries_per_stage")) cfg.queries_per_stage = j["queries_per_stage"].get<int>();
        if (j.contains("compressed_tokens")) cfg.compressed_tokens = j["compressed_tokens"].get<int>();
        if (j.contains("heads")) cfg.heads = j["heads"].get<int>();
        if (j.contains("downsample_kernel")) cfg.downsample_kernel = j["downsample_kernel"].get<int>();
        if (j.contains("downsample_stride")) cfg.downsample_stride = j["downsample_stride"].get<int>();
        if (j.contains("window_seconds")) cfg.window_seconds = j["window_seconds"].get<double>();
        if (j.contains("frame_rate_hz")) cfg.frame_rate_hz = j["frame_rate_hz"].get<double>();
        if (j.contains("attention_mode")) {
            cfg.attention_mode = attention_mode_from_string(j["attention_mode"].get<std::string>());
        }
    } catch (const json::type_error& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

HfqConfig HfqConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void HfqConfig::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write config file: " + path);
    }
    out << to_json() << "\n";
}

} // namespace hfq
