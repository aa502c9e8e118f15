#include "hfq/cost_model.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hfq/errors.hpp"

namespace hfq {

AdapterProfile AdapterProfile::rate_based(std::string name, double tokens_per_sec) {
    if (tokens_per_sec <= 0) {
        throw ConfigError("adapter token rate must be positive");
    }
    AdapterProfile p;
    p.name = std::move(name);
    p.tokens_per_sec = tokens_per_sec;
    return p;
}

AdapterProfile AdapterProfile::windowed_profile(std::string name, int tokens_per_window,
                                                double window_seconds) {
    if (tokens_per_window <= 0 || window_seconds <= 0) {
        throw ConfigError("windowed adapter needs positive tokens and window length");
    }
    AdapterProfile p;
    p.name = std::move(name);
    p.windowed = true;
    p.tokens_per_window = tokens_per_window;
    p.window_seconds = window_seconds;
    p.tokens_per_sec = tokens_per_window / window_seconds;
    return p;
}

const std::vector<AdapterProfile>& builtin_adapters() {
    static const std::vector<AdapterProfile> profiles = {
        AdapterProfile::rate_based("avgpool", 25.0),
        AdapterProfile::rate_based("sq-former", 2.67),
        AdapterProfile::rate_based("wq-former", 2.93),
        AdapterProfile::windowed_profile("hfq", 50, 30.0),
        AdapterProfile::rate_based("frame-50hz", 50.0),
    };
    return profiles;
}

const AdapterProfile& adapter_by_name(const std::string& name) {
    for (const auto& p : builtin_adapters()) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const auto& p : builtin_adapters()) {
        known += known.empty() ? p.name : ", " + p.name;
    }
    throw ConfigError("unknown adapter \"" + name + "\" (known: " + known + ")");
}

long long speech_token_count(const AdapterProfile& adapter, double duration_sec) {
    if (duration_sec <= 0) {
        throw DomainError("duration must be positive");
    }
    if (adapter.windowed) {
        const double windows = std::ceil(duration_sec / adapter.window_seconds);
        return static_cast<long long>(windows) * adapter.tokens_per_window;
    }
    return static_cast<long long>(std::llround(adapter.tokens_per_sec * duration_sec));
}

LlmProfile LlmProfile::qwen3_4b_like() {
    LlmProfile p;
    p.name = "qwen3-4b-like";
    p.params = 4.06e9;
    p.layers = 36;
    p.kv_dim_per_layer = 1024;
    p.bytes_per_elem = 2;
    return p;
}

const LlmProfile& llm_by_name(const std::string& name) {
    static const LlmProfile qwen = LlmProfile::qwen3_4b_like();
    if (name == qwen.name) return qwen;
    throw ConfigError("unknown LLM profile \"" + name + "\" (known: " + qwen.name + ")");
}

double flops_estimate(const LlmProfile& llm, long long total_tokens) {
    if (total_tokens < 0) {
        throw DomainError("token count must be nonnegative");
    }
    return llm.params * double(total_tokens);
}

double kv_cache_bytes(const LlmProfile& llm, long long total_tokens) {
    if (total_tokens < 0) {
        throw DomainError("token count must be nonnegative");
    }
    return 2.0 * llm.layers * llm.kv_dim_per_layer * double(total_tokens) * llm.bytes_per_elem;
}

double reduction_percent(const AdapterProfile& a, const AdapterProfile& b) {
    return 100.0 * (1.0 - a.tokens_per_sec / b.tokens_per_sec);
}

double efficiency_score(double delta_wer_points, double delta_flops_tera) {
    if (delta_flops_tera <= 0) {
        throw DomainError("efficiency score needs a positive compute delta");
    }
    return delta_wer_points / delta_flops_tera;
}

std::string CostReport::to_json() const {
    nlohmann::json j;
    j["adapter"] = adapter;
    j["llm"] = llm;
    j["duration_sec"] = duration_sec;
    j["speech_tokens"] = speech_tokens;
    j["prompt_tokens"] = prompt_tokens;
    j["flops_estimate"] = flops_estimate;
    j["kv_cache_bytes"] = kv_cache_bytes;
    return j.dump(2);
}

CostReport cost_report(const AdapterProfile& adapter, const LlmProfile& llm, double duration_sec,
                       long long prompt_tokens) {
    if (prompt_tokens < 0) {
        throw DomainError("prompt token count must be nonnegative");
    }
    CostReport r;
    r.adapter = adapter.name;
    r.llm = llm.name;
    r.duration_sec = duration_sec;
    r.speech_tokens = speech_token_count(adapter, duration_sec);
    r.prompt_tokens = prompt_tokens;
    const long long total = r.speech_tokens + prompt_tokens;
    r.flops_estimate = flops_estimate(llm, total);
    r.kv_cache_bytes = kv_cache_bytes(llm, total);
    return r;
}

std::vector<SweepRow> scaling_sweep(const LlmProfile& llm,
                                    const std::vector<AdapterProfile>& adapters,
                                    const std::vector<double>& durations) {
    if (durations.empty()) {
        throw DomainError("sweep needs at least one duration");
    }
    for (double d : durations) {
        if (d <= 0) {
            throw DomainError("sweep durations must be positive");
        }
    }
    std::vector<SweepRow> rows;
    rows.reserve(adapters.size() * durations.size());
    for (const auto& adapter : adapters) {
        for (double d : durations) {
            SweepRow row;
            row.duration_sec = d;
            row.adapter = adapter.name;
            row.tokens = speech_token_count(adapter, d);
            row.flops = flops_estimate(llm, row.tokens);
            row.kv_bytes = kv_cache_bytes(llm, row.tokens);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "duration_sec,adapter,tokens,flops,kv_bytes\n";
    out.precision(10);
    for (const auto& r : rows) {
        out << r.duration_sec << "," << r.adapter << "," << r.tokens << "," << r.flops << ","
            << r.kv_bytes << "\n";
    }
    return out.str();
}

} // namespace hfq
