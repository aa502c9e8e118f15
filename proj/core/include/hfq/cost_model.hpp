#pragma once

#include <string>
#include <vector>

namespace hfq {

// ---------------------------------------------------------------------------
// Adapter token laws
// ---------------------------------------------------------------------------

// How many representation vectors an adapter hands the LLM per second of
// audio. Windowed adapters emit a fixed token count per fixed-length window
// (ceiling on the window count); the rest follow rate * duration.
struct AdapterProfile {
    std::string name;
    double tokens_per_sec = 0.0;
    bool windowed = false;
    int tokens_per_window = 0;
    double window_seconds = 0.0;

    static AdapterProfile rate_based(std::string name, double tokens_per_sec);
    static AdapterProfile windowed_profile(std::string name, int tokens_per_window,
                                           double window_seconds);
};

// Built-ins, resolvable by name: "avgpool" 25/s, "sq-former" 2.67/s,
// "wq-former" 2.93/s, "hfq" 50 per 30 s window, "frame-50hz" 50/s.
const std::vector<AdapterProfile>& builtin_adapters();
const AdapterProfile& adapter_by_name(const std::string& name);

long long speech_token_count(const AdapterProfile& adapter, double duration_sec);

// ---------------------------------------------------------------------------
// LLM cost laws
// ---------------------------------------------------------------------------

struct LlmProfile {
    std::string name;
    double params = 0.0;       // total parameter count
    int layers = 0;            // assumption, not a published figure
    int kv_dim_per_layer = 0;  // assumption, not a published figure
    int bytes_per_elem = 2;

    // 4.06e9 parameters; layer count and KV width are documented assumptions.
    static LlmProfile qwen3_4b_like();
};

const LlmProfile& llm_by_name(const std::string& name);

// Forward-pass cost under the one-MAC-one-FLOP convention: params * tokens.
double flops_estimate(const LlmProfile& llm, long long total_tokens);

// 2 (K and V) * layers * kv_dim * tokens * bytes.
double kv_cache_bytes(const LlmProfile& llm, long long total_tokens);

// 100 * (1 - rate_a / rate_b): how much adapter a undercuts adapter b.
double reduction_percent(const AdapterProfile& a, const AdapterProfile& b);

// Quality gain per unit of extra compute; positive cost delta required.
double efficiency_score(double delta_wer_points, double delta_flops_tera);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CostReport {
    std::string adapter;
    std::string llm;
    double duration_sec = 0.0;
    long long speech_tokens = 0;
    long long prompt_tokens = 0;
    double flops_estimate = 0.0;
    double kv_cache_bytes = 0.0;

    std::string to_json() const;
};

CostReport cost_report(const AdapterProfile& adapter, const LlmProfile& llm, double duration_sec,
                       long long prompt_tokens = 0);

struct SweepRow {
    double duration_sec = 0.0;
    std::string adapter;
    long long tokens = 0;
    double flops = 0.0;
    double kv_bytes = 0.0;
};

// One row per (duration, adapter), durations ascending within each adapter.
std::vector<SweepRow> scaling_sweep(const LlmProfile& llm,
                                    const std::vector<AdapterProfile>& adapters,
                                    const std::vector<double>& durations);

// Header: duration_sec,adapter,tokens,flops,kv_bytes
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

} // namespace hfq
