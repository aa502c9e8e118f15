#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hfq/checkpoint.hpp"
#include "hfq/config.hpp"
#include "hfq/cost_model.hpp"
#include "hfq/feature_io.hpp"
#include "hfq/frontend.hpp"
#include "hfq/hfq_former.hpp"
#include "hfq/model_gradcheck.hpp"
#include "hfq/prompt.hpp"
#include "hfq/train.hpp"

namespace {

using namespace hfq;
using nlohmann::json;

std::uint64_t default_seed() {
    const char* env = std::getenv("HFQ_SEED");
    if (!env || !*env) return 0;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (env[used] != '\0') throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("HFQ_SEED must be an unsigned integer, got \"") + env + "\"");
    }
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write output file: " + tmp);
        }
        out << text;
        if (!out) {
            throw FormatError("write failed: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw FormatError("cannot move output into place: " + path);
    }
}

// Accepts either a bare compression-stack checkpoint or a full training
// checkpoint (stack weights stored under a "hfq." prefix). All-or-nothing:
// every stack tensor must resolve with its exact shape before anything loads.
void load_stack_weights(const std::string& path, const NamedParams& params) {
    auto entries = load_checkpoint(path);
    auto find = [&](const std::string& name) -> const Tensor* {
        for (const auto& [entry_name, tensor] : entries) {
            if (entry_name == name || entry_name == "hfq." + name) return &tensor;
        }
        return nullptr;
    };
    std::vector<const Tensor*> sources;
    sources.reserve(params.size());
    for (const auto& [name, tensor] : params) {
        const Tensor* src = find(name);
        if (!src) {
            throw SchemaError("checkpoint " + path + " is missing tensor \"" + name + "\"");
        }
        if (src->shape != tensor.shape) {
            throw SchemaError("checkpoint " + path + " tensor \"" + name + "\" has shape " +
                              src->shape_str() + ", expected " + tensor.shape_str());
        }
        sources.push_back(src);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        *params[i].second.data = *sources[i]->data;
    }
}

// Config file + per-field override flags shared by the model-facing commands.
// The merged result is echoed to stderr so every run records what it ran with.
struct ConfigFlags {
    std::string config_path;
    bool full_scale = false;
    int d_model = 0;
    int num_stages = 0;
    int queries_per_stage = 0;
    int compressed_tokens = 0;
    int heads = 0;
    std::string attention_mode;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (desk defaults when omitted)");
        cmd->add_flag("--full-scale", full_scale, "start from the full-scale config");
        cmd->add_option("--d-model", d_model, "override d_model");
        cmd->add_option("--num-stages", num_stages, "override num_stages");
        cmd->add_option("--queries-per-stage", queries_per_stage, "override queries_per_stage");
        cmd->add_option("--compressed-tokens", compressed_tokens, "override compressed_tokens");
        cmd->add_option("--heads", heads, "override heads");
        cmd->add_option("--attention-mode", attention_mode, "literal_eq1 or projected");
    }

    HfqConfig resolve() const {
        if (full_scale && !config_path.empty()) {
            throw ConfigError("--full-scale and --config are mutually exclusive");
        }
        HfqConfig cfg = full_scale ? HfqConfig::full_scale() : HfqConfig::desk();
        if (!config_path.empty()) cfg = HfqConfig::load_file(config_path);
        if (d_model > 0) cfg.d_model = d_model;
        if (num_stages > 0) cfg.num_stages = num_stages;
        if (queries_per_stage > 0) cfg.queries_per_stage = queries_per_stage;
        if (compressed_tokens > 0) cfg.compressed_tokens = compressed_tokens;
        if (heads > 0) cfg.heads = heads;
        if (!attention_mode.empty()) {
            cfg.attention_mode = attention_mode_from_string(attention_mode);
        }
        cfg.validate();
        std::cerr << "effective config:\n" << cfg.to_json() << "\n";
        return cfg;
    }
};

json tokens_to_json(const Tensor& tokens) {
    json rows = json::array();
    for (int i = 0; i < tokens.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < tokens.cols(); ++j) row.push_back(tokens.at(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

int run_featurize(const std::string& wav_path, const std::string& out_path, bool mel_only,
                  int n_mels, const ConfigFlags& flags, std::uint64_t seed) {
    WaveBuffer wave = read_wav(wav_path);
    MelFrames mel = mel_spectrogram(wave, n_mels);
    if (mel_only) {
        write_features(out_path, mel.frames);
        std::cerr << "wrote " << mel.frames.rows() << " mel frames x " << n_mels << " to "
                  << out_path << "\n";
        return 0;
    }
    HfqConfig cfg = flags.resolve();
    Rng rng(seed);
    ToyEncoder encoder(n_mels, cfg.d_model, rng);
    Graph g;
    Tensor features = encoder.forward(g, mel.frames);
    write_features(out_path, features);
    std::cerr << "wrote " << features.rows() << " feature frames x " << cfg.d_model << " to "
              << out_path << "\n";
    return 0;
}

int run_compress(const std::string& features_path, const std::string& out_path,
                 const std::string& checkpoint_path, const ConfigFlags& flags,
                 std::uint64_t seed) {
    HfqConfig cfg = flags.resolve();
    Tensor features = read_features(features_path);
    Rng rng(seed);
    HfqFormer model(cfg, rng);
    if (!checkpoint_path.empty()) {
        load_stack_weights(checkpoint_path, model.parameters());
    }
    std::vector<DiagnosticsT<float>> diags;
    auto windows = model.compress_long_form(features, &diags);

    json out;
    out["config"] = json::parse(cfg.to_json());
    out["input_frames"] = features.rows();
    out["num_windows"] = windows.size();
    json jw = json::array();
    for (std::size_t i = 0; i < windows.size(); ++i) {
        json w;
        w["window_index"] = windows[i].window_index;
        w["source_duration_sec"] = windows[i].source_duration_sec;
        w["tokens"] = tokens_to_json(windows[i].tokens);
        auto mass = attention_mass_per_stage(diags[i].distill_attention, cfg.num_stages,
                                             cfg.queries_per_stage);
        w["stage_masses"] = mass;
        jw.push_back(std::move(w));
    }
    out["windows"] = std::move(jw);
    write_text_atomic(out_path, out.dump(2) + "\n");
    std::cerr << "wrote " << windows.size() << " window(s) to " << out_path << "\n";
    return 0;
}

int run_attn_map(const std::string& features_path, const std::string& checkpoint_path,
                 const std::string& out_path, const ConfigFlags& flags, std::uint64_t seed) {
    HfqConfig cfg = flags.resolve();
    Tensor features = read_features(features_path);
    Rng rng(seed);
    HfqFormer model(cfg, rng);
    load_stack_weights(checkpoint_path, model.parameters());
    std::vector<DiagnosticsT<float>> diags;
    model.compress_long_form(features, &diags);

    std::ostringstream csv;
    csv << "window_index,stage,mass\n";
    csv.precision(10);
    for (std::size_t w = 0; w < diags.size(); ++w) {
        auto mass = attention_mass_per_stage(diags[w].distill_attention, cfg.num_stages,
                                             cfg.queries_per_stage);
        for (std::size_t s = 0; s < mass.size(); ++s) {
            csv << w << "," << (s + 1) << "," << mass[s] << "\n";
        }
    }
    write_text_atomic(out_path, csv.str());
    std::cerr << "wrote " << diags.size() * std::size_t(cfg.num_stages) << " rows to " << out_path
              << "\n";
    return 0;
}

int run_cost(const std::string& adapter, const std::string& llm, double duration,
             long long prompt_tokens) {
    CostReport rep =
        cost_report(adapter_by_name(adapter), llm_by_name(llm), duration, prompt_tokens);
    std::cout << rep.to_json() << "\n";
    return 0;
}

int run_bench(const std::vector<double>& durations, const std::vector<std::string>& adapter_names,
              const std::string& llm, const std::string& out_path) {
    std::vector<AdapterProfile> adapters;
    bool all = adapter_names.empty();
    for (const auto& name : adapter_names) {
        if (name == "all") {
            all = true;
        } else {
            adapters.push_back(adapter_by_name(name));
        }
    }
    if (all) adapters = builtin_adapters();
    auto rows = scaling_sweep(llm_by_name(llm), adapters, durations);
    write_text_atomic(out_path, sweep_to_csv(rows));
    std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
    return 0;
}

int run_train_toy(ToyTaskSpec task, const std::string& pattern, const ConfigFlags& flags,
                  const std::string& log_path, const std::string& checkpoint_path) {
    task.pattern = synth_pattern_from_string(pattern);
    HfqConfig cfg = flags.resolve();
    TrainResult result = train_toy(task, cfg);

    if (!log_path.empty()) {
        std::ostringstream csv;
        csv << "step,loss,grad_norm\n";
        csv << std::setprecision(17);
        for (const auto& row : result.rows) {
            csv << row.step << "," << row.loss << "," << row.grad_norm << "\n";
        }
        write_text_atomic(log_path, csv.str());
    }
    if (!checkpoint_path.empty()) {
        save_checkpoint(checkpoint_path, result.parameters);
    }

    json summary;
    summary["steps"] = result.rows.size();
    summary["initial_loss"] = result.initial_loss;
    summary["final_loss"] = result.final_loss;
    summary["heldout_accuracy"] = result.heldout_accuracy;
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_gradcheck(const ConfigFlags& flags, std::uint64_t seed, int t_mel, int n_mels,
                  std::size_t max_coords) {
    HfqConfig cfg = flags.resolve();
    GradCheckReport report = run_model_gradcheck(cfg, seed, t_mel, n_mels, max_coords);
    std::cout << std::setprecision(6);
    for (const auto& g : report.groups) {
        std::cout << g.name << " " << g.max_rel_err << " (" << g.coords_probed << "/" << g.numel
                  << " coords)\n";
    }
    std::cout << "max_rel_err " << report.max_rel_err << " threshold " << report.threshold << " "
              << (report.passed ? "PASS" : "FAIL") << "\n";
    return report.passed ? 0 : 3;
}

int run_prompt(const std::string& task, const std::string& language, const std::string& text,
               bool no_language_tag, bool no_task_tag) {
    PromptSpec spec;
    spec.task = prompt_task_from_string(task);
    spec.language = prompt_language_from_string(language);
    spec.user_text = text;
    spec.include_language_tag = !no_language_tag;
    spec.include_task_tag = !no_task_tag;
    std::cout << format_prompt(spec) << "\n";
    return 0;
}

int run_params(const ConfigFlags& flags, std::uint64_t seed) {
    HfqConfig cfg = flags.resolve();
    Rng rng(seed);
    HfqFormer model(cfg, rng);
    std::cout << model.count_parameters() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hfq: hierarchical speech-token compression and its cost model"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    try {
        seed = default_seed();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    // featurize
    auto* featurize = app.add_subcommand("featurize", "WAV -> mel -> toy encoder features");
    std::string fz_wav, fz_out;
    bool fz_mel_only = false;
    int fz_n_mels = 80;
    ConfigFlags fz_flags;
    featurize->add_option("--wav", fz_wav, "input PCM16 mono 16 kHz WAV")->required();
    featurize->add_option("--out", fz_out, "output feature file")->required();
    featurize->add_flag("--mel-only", fz_mel_only, "stop after the mel spectrogram");
    featurize->add_option("--n-mels", fz_n_mels, "mel filter count (default 80)");
    featurize->add_option("--seed", seed, "encoder init seed (default HFQ_SEED or 0)");
    fz_flags.attach(featurize);

    // compress
    auto* compress = app.add_subcommand("compress", "features -> compressed tokens JSON");
    std::string cp_features, cp_out, cp_checkpoint;
    ConfigFlags cp_flags;
    compress->add_option("--features", cp_features, "input feature file")->required();
    compress->add_option("--out", cp_out, "output JSON path")->required();
    compress->add_option("--checkpoint", cp_checkpoint, "load weights before compressing");
    compress->add_option("--seed", seed, "model init seed (default HFQ_SEED or 0)");
    cp_flags.attach(compress);

    // attn-map
    auto* attn_map = app.add_subcommand("attn-map", "per-window per-stage attention masses CSV");
    std::string am_features, am_checkpoint, am_out;
    ConfigFlags am_flags;
    attn_map->add_option("--features", am_features, "input feature file")->required();
    attn_map->add_option("--checkpoint", am_checkpoint, "model weights")->required();
    attn_map->add_option("--out", am_out, "output CSV path")->required();
    attn_map->add_option("--seed", seed, "model init seed (default HFQ_SEED or 0)");
    am_flags.attach(attn_map);

    // cost
    auto* cost = app.add_subcommand("cost", "analytical LLM cost for one adapter and duration");
    std::string co_adapter = "hfq", co_llm = "qwen3-4b-like";
    double co_duration = 0.0;
    long long co_prompt_tokens = 0;
    cost->add_option("--adapter", co_adapter, "adapter name (default hfq)");
    cost->add_option("--duration", co_duration, "audio duration in seconds")->required();
    cost->add_option("--llm", co_llm, "LLM profile (default qwen3-4b-like)");
    cost->add_option("--prompt-tokens", co_prompt_tokens, "extra text tokens in the prefill");

    // bench
    auto* bench = app.add_subcommand("bench", "token/FLOPs/KV scaling sweep CSV");
    std::vector<double> be_durations;
    std::vector<std::string> be_adapters = {"all"};
    std::string be_llm = "qwen3-4b-like", be_out;
    bench->add_option("--durations", be_durations, "comma-separated seconds")
        ->required()
        ->delimiter(',');
    bench->add_option("--adapters", be_adapters, "comma-separated names or 'all'")->delimiter(',');
    bench->add_option("--llm", be_llm, "LLM profile (default qwen3-4b-like)");
    bench->add_option("--out", be_out, "output CSV path")->required();

    // train-toy
    auto* train = app.add_subcommand("train-toy", "train the toy classifier end to end");
    ToyTaskSpec tt_task;
    tt_task.seed = seed;
    std::string tt_pattern = "tones", tt_log, tt_checkpoint;
    ConfigFlags tt_flags;
    train->add_option("--classes", tt_task.num_classes, "class count (default 8)");
    train->add_option("--examples-per-class", tt_task.examples_per_class, "default 64");
    train->add_option("--heldout-per-class", tt_task.heldout_per_class, "default 8");
    train->add_option("--duration", tt_task.duration_sec, "clip length in seconds (default 1.2)");
    train->add_option("--steps", tt_task.steps, "SGD steps (default 300)");
    train->add_option("--lr", tt_task.learning_rate, "learning rate (default 3e-3)");
    train->add_option("--batch-size", tt_task.batch_size, "default 16");
    train->add_option("--pattern", tt_pattern, "tones, chirps, or noise");
    train->add_option("--seed", tt_task.seed, "data + init seed (default HFQ_SEED or 0)");
    train->add_option("--log", tt_log, "write per-step CSV here");
    train->add_option("--checkpoint", tt_checkpoint, "write trained weights here");
    tt_flags.attach(train);

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit of the full graph");
    int gc_t_mel = 8, gc_n_mels = 16;
    std::size_t gc_max_coords = 48;
    ConfigFlags gc_flags;
    gradcheck->add_option("--seed", seed, "default HFQ_SEED or 0");
    gradcheck->add_option("--t-mel", gc_t_mel, "mel frames in the probe input (default 8)");
    gradcheck->add_option("--n-mels", gc_n_mels, "mel bins in the probe input (default 16)");
    gradcheck->add_option("--max-coords", gc_max_coords, "probed coordinates per group (default 48)");
    gc_flags.attach(gradcheck);

    // prompt
    auto* prompt = app.add_subcommand("prompt", "render the chat template");
    std::string pr_task = "ASR", pr_language = "EN", pr_text;
    bool pr_no_lang = false, pr_no_task = false;
    prompt->add_option("--task", pr_task, "ASR, AST, SQQA, or SSUM (default ASR)");
    prompt->add_option("--language", pr_language, "KO or EN (default EN)");
    prompt->add_option("--text", pr_text, "user instruction text")->required();
    prompt->add_flag("--no-language-tag", pr_no_lang, "omit the language tag");
    prompt->add_flag("--no-task-tag", pr_no_task, "omit the task tag");

    // params
    auto* params = app.add_subcommand("params", "print the compression stack's parameter count");
    ConfigFlags pa_flags;
    params->add_option("--seed", seed, "model init seed (irrelevant to the count)");
    pa_flags.attach(params);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(featurize)) {
            return run_featurize(fz_wav, fz_out, fz_mel_only, fz_n_mels, fz_flags, seed);
        }
        if (app.got_subcommand(compress)) {
            return run_compress(cp_features, cp_out, cp_checkpoint, cp_flags, seed);
        }
        if (app.got_subcommand(attn_map)) {
            return run_attn_map(am_features, am_checkpoint, am_out, am_flags, seed);
        }
        if (app.got_subcommand(cost)) {
            return run_cost(co_adapter, co_llm, co_duration, co_prompt_tokens);
        }
        if (app.got_subcommand(bench)) {
            return run_bench(be_durations, be_adapters, be_llm, be_out);
        }
        if (app.got_subcommand(train)) {
            return run_train_toy(tt_task, tt_pattern, tt_flags, tt_log, tt_checkpoint);
        }
        if (app.got_subcommand(gradcheck)) {
            return run_gradcheck(gc_flags, seed, gc_t_mel, gc_n_mels, gc_max_coords);
        }
        if (app.got_subcommand(prompt)) {
            return run_prompt(pr_task, pr_language, pr_text, pr_no_lang, pr_no_task);
        }
        if (app.got_subcommand(params)) {
            return run_params(pa_flags, seed);
        }
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
