#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hfq/checkpoint.hpp"
#include "hfq/config.hpp"
#include "hfq/feature_io.hpp"
#include "hfq/hfq_former.hpp"
#include "hfq/prompt.hpp"

using namespace hfq;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

std::vector<std::vector<float>> snapshot(const NamedParams& params) {
    std::vector<std::vector<float>> copies;
    for (const auto& [name, t] : params) copies.push_back(*t.data);
    return copies;
}

bool matches(const NamedParams& params, const std::vector<std::vector<float>>& copies) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (*params[i].second.data != copies[i]) return false;
    }
    return true;
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save, load, save again is byte-identical") {
    HfqConfig cfg = HfqConfig::desk();
    Rng rng(31);
    HfqFormer model(cfg, rng);
    TempFile a("ckpt_a.hfqc"), b("ckpt_b.hfqc");
    save_checkpoint(a.path, model.parameters());
    auto entries = load_checkpoint(a.path);
    NamedParams reloaded;
    for (auto& [name, t] : entries) reloaded.emplace_back(name, t);
    save_checkpoint(b.path, reloaded);
    CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("load restores every value bit-exactly") {
    HfqConfig cfg = HfqConfig::desk();
    Rng r1(32), r2(33);
    HfqFormer saved(cfg, r1), target(cfg, r2);
    TempFile f("ckpt_restore.hfqc");
    save_checkpoint(f.path, saved.parameters());
    load_checkpoint_into(f.path, target.parameters());
    auto want = snapshot(saved.parameters());
    CHECK(matches(target.parameters(), want));
}

TEST_CASE("corrupted files are rejected without touching the model") {
    HfqConfig cfg = HfqConfig::desk();
    Rng r1(34), r2(35);
    HfqFormer saved(cfg, r1), target(cfg, r2);
    TempFile f("ckpt_corrupt.hfqc");
    save_checkpoint(f.path, saved.parameters());
    const std::string good = slurp(f.path);
    const auto before = snapshot(target.parameters());

    SUBCASE("truncated payload") { spit(f.path, good.substr(0, good.size() * 3 / 5)); }
    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        spit(f.path, bad);
    }
    SUBCASE("unsupported version") {
        std::string bad = good;
        bad[4] = char(kCheckpointVersion + 1);
        spit(f.path, bad);
    }

    CHECK_THROWS_AS(load_checkpoint_into(f.path, target.parameters()), FormatError);
    CHECK(matches(target.parameters(), before));
}

TEST_CASE("schema mismatches name the offender and leave no partial state") {
    HfqConfig cfg = HfqConfig::desk();
    Rng r1(36), r2(37);
    HfqFormer saved(cfg, r1);
    TempFile f("ckpt_schema.hfqc");
    save_checkpoint(f.path, saved.parameters());
    const auto want_unchanged = [&](HfqFormer& m) {
        const auto before = snapshot(m.parameters());
        bool threw = false;
        std::string message;
        try {
            load_checkpoint_into(f.path, m.parameters());
        } catch (const SchemaError& e) {
            threw = true;
            message = e.what();
        }
        CHECK(threw);
        CHECK(matches(m.parameters(), before));
        return message;
    };

    SUBCASE("shape mismatch") {
        HfqConfig wide = cfg;
        wide.queries_per_stage = 9;
        HfqFormer target(wide, r2);
        std::string msg = want_unchanged(target);
        CHECK(msg.find("stage1.queries") != std::string::npos);
    }
    SUBCASE("missing name") {
        HfqConfig deeper = cfg;
        deeper.num_stages = 2; // checkpoint has 3 stages; rebuild with an extra name
        HfqFormer two(deeper, r2);
        TempFile partial("ckpt_partial.hfqc");
        save_checkpoint(partial.path, two.parameters());
        HfqFormer target(cfg, r2);
        const auto before = snapshot(target.parameters());
        bool threw = false;
        std::string message;
        try {
            load_checkpoint_into(partial.path, target.parameters());
        } catch (const SchemaError& e) {
            threw = true;
            message = e.what();
        }
        CHECK(threw);
        CHECK(matches(target.parameters(), before));
        CHECK(message.find("stage3") != std::string::npos);
    }
}

TEST_CASE("missing file is a format error") {
    HfqConfig cfg = HfqConfig::desk();
    Rng rng(38);
    HfqFormer model(cfg, rng);
    CHECK_THROWS_AS(load_checkpoint_into("no_such_file.hfqc", model.parameters()), FormatError);
    CHECK_THROWS_AS(load_checkpoint("no_such_file.hfqc"), FormatError);
}

} // suite

TEST_SUITE("feature files") {

TEST_CASE("round-trip is bit-exact") {
    Rng rng(39);
    Tensor t = Tensor::randn({7, 5}, rng, 0.f, 2.f);
    TempFile f("feats_roundtrip.f32");
    write_features(f.path, t);
    Tensor back = read_features(f.path);
    CHECK(back.shape == t.shape);
    CHECK(*back.data == *t.data);
}

TEST_CASE("rejects rank-1 tensors and truncated files") {
    TempFile f("feats_bad.f32");
    CHECK_THROWS_AS(write_features(f.path, Tensor::zeros({4})), DimensionError);
    Rng rng(40);
    write_features(f.path, Tensor::randn({3, 4}, rng, 0.f, 1.f));
    const std::string good = slurp(f.path);
    spit(f.path, good.substr(0, good.size() - 5));
    CHECK_THROWS_AS(read_features(f.path), FormatError);
    spit(f.path, good.substr(0, 6));
    CHECK_THROWS_AS(read_features(f.path), FormatError);
    CHECK_THROWS_AS(read_features("no_such_features.f32"), FormatError);
}

} // suite

TEST_SUITE("prompt format") {

TEST_CASE("english asr prompt is byte-exact") {
    PromptSpec spec;
    spec.task = PromptTask::ASR;
    spec.language = PromptLanguage::EN;
    spec.user_text = "Transcribe.";
    CHECK(format_prompt(spec) ==
          "User: <|audio_bos|><|AUDIO|><|audio_eos|><|EN|><|ASR|>Transcribe.\nAssistant:");
    PromptSpec korean;
    korean.task = PromptTask::SSUM;
    korean.language = PromptLanguage::KO;
    korean.user_text = "Summarize.";
    CHECK(format_prompt(korean) ==
          "User: <|audio_bos|><|AUDIO|><|audio_eos|><|KO|><|SSUM|>Summarize.\nAssistant:");
}

TEST_CASE("every task, language, and tag combination is well formed") {
    const std::string audio = "<|AUDIO|>";
    for (PromptTask task :
         {PromptTask::ASR, PromptTask::AST, PromptTask::SQQA, PromptTask::SSUM}) {
        for (PromptLanguage lang : {PromptLanguage::KO, PromptLanguage::EN}) {
            for (bool lang_tag : {false, true}) {
                for (bool task_tag : {false, true}) {
                    PromptSpec spec;
                    spec.task = task;
                    spec.language = lang;
                    spec.user_text = "Do the thing.";
                    spec.include_language_tag = lang_tag;
                    spec.include_task_tag = task_tag;
                    std::string p = format_prompt(spec);
                    std::size_t first = p.find(audio);
                    CHECK(first != std::string::npos);
                    CHECK(p.find(audio, first + 1) == std::string::npos);
                    CHECK(p.rfind("User: <|audio_bos|>", 0) == 0);
                    CHECK(p.substr(p.size() - 11) == "\nAssistant:");
                    CHECK((p.find("<|KO|>") != std::string::npos ||
                           p.find("<|EN|>") != std::string::npos) == lang_tag);
                }
            }
        }
    }
}

TEST_CASE("formatting is deterministic and rejects empty text") {
    PromptSpec spec;
    spec.user_text = "Summarize the call.";
    CHECK(format_prompt(spec) == format_prompt(spec));
    spec.user_text.clear();
    CHECK_THROWS_AS(format_prompt(spec), ContractError);
}

TEST_CASE("string parsers cover the enums") {
    CHECK(prompt_task_from_string("SQQA") == PromptTask::SQQA);
    CHECK(prompt_language_from_string("KO") == PromptLanguage::KO);
    CHECK_THROWS_AS(prompt_task_from_string("OCR"), ConfigError);
    CHECK_THROWS_AS(prompt_language_from_string("JP"), ConfigError);
}

} // suite

TEST_SUITE("config json") {

TEST_CASE("round-trips through json text") {
    HfqConfig cfg = HfqConfig::desk();
    cfg.attention_mode = AttentionMode::literal_eq1;
    cfg.heads = 1; // literal mode allows only a single head
    HfqConfig back = HfqConfig::from_json(cfg.to_json());
    CHECK(back.d_model == cfg.d_model);
    CHECK(back.heads == 1);
    CHECK(back.attention_mode == AttentionMode::literal_eq1);
    CHECK(back.window_seconds == cfg.window_seconds);
}

TEST_CASE("omitted keys keep desk defaults, unknown keys are rejected") {
    HfqConfig cfg = HfqConfig::from_json(R"({"d_model": 32})");
    CHECK(cfg.d_model == 32);
    CHECK(cfg.num_stages == 3);
    CHECK(cfg.compressed_tokens == 5);
    CHECK_THROWS_AS(HfqConfig::from_json(R"({"d_modle": 32})"), ConfigError);
    CHECK_THROWS_AS(HfqConfig::from_json(R"({"d_model": "wide"})"), ConfigError);
    CHECK_THROWS_AS(HfqConfig::from_json("not json"), ConfigError);
}

TEST_CASE("file round-trip and validation") {
    TempFile f("cfg_roundtrip.json");
    HfqConfig cfg = HfqConfig::desk();
    cfg.num_stages = 2;
    cfg.save_file(f.path);
    HfqConfig back = HfqConfig::load_file(f.path);
    CHECK(back.num_stages == 2);
    CHECK_THROWS_AS(HfqConfig::load_file("no_such_config.json"), ConfigError);
    HfqConfig bad = HfqConfig::desk();
    bad.heads = 3; // 64 % 3 != 0
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

} // suite
