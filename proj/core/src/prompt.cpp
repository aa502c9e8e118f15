#include "hfq/prompt.hpp"

#include "hfq/errors.hpp"

namespace hfq {

PromptTask prompt_task_from_string(const std::string& s) {
    if (s == "ASR") return PromptTask::ASR;
    if (s == "AST") return PromptTask::AST;
    if (s == "SQQA") return PromptTask::SQQA;
    if (s == "SSUM") return PromptTask::SSUM;
    throw ConfigError("task must be ASR, AST, SQQA, or SSUM, got \"" + s + "\"");
}

PromptLanguage prompt_language_from_string(const std::string& s) {
    if (s == "KO") return PromptLanguage::KO;
    if (s == "EN") return PromptLanguage::EN;
    throw ConfigError("language must be KO or EN, got \"" + s + "\"");
}

namespace {

const char* task_tag(PromptTask t) {
    switch (t) {
    case PromptTask::ASR: return "<|ASR|>";
    case PromptTask::AST: return "<|AST|>";
    case PromptTask::SQQA: return "<|SQQA|>";
    case PromptTask::SSUM: return "<|SSUM|>";
    }
    return "";
}

const char* language_tag(PromptLanguage l) {
    return l == PromptLanguage::KO ? "<|KO|>" : "<|EN|>";
}

} // namespace

std::string format_prompt(const PromptSpec& spec) {
    if (spec.user_text.empty()) {
        throw ContractError("prompt user text must be nonempty");
    }
    std::string out = "User: <|audio_bos|><|AUDIO|><|audio_eos|>";
    if (spec.include_language_tag) out += language_tag(spec.language);
    if (spec.include_task_tag) out += task_tag(spec.task);
    out += spec.user_text;
    out += "\nAssistant:";
    return out;
}

} // namespace hfq
