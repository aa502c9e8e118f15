#pragma once

#include <string>

namespace hfq {

enum class PromptTask { ASR, AST, SQQA, SSUM };
enum class PromptLanguage { KO, EN };

PromptTask prompt_task_from_string(const std::string& s);
PromptLanguage prompt_language_from_string(const std::string& s);

struct PromptSpec {
    PromptTask task = PromptTask::ASR;
    PromptLanguage language = PromptLanguage::EN;
    std::string user_text;
    bool include_language_tag = true;
    bool include_task_tag = true;
};

// Renders
//   User: <|audio_bos|><|AUDIO|><|audio_eos|>{<|KO|>|<|EN|>}{<|ASR|>|...}{user_text}\nAssistant:
// with the optional language tag first, then the optional task tag, directly
// before the user text.
std::string format_prompt(const PromptSpec& spec);

} // namespace hfq
