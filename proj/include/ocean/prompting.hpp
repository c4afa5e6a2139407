#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/corpus.hpp"
#include "ocean/inventory.hpp"

namespace ocean::prompting {

enum class Method { baseline_direct, roleplay_only, questionnaire_only, roleplay_and_questionnaire };
enum class Role { client, counselor, observer, no_role };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::string role_name(Role r);
Role role_from_name(const std::string& name);

struct PromptCondition {
    Method method = Method::roleplay_and_questionnaire;
    Role role = Role::client;
    std::optional<std::string> role_persona_name;  // named-role ablation
    double granularity = 1.0;                      // fraction of utterances kept

    bool operator==(const PromptCondition&) const = default;
};

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct PromptBundle {
    std::vector<ChatMessage> messages;
    PromptCondition condition;
    std::optional<int> item_index;
    std::string session_id;
};

class RoleMismatch : public std::runtime_error {
  public:
    explicit RoleMismatch(const std::string& why) : std::runtime_error("role mismatch: " + why) {}
};

class EmptyContext : public std::runtime_error {
  public:
    EmptyContext() : std::runtime_error("dialogue is empty after truncation") {}
};

class TemplateError : public std::runtime_error {
  public:
    explicit TemplateError(const std::string& why) : std::runtime_error("template error: " + why) {}
};

// plain-text files with {placeholder} substitution
class TemplateSet {
  public:
    static TemplateSet builtin_english();
    static TemplateSet load(const std::filesystem::path& dir);

    const std::string& get(const std::string& name) const;
    static std::string substitute(const std::string& tpl,
                                  const std::map<std::string, std::string>& values);

  private:
    std::map<std::string, std::string> files_;
};

// throws RoleMismatch on invalid method/role pairings
void validate(const PromptCondition& condition);

// persona sentence gains "You are <name>."; counselor and observer only
PromptCondition with_named_role(const PromptCondition& condition, const std::string& name);

class PromptBuilder {
  public:
    explicit PromptBuilder(TemplateSet templates) : templates_(std::move(templates)) {}

    PromptBundle build_item_prompt(const corpus::Session& session, const PromptCondition& condition,
                                   const inventory::Item& item) const;
    PromptBundle build_direct_prompt(const corpus::Session& session,
                                     const PromptCondition& condition) const;

    const TemplateSet& templates() const { return templates_; }

  private:
    TemplateSet templates_;
};

}  // namespace ocean::prompting
