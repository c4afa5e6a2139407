#include "ocean/prompting.hpp"

#include <sstream>

#include "ocean/util.hpp"

namespace ocean::prompting {

std::string method_name(Method m) {
    switch (m) {
        case Method::baseline_direct: return "baseline_direct";
        case Method::roleplay_only: return "roleplay_only";
        case Method::questionnaire_only: return "questionnaire_only";
        case Method::roleplay_and_questionnaire: return "roleplay_and_questionnaire";
    }
    throw std::logic_error("bad method");
}

Method method_from_name(const std::string& name) {
    if (name == "baseline_direct") return Method::baseline_direct;
    if (name == "roleplay_only") return Method::roleplay_only;
    if (name == "questionnaire_only") return Method::questionnaire_only;
    if (name == "roleplay_and_questionnaire") return Method::roleplay_and_questionnaire;
    throw std::invalid_argument("unknown method: " + name);
}

std::string role_name(Role r) {
    switch (r) {
        case Role::client: return "client";
        case Role::counselor: return "counselor";
        case Role::observer: return "observer";
        case Role::no_role: return "no_role";
    }
    throw std::logic_error("bad role");
}

Role role_from_name(const std::string& name) {
    if (name == "client") return Role::client;
    if (name == "counselor") return Role::counselor;
    if (name == "observer") return Role::observer;
    if (name == "no_role") return Role::no_role;
    throw std::invalid_argument("unknown role: " + name);
}

namespace {

const std::map<std::string, std::string>& builtin_files() {
    static const std::map<std::string, std::string> files = {
        {"client.system",
         "Act like a real human and do not mention anything with AI. Act as the client in this "
         "counseling session, you will have a conversation with your counselor."},
        {"counselor.system",
         "Act like a real counselor and do not mention anything with AI. You are a professional "
         "psychological counselor, and you are about to participate in a psycho-counseling."},
        {"observer.system",
         "You are an AI proficient in dialogue analysis and character profiling. Your task is to "
         "help the counselor analyze the utterance of the counseling dialogue. You need to answer "
         "a series of questions about the client's OCEAN traits based on the information in the "
         "chat records."},
        {"questionnaire.preamble",
         "Before we end today's counseling session, please complete the following questionnaire "
         "based on the conversation and {perspective}:"},
        {"questionnaire.item_lead", "I am someone who"},
        {"questionnaire.options",
         "1. Disagree (strongly)\n2. Disagree (a little)\n3. Neutral (no opinion)\n"
         "4. Agree (a little)\n5. Agree (strongly)"},
        {"questionnaire.closing", "Please tell me your choice and explain the reason:"},
        {"observer.dialogue_lead", "Here come the dialogue:"},
        {"observer.preamble",
         "Based on the dialogue, please provide the most appropriate option for the following "
         "question:"},
        {"direct.system",
         "You are assisting with a dialogue analysis task. Read the counseling conversation "
         "carefully and assess the client's personality."},
        {"direct.request",
         "Based on the dialogue, rate the client's Big Five traits on a scale from 1 (lowest) to "
         "5 (highest). Reply exactly in the format: O=<x> C=<x> E=<x> A=<x> N=<x>, replacing each "
         "<x> with your rating."},
    };
    return files;
}

std::vector<corpus::Utterance> merge_consecutive(const std::vector<corpus::Utterance>& utterances) {
    std::vector<corpus::Utterance> merged;
    for (const corpus::Utterance& u : utterances) {
        if (!merged.empty() && merged.back().speaker == u.speaker)
            merged.back().text += "\n" + u.text;
        else
            merged.push_back(u);
    }
    return merged;
}

void append_user(std::vector<ChatMessage>& messages, const std::string& content) {
    // keeps user/assistant turns strictly alternating
    if (!messages.empty() && messages.back().role == "user")
        messages.back().content += "\n" + content;
    else
        messages.push_back({"user", content});
}

}  // namespace

TemplateSet TemplateSet::builtin_english() {
    TemplateSet t;
    t.files_ = builtin_files();
    return t;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    TemplateSet t;
    for (const auto& [name, unused] : builtin_files()) {
        std::filesystem::path p = dir / name;
        if (!std::filesystem::exists(p)) throw TemplateError("missing template file: " + p.string());
        t.files_[name] = util::read_file(p);
    }
    return t;
}

const std::string& TemplateSet::get(const std::string& name) const {
    auto it = files_.find(name);
    if (it == files_.end()) throw TemplateError("unknown template: " + name);
    return it->second;
}

std::string TemplateSet::substitute(const std::string& tpl,
                                    const std::map<std::string, std::string>& values) {
    std::string out = tpl;
    for (const auto& [key, value] : values) {
        std::string needle = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

void validate(const PromptCondition& condition) {
    if (!(condition.granularity > 0.0) || condition.granularity > 1.0)
        throw corpus::InvalidFraction(condition.granularity);
    switch (condition.method) {
        case Method::questionnaire_only:
        case Method::baseline_direct:
            if (condition.role != Role::no_role)
                throw RoleMismatch(method_name(condition.method) + " takes no persona role");
            break;
        case Method::roleplay_only:
        case Method::roleplay_and_questionnaire:
            if (condition.role == Role::no_role)
                throw RoleMismatch(method_name(condition.method) + " needs a persona role");
            break;
    }
    if (condition.role_persona_name &&
        condition.role != Role::counselor && condition.role != Role::observer)
        throw RoleMismatch("named personas apply to counselor and observer roles only");
}

PromptCondition with_named_role(const PromptCondition& condition, const std::string& name) {
    if (condition.role != Role::counselor && condition.role != Role::observer)
        throw RoleMismatch("named personas apply to counselor and observer roles only");
    PromptCondition out = condition;
    out.role_persona_name = name;
    return out;
}

namespace {

struct Rendering {
    const TemplateSet& templates;
    const corpus::Session& session;
    const PromptCondition& condition;

    std::string persona_system() const {
        std::string content;
        switch (condition.role) {
            case Role::client: content = templates.get("client.system"); break;
            case Role::counselor: content = templates.get("counselor.system"); break;
            case Role::observer: content = templates.get("observer.system"); break;
            case Role::no_role: content = templates.get("direct.system"); break;
        }
        if (condition.role_persona_name)
            content += " You are " + *condition.role_persona_name + ".";
        return content;
    }

    std::string questionnaire_block(const inventory::Item& item) const {
        std::ostringstream os;
        if (condition.role == Role::observer || condition.role == Role::no_role)
            os << templates.get("observer.preamble") << "\n";
        else
            os << TemplateSet::substitute(
                      templates.get("questionnaire.preamble"),
                      {{"perspective", condition.role == Role::client ? "your own situation"
                                                                      : "client's situation"}})
               << "\n";
        os << "Question: " << templates.get("questionnaire.item_lead") << " " << item.text << "\n";
        os << "Options:\n" << templates.get("questionnaire.options") << "\n";
        os << templates.get("questionnaire.closing");
        return os.str();
    }

    // client/counselor: alternating turns with the persona side as assistant
    std::vector<ChatMessage> conversational(const std::string& request) const {
        corpus::Speaker persona_side =
            condition.role == Role::client ? corpus::Speaker::client : corpus::Speaker::counselor;
        std::vector<corpus::Utterance> merged = merge_consecutive(session.utterances);

        std::vector<ChatMessage> messages;
        std::string system = persona_system();
        std::size_t start = 0;
        if (!merged.empty() && merged[0].speaker == persona_side) {
            system += "\nYou previously said: " + merged[0].text;
            start = 1;
        }
        messages.push_back({"system", system});
        for (std::size_t i = start; i < merged.size(); ++i) {
            if (merged[i].speaker == persona_side)
                messages.push_back({"assistant", merged[i].text});
            else
                append_user(messages, merged[i].text);
        }
        append_user(messages, request);
        return messages;
    }

    // observer/no_role: whole dialogue inside one user message as labeled lines
    std::vector<ChatMessage> single_message(const std::string& request, bool with_system) const {
        std::ostringstream os;
        os << templates.get("observer.dialogue_lead") << "\n";
        for (const corpus::Utterance& u : merge_consecutive(session.utterances)) {
            os << (u.speaker == corpus::Speaker::client ? "User: " : "Counselor: ") << u.text
               << "\n";
        }
        os << request;
        std::vector<ChatMessage> messages;
        if (with_system) messages.push_back({"system", persona_system()});
        messages.push_back({"user", os.str()});
        return messages;
    }
};

PromptBundle assemble(const TemplateSet& templates, const corpus::Session& session,
                      const PromptCondition& condition, const std::string& request,
                      std::optional<int> item_index) {
    if (session.utterances.empty()) throw EmptyContext();
    corpus::Session truncated = corpus::truncate(session, condition.granularity);

    Rendering rendering{templates, truncated, condition};
    PromptBundle bundle;
    bundle.condition = condition;
    bundle.item_index = item_index;
    bundle.session_id = session.session_id;

    if (condition.role == Role::client || condition.role == Role::counselor) {
        bundle.messages = rendering.conversational(request);
    } else {
        // questionnaire-only carries no system message at all
        bool with_system =
            condition.role == Role::observer || condition.method == Method::baseline_direct;
        bundle.messages = rendering.single_message(request, with_system);
    }
    return bundle;
}

}  // namespace

PromptBundle PromptBuilder::build_item_prompt(const corpus::Session& session,
                                              const PromptCondition& condition,
                                              const inventory::Item& item) const {
    validate(condition);
    if (condition.method != Method::questionnaire_only &&
        condition.method != Method::roleplay_and_questionnaire)
        throw RoleMismatch("item prompt requested under " + method_name(condition.method));
    Rendering helper{templates_, session, condition};
    return assemble(templates_, session, condition, helper.questionnaire_block(item), item.index);
}

PromptBundle PromptBuilder::build_direct_prompt(const corpus::Session& session,
                                                const PromptCondition& condition) const {
    validate(condition);
    if (condition.method != Method::baseline_direct && condition.method != Method::roleplay_only)
        throw RoleMismatch("direct prompt requested under " + method_name(condition.method));
    return assemble(templates_, session, condition, templates_.get("direct.request"), std::nullopt);
}

}  // namespace ocean::prompting
