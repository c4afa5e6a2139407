#include <cmath>
#include <sstream>

#include "ocean/gateway.hpp"
#include "ocean/rng.hpp"
#include "ocean/util.hpp"

namespace ocean::gateway {

namespace {

const char* kOptionLabels[5] = {
    "Disagree (strongly)", "Disagree (a little)", "Neutral (no opinion)",
    "Agree (a little)", "Agree (strongly)",
};

constexpr const char* kRefusalText = "As an AI model, I have no personality.";

std::string digit_text(int choice, bool fullwidth) {
    if (!fullwidth) return std::string(1, static_cast<char>('0' + choice));
    // U+FF11..U+FF15
    std::string out = "\xef\xbc\x90";
    out[2] = static_cast<char>(0x90 + choice);
    return out;
}

std::uint64_t salted_hash(std::uint64_t seed, const std::string& salt, const std::string& tag) {
    return seed ^ rng::fnv1a64(salt + "#" + tag);
}

double domain_noise(const SimProfile& profile, const std::string& salt, Domain d) {
    if (profile.noise_sd <= 0.0) return 0.0;
    std::uint64_t h = salted_hash(profile.seed, salt, std::string("noise#") + domain_letter(d));
    return profile.noise_sd * rng::gaussian_from_hash(h);
}

bool refuses(const SimProfile& profile, const std::string& salt, const std::string& tag) {
    if (profile.refusal_rate <= 0.0) return false;
    return rng::unit_from_hash(salted_hash(profile.seed, salt, tag)) < profile.refusal_rate;
}

}  // namespace

std::string render_item_answer(int choice, int phrasing, bool fullwidth) {
    if (choice < 1 || choice > 5) throw std::invalid_argument("choice out of range");
    std::string d = digit_text(choice, fullwidth);
    const char* label = kOptionLabels[choice - 1];
    std::ostringstream os;
    switch (phrasing % kSimulatorPhrasings) {
        case 0: os << "My choice is " << d << ". " << label << ". Reason: simulated."; break;
        case 1: os << d << ". " << label << "\nReason: simulated."; break;
        default: os << "After thinking it over I settle on " << d << " for this item. Reason: simulated."; break;
    }
    return os.str();
}

Completion simulate_item_answer(const inventory::Item& item, const SimProfile& profile,
                                const std::string& session_salt, const std::string& model_name) {
    Completion out;
    out.model_name = model_name;

    if (refuses(profile, session_salt, "refuse#" + std::to_string(item.index))) {
        out.text = kRefusalText;
        return out;
    }

    TraitScores noisy = profile.latent;
    noisy.set(item.domain, noisy.get(item.domain) + domain_noise(profile, session_salt, item.domain));
    int target = inventory::Instrument::target_choice_for_item(item, noisy);

    auto phrasing = static_cast<int>(
        rng::mix64(salted_hash(profile.seed, session_salt, "phr#" + std::to_string(item.index))) %
        kSimulatorPhrasings);
    bool fullwidth =
        rng::mix64(salted_hash(profile.seed, session_salt, "wid#" + std::to_string(item.index))) % 2 ==
        1;
    out.text = render_item_answer(target, phrasing, fullwidth);
    return out;
}

SimulatorBackend::SimulatorBackend(BackendConfig config, SimulatorOptions options,
                                   std::map<std::string, TraitScores> latents_by_session)
    : config_(std::move(config)),
      options_(std::move(options)),
      latents_(std::move(latents_by_session)) {}

SimProfile SimulatorBackend::profile_for(const std::string& session_id, double granularity) const {
    auto it = latents_.find(session_id);
    if (it == latents_.end())
        throw GatewayError("no simulator profile for session " + session_id, false);
    SimProfile profile;
    profile.latent = it->second;
    profile.noise_sd = options_.noise_sd;
    if (options_.length_dependent_noise && granularity > 0.0 && granularity < 1.0)
        profile.noise_sd = options_.noise_sd / std::sqrt(granularity);
    profile.refusal_rate = options_.refusal_rate;
    profile.seed = options_.seed;
    return profile;
}

std::string SimulatorBackend::cache_key_extra(const prompting::PromptBundle& bundle) const {
    // simulated answers depend on the session latent and item, not just the
    // rendered messages, so both go into the key to keep cache entries distinct
    std::ostringstream os;
    os << "|sim seed=" << options_.seed << " noise=" << options_.noise_sd
       << " refusal=" << options_.refusal_rate << " lennoise=" << options_.length_dependent_noise
       << " salt=" << options_.salt_suffix << " session=" << bundle.session_id
       << " item=" << (bundle.item_index ? *bundle.item_index : 0)
       << " gran=" << bundle.condition.granularity;
    return os.str();
}

Completion SimulatorBackend::complete_once(const prompting::PromptBundle& bundle) {
    SimProfile profile = profile_for(bundle.session_id, bundle.condition.granularity);
    std::string salt = bundle.session_id + options_.salt_suffix;

    if (bundle.item_index) {
        const inventory::Item& item = inventory::Instrument::bundled().item(*bundle.item_index);
        return simulate_item_answer(item, profile, salt, config_.model_name);
    }

    Completion out;
    out.model_name = config_.model_name;
    if (refuses(profile, salt, "refuse#direct")) {
        out.text = kRefusalText;
        return out;
    }
    std::ostringstream os;
    bool first = true;
    for (Domain d : kDomains) {
        double v = profile.latent.get(d) + domain_noise(profile, salt, d);
        os << (first ? "" : " ") << domain_letter(d) << "=" << util::format_fixed(v, 1);
        first = false;
    }
    os << ". Reason: simulated.";
    out.text = os.str();
    return out;
}

}  // namespace ocean::gateway
