#include "ocean/synth.hpp"

#include <array>
#include <cstdio>

#include "ocean/inventory.hpp"
#include "ocean/rng.hpp"

namespace ocean::synth {

namespace {

// generic counseling-flavored stubs; one client line carries an anonymization
// marker so audit fixtures have a suppressed case to exercise
const std::array<const char*, 12> kCounselorLines = {
    "Welcome back. How have things been since we last spoke?",
    "Can you tell me more about what that felt like?",
    "It sounds like that situation put you under real pressure.",
    "When you notice that feeling, what do you usually do next?",
    "Let's slow down for a moment and look at what happened first.",
    "What would a good outcome look like for you here?",
    "You mentioned your family earlier. How do they fit into this?",
    "That is a very understandable reaction given the circumstances.",
    "Have you been able to keep up the routine we discussed?",
    "What do you think is the hardest part of this for you?",
    "I hear you saying that the mornings are the most difficult.",
    "Before we finish, is there anything else on your mind today?",
};

const std::array<const char*, 12> kClientLines = {
    "Honestly, it has been a rough couple of weeks.",
    "I keep going over the same argument in my head.",
    "Work has been busy, and I have not slept well.",
    "I tried the breathing exercise, and it helped a little.",
    "Sometimes I just want to stay in bed all day.",
    "My sister called me, and we talked for a long time.",
    "I am worried that I will let everyone down again.",
    "It felt good to finish something for once.",
    "I do not really know how to explain it.",
    "You can reach me at [PHONE] if the appointment changes.",
    "Lately I have been avoiding my friends.",
    "I guess part of me is afraid of what happens next.",
};

std::string padded(int value, int width) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*d", width, value);
    return buf;
}

}  // namespace

std::vector<corpus::Session> simulate_corpus(const SynthConfig& config) {
    const inventory::Instrument& instrument = inventory::Instrument::bundled();
    std::vector<corpus::Session> out;
    out.reserve(static_cast<std::size_t>(config.n_sessions));

    for (int i = 0; i < config.n_sessions; ++i) {
        rng::Stream stream(rng::mix64(config.seed ^ rng::fnv1a64("synth-session") ^
                                      rng::mix64(static_cast<std::uint64_t>(i))));
        corpus::Session session;
        session.session_id = "synth-" + padded(i + 1, 4);
        session.client_id =
            "client-" + padded(1 + static_cast<int>(stream.next_below(
                                       static_cast<std::uint64_t>(config.n_clients))),
                               2);
        session.counselor_id =
            "counselor-" + padded(1 + static_cast<int>(stream.next_below(
                                          static_cast<std::uint64_t>(config.n_counselors))),
                                  1);

        TraitScores latent;
        for (Domain d : kDomains) latent.set(d, 1.5 + 0.5 * static_cast<double>(stream.next_below(7)));

        inventory::ResponseSheet truth;
        for (const inventory::Item& item : instrument.items())
            truth[item.index] = inventory::Instrument::target_choice_for_item(item, latent);
        session.item_ground_truth = truth;
        session.ground_truth =
            instrument.score_responses(truth, inventory::ScorePolicy::strict);

        int n_utterances = 8 + static_cast<int>(stream.next_below(13));
        bool client_first = stream.next_unit() < 0.10;
        corpus::Speaker speaker =
            client_first ? corpus::Speaker::client : corpus::Speaker::counselor;
        for (int u = 0; u < n_utterances; ++u) {
            corpus::Utterance utt;
            utt.speaker = speaker;
            if (speaker == corpus::Speaker::counselor)
                utt.text = kCounselorLines[stream.next_below(kCounselorLines.size())];
            else
                utt.text = kClientLines[stream.next_below(kClientLines.size())];
            session.utterances.push_back(std::move(utt));
            if (stream.next_unit() >= 0.15)
                speaker = speaker == corpus::Speaker::client ? corpus::Speaker::counselor
                                                             : corpus::Speaker::client;
        }
        out.push_back(std::move(session));
    }
    return out;
}

}  // namespace ocean::synth
