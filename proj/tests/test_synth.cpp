#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ocean/corpus.hpp"
#include "ocean/inventory.hpp"
#include "ocean/synth.hpp"

using namespace ocean;

TEST_CASE("synthetic corpora are deterministic in the seed") {
    synth::SynthConfig config;
    config.n_sessions = 20;
    config.seed = 123;
    std::vector<corpus::Session> a = synth::simulate_corpus(config);
    std::vector<corpus::Session> b = synth::simulate_corpus(config);
    REQUIRE(a.size() == 20);
    CHECK(a == b);

    config.seed = 124;
    CHECK(synth::simulate_corpus(config) != a);

    // the per-session stream makes the prefix independent of the total count
    synth::SynthConfig longer = config;
    longer.seed = 123;
    longer.n_sessions = 25;
    std::vector<corpus::Session> c = synth::simulate_corpus(longer);
    CHECK(std::vector<corpus::Session>(c.begin(), c.begin() + 20) == a);
}

TEST_CASE("generated sessions are well-formed and self-consistent") {
    const inventory::Instrument& inst = inventory::Instrument::bundled();
    synth::SynthConfig config;  // defaults: 80 sessions, seed 7
    std::vector<corpus::Session> sessions = synth::simulate_corpus(config);
    REQUIRE(sessions.size() == 80);

    std::set<std::string> ids;
    std::set<std::string> clients, counselors;
    std::set<double> latent_values;
    bool phone_marker_seen = false;

    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const corpus::Session& s = sessions[i];
        CHECK(s.session_id == "synth-" + std::string(i + 1 < 10 ? "000" : i + 1 < 100 ? "00" : "0") +
                                  std::to_string(i + 1));
        ids.insert(s.session_id);
        clients.insert(s.client_id);
        counselors.insert(s.counselor_id);
        CHECK(s.client_id.substr(0, 7) == "client-");
        CHECK(s.client_id.size() == 9);
        CHECK(s.counselor_id.substr(0, 10) == "counselor-");

        CHECK(s.utterances.size() >= 8);
        CHECK(s.utterances.size() <= 20);
        for (const corpus::Utterance& u : s.utterances) {
            CHECK(!u.text.empty());
            if (u.text.find("[PHONE]") != std::string::npos) {
                phone_marker_seen = true;
                CHECK(u.speaker == corpus::Speaker::client);
            }
        }

        REQUIRE(s.item_ground_truth.has_value());
        REQUIRE(s.ground_truth.has_value());
        CHECK(s.item_ground_truth->size() == 60);
        for (const auto& [index, choice] : *s.item_ground_truth) {
            CHECK(index >= 1);
            CHECK(index <= 60);
            CHECK(choice >= 1);
            CHECK(choice <= 5);
        }

        // stored summary equals a strict rescore of the stored answers, bit for bit
        TraitScores rescored =
            inst.score_responses(*s.item_ground_truth, inventory::ScorePolicy::strict);
        CHECK(rescored == *s.ground_truth);

        for (Domain d : kDomains) {
            double v = s.ground_truth->get(d);
            CHECK(v >= 1.5);
            CHECK(v <= 4.5);
            // half-integer grid: 2v is a whole number
            CHECK(std::fabs(2 * v - std::round(2 * v)) == 0.0);
            latent_values.insert(v);
        }
    }

    CHECK(ids.size() == 80);
    CHECK(clients.size() <= 8);
    CHECK(clients.size() >= 2);
    CHECK(counselors.size() <= 3);
    CHECK(phone_marker_seen);
    CHECK(latent_values.size() > 3);  // the grid is actually explored
}

TEST_CASE("synthetic corpora survive the corpus loader round-trip") {
    synth::SynthConfig config;
    config.n_sessions = 12;
    config.seed = 99;
    std::vector<corpus::Session> sessions = synth::simulate_corpus(config);

    std::filesystem::path dir = std::filesystem::temp_directory_path() / "ocean-test-synth";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::filesystem::path file = dir / "synth.jsonl";

    corpus::save_sessions(sessions, file);
    // load_sessions re-runs the ground-truth consistency check on every record
    std::vector<corpus::Session> loaded = corpus::load_sessions(file);
    CHECK(loaded == sessions);
    std::filesystem::remove_all(dir);
}
