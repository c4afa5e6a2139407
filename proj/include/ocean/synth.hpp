#pragma once

#include <cstdint>
#include <vector>

#include "ocean/corpus.hpp"

namespace ocean::synth {

// Generator for synthetic counseling sessions with known trait profiles.
// Latents sit on the half-integer grid {1.5, 2.0, ..., 4.5}; those are exact
// fixed points of scoring composed with per-item target choices, so the stored
// ground truth is reachable by a noise-free responder.
struct SynthConfig {
    int n_sessions = 80;
    std::uint64_t seed = 7;
    int n_clients = 8;
    int n_counselors = 3;
};

std::vector<corpus::Session> simulate_corpus(const SynthConfig& config);

}  // namespace ocean::synth
