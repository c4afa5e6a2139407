#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/inventory.hpp"
#include "ocean/traits.hpp"

namespace ocean::corpus {

enum class Speaker { counselor, client };

std::string speaker_name(Speaker s);
Speaker speaker_from_name(const std::string& name);

struct Utterance {
    Speaker speaker = Speaker::counselor;
    std::string text;
    bool operator==(const Utterance&) const = default;
};

struct Session {
    std::string session_id;
    std::string client_id;
    std::string counselor_id;
    std::vector<Utterance> utterances;
    std::optional<TraitScores> ground_truth;
    std::optional<inventory::ResponseSheet> item_ground_truth;
    bool operator==(const Session&) const = default;
};

struct CorpusStats {
    std::size_t n_sessions = 0;
    std::size_t n_utterances_total = 0;
    std::size_t n_utterances_counselor = 0;
    std::size_t n_utterances_client = 0;
    double avg_utterances_per_dialogue = 0;
    double avg_length_per_utterance = 0;  // unicode code points
    double avg_sessions_per_client = 0;
};

struct SplitResult {
    std::vector<Session> train;
    std::vector<Session> validation;
};

struct AnonFinding {
    std::size_t utterance_index = 0;
    std::string kind;  // "digit_run" or "email_like"
    std::string excerpt;
};

class MalformedRecord : public std::runtime_error {
  public:
    MalformedRecord(std::size_t line, const std::string& why)
        : std::runtime_error("line " + std::to_string(line) + ": " + why), line_number(line) {}
    std::size_t line_number;
};

class DuplicateSessionId : public std::runtime_error {
  public:
    explicit DuplicateSessionId(const std::string& id)
        : std::runtime_error("duplicate session_id: " + id), session_id(id) {}
    std::string session_id;
};

class InconsistentGroundTruth : public std::runtime_error {
  public:
    InconsistentGroundTruth(const std::string& id, Domain d, double delta_)
        : std::runtime_error("session " + id + ": item answers score to a different " +
                             domain_name(d) + " value (delta " + std::to_string(delta_) + ")"),
          session_id(id),
          domain(d),
          delta(delta_) {}
    std::string session_id;
    Domain domain;
    double delta;
};

class InvalidFraction : public std::runtime_error {
  public:
    explicit InvalidFraction(double f)
        : std::runtime_error("invalid fraction: " + std::to_string(f)) {}
};

class EmptyCorpus : public std::runtime_error {
  public:
    EmptyCorpus() : std::runtime_error("corpus has no sessions") {}
};

// JSONL, one session object per line
std::vector<Session> load_sessions(const std::filesystem::path& path);
void save_sessions(const std::vector<Session>& sessions, const std::filesystem::path& path);

std::string session_to_json_line(const Session& session);
Session session_from_json_line(const std::string& line, std::size_t line_number);

// keeps the first max(1, ceil(fraction * n)) utterances
Session truncate(const Session& session, double fraction);

// seeded shuffle; |validation| = round(fraction * n). With group_by_client the
// validation side takes whole-client groups until the target size is reached.
SplitResult split(const std::vector<Session>& sessions, double validation_fraction,
                  std::uint64_t seed, bool group_by_client = false);

CorpusStats corpus_stats(const std::vector<Session>& sessions);

// markdown table of corpus statistics with counselor/client breakdowns
std::string stats_markdown(const std::vector<Session>& sessions);

// flags utterances that carry no anonymization marker yet look like they
// contain an identifier (7+ digit runs, tokens with '@')
std::vector<AnonFinding> audit_anonymization(const Session& session,
                                             const std::vector<std::string>& markers);

}  // namespace ocean::corpus
