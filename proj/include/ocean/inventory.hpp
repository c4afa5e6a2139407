#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/traits.hpp"

// BFI-2 questionnaire: 60 items, 12 per domain, 5-point options,
// reverse-keyed items scored as 6 - choice, domain score = item mean.

namespace ocean::inventory {

struct Item {
    int index = 0;  // 1..60
    std::string text;
    Domain domain = Domain::open_mindedness;
    bool reverse = false;
};

// item index -> chosen option 1..5 (missing entries = unanswered)
using ResponseSheet = std::map<int, int>;

enum class ScorePolicy { strict, prorate };

class KeyFileCorrupt : public std::runtime_error {
  public:
    explicit KeyFileCorrupt(const std::string& why) : std::runtime_error("key file corrupt: " + why) {}
};

class IncompleteSheet : public std::runtime_error {
  public:
    IncompleteSheet(Domain d, int answered)
        : std::runtime_error("incomplete sheet: domain " + std::string(1, domain_letter(d)) +
                             " has " + std::to_string(answered) + " answers"),
          domain(d),
          answered_count(answered) {}
    Domain domain;
    int answered_count;
};

class Instrument {
  public:
    // embedded copy of the bundled key, checksum-verified on first use
    static const Instrument& bundled();
    static Instrument from_key_file(const std::filesystem::path& path);

    const std::vector<Item>& items() const { return items_; }
    const Item& item(int index) const;
    const std::vector<const Item*>& domain_items(Domain d) const;

    static int keyed_value(const Item& item, int choice);
    TraitScores score_responses(const ResponseSheet& sheet, ScorePolicy policy,
                                int min_items_per_domain = 10) const;
    static int target_choice_for_item(const Item& item, const TraitScores& traits);

  private:
    explicit Instrument(const std::string& key_file_content);
    std::vector<Item> items_;
    std::vector<std::vector<const Item*>> by_domain_;
};

// expected SHA-256 of the key file bytes (also recorded in docs/bfi2_key.md)
inline constexpr const char* kKeyFileSha256 =
    "d8b5757ed54a1d1af34f58691f1fc1fc2e5f479a7ddb1dcad1a2ed8531dadedd";

// the 60 canonical item texts, index 0 = item 1
extern const std::vector<std::string>& item_texts();

}  // namespace ocean::inventory
