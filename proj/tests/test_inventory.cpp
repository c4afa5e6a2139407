#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "ocean/inventory.hpp"
#include "ocean/util.hpp"

using namespace ocean;
using inventory::Instrument;
using inventory::ResponseSheet;
using inventory::ScorePolicy;

namespace {

std::filesystem::path repo_root() {
    const char* root = std::getenv("OCEAN_REPO_ROOT");
    REQUIRE(root != nullptr);
    return root;
}

// independent reading of the key file: index -> (domain letter, reverse flag)
std::map<int, std::pair<char, bool>> read_key_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::map<int, std::pair<char, bool>> key;
    int index;
    std::string domain, keying;
    while (in >> index >> domain >> keying)
        key[index] = {domain[0], keying == "R"};
    return key;
}

ResponseSheet uniform_sheet(int choice) {
    ResponseSheet sheet;
    for (int i = 1; i <= 60; ++i) sheet[i] = choice;
    return sheet;
}

}  // namespace

TEST_CASE("bundled instrument has 60 items, 12 per domain") {
    const Instrument& inst = Instrument::bundled();
    REQUIRE(inst.items().size() == 60);
    for (int i = 1; i <= 60; ++i) {
        CHECK(inst.item(i).index == i);
        CHECK(inst.items()[static_cast<std::size_t>(i - 1)].index == i);
    }
    for (Domain d : kDomains) {
        CHECK(inst.domain_items(d).size() == 12);
        int reversed = 0;
        for (const inventory::Item* item : inst.domain_items(d)) {
            CHECK(item->domain == d);
            if (item->reverse) ++reversed;
        }
        // balanced keying is what makes uniform sheets score to the midpoint
        CHECK(reversed == 6);
    }
    CHECK(inventory::item_texts().size() == 60);
    CHECK(inst.item(1).text == "Is outgoing, sociable.");
    CHECK(inst.item(1).domain == Domain::extraversion);
    CHECK_FALSE(inst.item(1).reverse);
    CHECK(inst.item(5).text == "Has few artistic interests.");
    CHECK(inst.item(5).domain == Domain::open_mindedness);
    CHECK(inst.item(5).reverse);
    CHECK(inst.item(11).text == "Rarely feels excited or eager.");
    CHECK(inst.item(11).domain == Domain::extraversion);
    CHECK(inst.item(11).reverse);
    CHECK_THROWS_AS(inst.item(0), std::invalid_argument);
    CHECK_THROWS_AS(inst.item(61), std::invalid_argument);
}

TEST_CASE("keyed values reverse as 6 - choice") {
    const Instrument& inst = Instrument::bundled();
    for (const inventory::Item& item : inst.items()) {
        for (int c = 1; c <= 5; ++c) {
            int keyed = Instrument::keyed_value(item, c);
            CHECK(keyed == (item.reverse ? 6 - c : c));
            CHECK(Instrument::keyed_value(item, keyed) == (item.reverse ? c : keyed));
        }
    }
    CHECK_THROWS_AS(Instrument::keyed_value(inst.item(1), 0), std::invalid_argument);
    CHECK_THROWS_AS(Instrument::keyed_value(inst.item(1), 6), std::invalid_argument);
}

TEST_CASE("uniform sheets score to known values") {
    const Instrument& inst = Instrument::bundled();
    for (Domain d : kDomains) {
        CHECK(inst.score_responses(uniform_sheet(3), ScorePolicy::strict).get(d) == 3.0);
        // 6 reverse + 6 forward per domain pull the extremes back to the midpoint
        CHECK(inst.score_responses(uniform_sheet(1), ScorePolicy::strict).get(d) == 3.0);
        CHECK(inst.score_responses(uniform_sheet(5), ScorePolicy::strict).get(d) == 3.0);
    }

    ResponseSheet high, low;
    for (const inventory::Item& item : inst.items()) {
        high[item.index] = item.reverse ? 1 : 5;
        low[item.index] = item.reverse ? 5 : 1;
    }
    for (Domain d : kDomains) {
        CHECK(inst.score_responses(high, ScorePolicy::strict).get(d) == 5.0);
        CHECK(inst.score_responses(low, ScorePolicy::strict).get(d) == 1.0);
    }

    ResponseSheet bumped = uniform_sheet(3);
    bumped[1] = 5;  // item 1 is forward-keyed extraversion
    CHECK(inst.score_responses(bumped, ScorePolicy::strict).get(Domain::extraversion) == 38.0 / 12.0);
    bumped = uniform_sheet(3);
    bumped[11] = 5;  // item 11 is reverse-keyed extraversion
    CHECK(inst.score_responses(bumped, ScorePolicy::strict).get(Domain::extraversion) == 34.0 / 12.0);
}

TEST_CASE("scoring matches a brute-force oracle on 1000 random sheets") {
    const Instrument& inst = Instrument::bundled();
    auto key = read_key_tsv(repo_root() / "data" / "bfi2_key.tsv");
    REQUIRE(key.size() == 60);

    std::mt19937_64 rng(20240817);
    std::uniform_int_distribution<int> choice(1, 5);
    auto started = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 1000; ++trial) {
        ResponseSheet sheet;
        for (int i = 1; i <= 60; ++i) sheet[i] = choice(rng);
        TraitScores scored = inst.score_responses(sheet, ScorePolicy::strict);
        for (Domain d : kDomains) {
            double sum = 0;
            int count = 0;
            for (const auto& [index, c] : sheet) {
                auto [letter, reverse] = key.at(index);
                if (domain_from_letter(letter) != d) continue;
                sum += reverse ? 6 - c : c;
                ++count;
            }
            REQUIRE(count == 12);
            REQUIRE(std::fabs(scored.get(d) - sum / 12.0) <= 1e-12);
        }
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    CHECK(elapsed < 5.0);
}

TEST_CASE("strict scoring rejects incomplete sheets, prorate fills in") {
    const Instrument& inst = Instrument::bundled();
    ResponseSheet sheet = uniform_sheet(3);
    sheet.erase(1);
    CHECK_THROWS_AS(inst.score_responses(sheet, ScorePolicy::strict), inventory::IncompleteSheet);
    try {
        inst.score_responses(sheet, ScorePolicy::strict);
    } catch (const inventory::IncompleteSheet& e) {
        CHECK(e.domain == Domain::extraversion);
        CHECK(e.answered_count == 11);
        CHECK(std::string(e.what()) == "incomplete sheet: domain E has 11 answers");
    }
    CHECK(inst.score_responses(sheet, ScorePolicy::prorate).get(Domain::extraversion) == 3.0);

    // drop extraversion items down to the prorate floor and below it
    ResponseSheet ten = uniform_sheet(3);
    ten.erase(1);
    ten.erase(6);
    CHECK(inst.score_responses(ten, ScorePolicy::prorate, 10).get(Domain::extraversion) == 3.0);
    ten.erase(11);
    CHECK_THROWS_AS(inst.score_responses(ten, ScorePolicy::prorate, 10),
                    inventory::IncompleteSheet);
    try {
        inst.score_responses(ten, ScorePolicy::prorate, 10);
    } catch (const inventory::IncompleteSheet& e) {
        CHECK(e.answered_count == 9);
    }
}

TEST_CASE("scoring validates indices and choices") {
    const Instrument& inst = Instrument::bundled();
    CHECK_THROWS_AS(inst.score_responses({{0, 3}}, ScorePolicy::prorate, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(inst.score_responses({{61, 3}}, ScorePolicy::prorate, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(inst.score_responses({{1, 0}}, ScorePolicy::prorate, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(inst.score_responses({{1, 6}}, ScorePolicy::prorate, 0),
                    std::invalid_argument);
}

TEST_CASE("target choices round toward the trait value") {
    const Instrument& inst = Instrument::bundled();
    const inventory::Item& forward = inst.item(1);   // extraversion, forward
    const inventory::Item& reverse = inst.item(11);  // extraversion, reverse

    TraitScores t;
    t.e = 3.0;
    CHECK(Instrument::target_choice_for_item(forward, t) == 3);
    CHECK(Instrument::target_choice_for_item(reverse, t) == 3);
    t.e = 4.6;
    CHECK(Instrument::target_choice_for_item(forward, t) == 5);
    CHECK(Instrument::target_choice_for_item(reverse, t) == 1);  // 6 - 4.6 rounds to 1
    t.e = 2.5;
    CHECK(Instrument::target_choice_for_item(forward, t) == 3);  // half rounds away from zero
    CHECK(Instrument::target_choice_for_item(reverse, t) == 4);  // 6 - 2.5 = 3.5 -> 4

    for (const inventory::Item& item : inst.items()) {
        int previous = item.reverse ? 6 : 0;
        for (double v = 1.0; v <= 5.0 + 1e-9; v += 0.1) {
            TraitScores traits;
            traits.set(item.domain, v);
            int choice = Instrument::target_choice_for_item(item, traits);
            CHECK(choice >= 1);
            CHECK(choice <= 5);
            if (item.reverse)
                CHECK(choice <= previous);
            else
                CHECK(choice >= previous);
            previous = choice;
        }
    }
}

TEST_CASE("half-step latents are exact fixed points of target choice then scoring") {
    const Instrument& inst = Instrument::bundled();

    // every domain pinned to the same grid value
    for (double v = 1.5; v <= 4.5 + 1e-9; v += 0.5) {
        TraitScores latent;
        for (Domain d : kDomains) latent.set(d, v);
        ResponseSheet sheet;
        for (const inventory::Item& item : inst.items())
            sheet[item.index] = Instrument::target_choice_for_item(item, latent);
        TraitScores scored = inst.score_responses(sheet, ScorePolicy::strict);
        for (Domain d : kDomains) CHECK(scored.get(d) == v);
    }

    // and a mixed profile
    TraitScores latent;
    latent.o = 1.5;
    latent.c = 4.5;
    latent.e = 2.0;
    latent.a = 3.5;
    latent.n = 3.0;
    ResponseSheet sheet;
    for (const inventory::Item& item : inst.items())
        sheet[item.index] = Instrument::target_choice_for_item(item, latent);
    CHECK(inst.score_responses(sheet, ScorePolicy::strict) == latent);
}

TEST_CASE("key file on disk matches the embedded key") {
    std::filesystem::path path = repo_root() / "data" / "bfi2_key.tsv";
    CHECK(util::sha256_hex(util::read_file(path)) == inventory::kKeyFileSha256);

    Instrument from_file = Instrument::from_key_file(path);
    const Instrument& bundled = Instrument::bundled();
    REQUIRE(from_file.items().size() == bundled.items().size());
    for (std::size_t i = 0; i < bundled.items().size(); ++i) {
        CHECK(from_file.items()[i].index == bundled.items()[i].index);
        CHECK(from_file.items()[i].text == bundled.items()[i].text);
        CHECK(from_file.items()[i].domain == bundled.items()[i].domain);
        CHECK(from_file.items()[i].reverse == bundled.items()[i].reverse);
    }
}

TEST_CASE("tampered key files are rejected") {
    std::string content = util::read_file(repo_root() / "data" / "bfi2_key.tsv");
    std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "ocean-test-inventory";
    std::filesystem::create_directories(dir);

    std::string flipped = content;
    flipped[0] = flipped[0] == '1' ? '2' : '1';
    util::write_file_atomic(dir / "flipped.tsv", flipped);
    CHECK_THROWS_AS(Instrument::from_key_file(dir / "flipped.tsv"), inventory::KeyFileCorrupt);
    CHECK_THROWS_WITH_AS(Instrument::from_key_file(dir / "flipped.tsv"),
                         "key file corrupt: checksum mismatch", inventory::KeyFileCorrupt);

    util::write_file_atomic(dir / "truncated.tsv", content.substr(0, content.size() / 2));
    CHECK_THROWS_AS(Instrument::from_key_file(dir / "truncated.tsv"), inventory::KeyFileCorrupt);
    std::filesystem::remove_all(dir);
}
