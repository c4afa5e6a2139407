#include "ocean/inventory.hpp"

#include <array>
#include <sstream>

#include "ocean/util.hpp"

namespace ocean::inventory {

namespace {

// byte-for-byte copy of data/bfi2_key.tsv
constexpr const char* kEmbeddedKey =
    "1\tE\t+\n2\tA\t+\n3\tC\tR\n4\tN\tR\n5\tO\tR\n"
    "6\tE\t+\n7\tA\t+\n8\tC\tR\n9\tN\tR\n10\tO\t+\n"
    "11\tE\tR\n12\tA\tR\n13\tC\t+\n14\tN\t+\n15\tO\t+\n"
    "16\tE\tR\n17\tA\tR\n18\tC\t+\n19\tN\t+\n20\tO\t+\n"
    "21\tE\t+\n22\tA\tR\n23\tC\tR\n24\tN\tR\n25\tO\tR\n"
    "26\tE\tR\n27\tA\t+\n28\tC\tR\n29\tN\tR\n30\tO\tR\n"
    "31\tE\tR\n32\tA\t+\n33\tC\t+\n34\tN\t+\n35\tO\t+\n"
    "36\tE\tR\n37\tA\tR\n38\tC\t+\n39\tN\t+\n40\tO\t+\n"
    "41\tE\t+\n42\tA\tR\n43\tC\t+\n44\tN\tR\n45\tO\tR\n"
    "46\tE\t+\n47\tA\tR\n48\tC\tR\n49\tN\tR\n50\tO\tR\n"
    "51\tE\tR\n52\tA\t+\n53\tC\t+\n54\tN\t+\n55\tO\tR\n"
    "56\tE\t+\n57\tA\t+\n58\tC\tR\n59\tN\t+\n60\tO\t+\n";

}  // namespace

Instrument::Instrument(const std::string& key_file_content) {
    if (util::sha256_hex(key_file_content) != kKeyFileSha256)
        throw KeyFileCorrupt("checksum mismatch");

    const auto& texts = item_texts();
    items_.resize(60);
    std::array<bool, 61> seen{};
    for (const std::string& line : util::split_lines(key_file_content)) {
        std::istringstream ss(line);
        int index = 0;
        std::string dom, rev;
        if (!(ss >> index >> dom >> rev) || index < 1 || index > 60 ||
            dom.size() != 1 || (rev != "R" && rev != "+"))
            throw KeyFileCorrupt("bad line: " + line);
        if (seen[index]) throw KeyFileCorrupt("duplicate index " + std::to_string(index));
        seen[index] = true;
        Item& it = items_[index - 1];
        it.index = index;
        it.text = texts[index - 1];
        it.domain = domain_from_letter(dom[0]);
        it.reverse = rev == "R";
    }
    for (int i = 1; i <= 60; ++i)
        if (!seen[i]) throw KeyFileCorrupt("missing index " + std::to_string(i));

    by_domain_.resize(kDomains.size());
    for (const Item& it : items_)
        by_domain_[static_cast<std::size_t>(it.domain)].push_back(&it);
    for (const auto& group : by_domain_)
        if (group.size() != 12)
            throw KeyFileCorrupt("domain does not have 12 items");
}

const Instrument& Instrument::bundled() {
    static const Instrument inst{std::string(kEmbeddedKey)};
    return inst;
}

Instrument Instrument::from_key_file(const std::filesystem::path& path) {
    return Instrument(util::read_file(path));
}

const Item& Instrument::item(int index) const {
    if (index < 1 || index > 60) throw std::invalid_argument("item index out of range");
    return items_[static_cast<std::size_t>(index - 1)];
}

const std::vector<const Item*>& Instrument::domain_items(Domain d) const {
    return by_domain_[static_cast<std::size_t>(d)];
}

int Instrument::keyed_value(const Item& item, int choice) {
    if (choice < 1 || choice > 5) throw std::invalid_argument("choice out of range");
    return item.reverse ? 6 - choice : choice;
}

TraitScores Instrument::score_responses(const ResponseSheet& sheet, ScorePolicy policy,
                                        int min_items_per_domain) const {
    for (const auto& [index, choice] : sheet) {
        if (index < 1 || index > 60) throw std::invalid_argument("item index out of range");
        if (choice < 1 || choice > 5) throw std::invalid_argument("choice out of range");
    }
    TraitScores out;
    for (Domain d : kDomains) {
        int answered = 0;
        long sum = 0;
        for (const Item* it : domain_items(d)) {
            auto found = sheet.find(it->index);
            if (found == sheet.end()) continue;
            ++answered;
            sum += keyed_value(*it, found->second);
        }
        int required = policy == ScorePolicy::strict ? 12 : min_items_per_domain;
        if (answered < required) throw IncompleteSheet(d, answered);
        out.set(d, static_cast<double>(sum) / answered);
    }
    return out;
}

int Instrument::target_choice_for_item(const Item& item, const TraitScores& traits) {
    double d = traits.get(item.domain);
    return util::clamp_choice(item.reverse ? 6.0 - d : d);
}

}  // namespace ocean::inventory
