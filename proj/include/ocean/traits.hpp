#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace ocean {

enum class Domain { open_mindedness, conscientiousness, extraversion, agreeableness, negative_emotionality };

inline constexpr std::array<Domain, 5> kDomains = {
    Domain::open_mindedness, Domain::conscientiousness, Domain::extraversion,
    Domain::agreeableness, Domain::negative_emotionality};

inline char domain_letter(Domain d) {
    switch (d) {
        case Domain::open_mindedness: return 'O';
        case Domain::conscientiousness: return 'C';
        case Domain::extraversion: return 'E';
        case Domain::agreeableness: return 'A';
        case Domain::negative_emotionality: return 'N';
    }
    throw std::logic_error("bad domain");
}

inline std::string domain_name(Domain d) {
    switch (d) {
        case Domain::open_mindedness: return "Open Mindedness";
        case Domain::conscientiousness: return "Conscientiousness";
        case Domain::extraversion: return "Extraversion";
        case Domain::agreeableness: return "Agreeableness";
        case Domain::negative_emotionality: return "Negative Emotionality";
    }
    throw std::logic_error("bad domain");
}

inline Domain domain_from_letter(char c) {
    switch (c) {
        case 'O': return Domain::open_mindedness;
        case 'C': return Domain::conscientiousness;
        case 'E': return Domain::extraversion;
        case 'A': return Domain::agreeableness;
        case 'N': return Domain::negative_emotionality;
    }
    throw std::invalid_argument(std::string("unknown trait letter: ") + c);
}

// One value per Big Five domain, on the instrument's 1..5 scale.
struct TraitScores {
    double o = 0, c = 0, e = 0, a = 0, n = 0;

    double get(Domain d) const {
        switch (d) {
            case Domain::open_mindedness: return o;
            case Domain::conscientiousness: return c;
            case Domain::extraversion: return e;
            case Domain::agreeableness: return a;
            case Domain::negative_emotionality: return n;
        }
        throw std::logic_error("bad domain");
    }

    void set(Domain d, double v) {
        switch (d) {
            case Domain::open_mindedness: o = v; return;
            case Domain::conscientiousness: c = v; return;
            case Domain::extraversion: e = v; return;
            case Domain::agreeableness: a = v; return;
            case Domain::negative_emotionality: n = v; return;
        }
        throw std::logic_error("bad domain");
    }

    bool in_range() const {
        for (Domain d : kDomains) {
            double v = get(d);
            if (v < 1.0 || v > 5.0) return false;
        }
        return true;
    }

    bool operator==(const TraitScores&) const = default;
};

}  // namespace ocean
