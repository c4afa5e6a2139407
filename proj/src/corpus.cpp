#include "ocean/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "ocean/rng.hpp"
#include "ocean/util.hpp"

using nlohmann::json;

namespace ocean::corpus {

std::string speaker_name(Speaker s) { return s == Speaker::counselor ? "counselor" : "client"; }

Speaker speaker_from_name(const std::string& name) {
    if (name == "counselor") return Speaker::counselor;
    if (name == "client") return Speaker::client;
    throw std::invalid_argument("unknown speaker: " + name);
}

namespace {

const std::set<std::string> kSessionKeys = {"session_id", "client_id", "counselor_id",
                                            "utterances", "ground_truth", "item_ground_truth"};

void check_ground_truth_consistency(const Session& s) {
    if (!s.ground_truth || !s.item_ground_truth) return;
    // full sheets verify strictly; sparse ones over whatever is answered
    TraitScores scored = inventory::Instrument::bundled().score_responses(
        *s.item_ground_truth,
        s.item_ground_truth->size() == 60 ? inventory::ScorePolicy::strict
                                          : inventory::ScorePolicy::prorate,
        1);
    for (Domain d : kDomains) {
        double delta = std::fabs(scored.get(d) - s.ground_truth->get(d));
        if (delta > 1e-9) throw InconsistentGroundTruth(s.session_id, d, delta);
    }
}

}  // namespace

Session session_from_json_line(const std::string& line, std::size_t line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw MalformedRecord(line_number, std::string("not valid json: ") + e.what());
    }
    if (!j.is_object()) throw MalformedRecord(line_number, "record is not an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!kSessionKeys.count(it.key()))
            throw MalformedRecord(line_number, "unknown field: " + it.key());
    for (const char* req : {"session_id", "client_id", "counselor_id", "utterances"})
        if (!j.contains(req)) throw MalformedRecord(line_number, std::string("missing field: ") + req);

    Session s;
    try {
        s.session_id = j.at("session_id").get<std::string>();
        s.client_id = j.at("client_id").get<std::string>();
        s.counselor_id = j.at("counselor_id").get<std::string>();
        if (!j.at("utterances").is_array() || j.at("utterances").empty())
            throw MalformedRecord(line_number, "utterances must be a non-empty array");
        for (const auto& u : j.at("utterances")) {
            if (!u.is_object() || !u.contains("speaker") || !u.contains("text") || u.size() != 2)
                throw MalformedRecord(line_number, "utterance needs exactly speaker and text");
            Utterance ut;
            ut.speaker = speaker_from_name(u.at("speaker").get<std::string>());
            ut.text = u.at("text").get<std::string>();
            s.utterances.push_back(std::move(ut));
        }
        if (j.contains("ground_truth")) {
            const auto& g = j.at("ground_truth");
            if (!g.is_object() || g.size() != 5)
                throw MalformedRecord(line_number, "ground_truth needs exactly O,C,E,A,N");
            TraitScores t;
            for (Domain d : kDomains) {
                std::string key(1, domain_letter(d));
                if (!g.contains(key)) throw MalformedRecord(line_number, "ground_truth missing " + key);
                double v = g.at(key).get<double>();
                if (v < 1.0 || v > 5.0)
                    throw MalformedRecord(line_number, "ground_truth " + key + " outside [1,5]");
                t.set(d, v);
            }
            s.ground_truth = t;
        }
        if (j.contains("item_ground_truth")) {
            const auto& ig = j.at("item_ground_truth");
            if (!ig.is_object() || ig.empty())
                throw MalformedRecord(line_number, "item_ground_truth must be a non-empty object");
            inventory::ResponseSheet sheet;
            for (auto it = ig.begin(); it != ig.end(); ++it) {
                int index = 0;
                try {
                    std::size_t used = 0;
                    index = std::stoi(it.key(), &used);
                    if (used != it.key().size()) throw std::invalid_argument(it.key());
                } catch (const std::exception&) {
                    throw MalformedRecord(line_number, "item_ground_truth key not an index: " + it.key());
                }
                if (index < 1 || index > 60)
                    throw MalformedRecord(line_number, "item index outside 1..60: " + it.key());
                int v = it.value().get<int>();
                if (v < 1 || v > 5)
                    throw MalformedRecord(line_number, "item answer outside 1..5 for item " + it.key());
                sheet[index] = v;
            }
            s.item_ground_truth = std::move(sheet);
        }
    } catch (const MalformedRecord&) {
        throw;
    } catch (const json::exception& e) {
        throw MalformedRecord(line_number, std::string("bad field type: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw MalformedRecord(line_number, e.what());
    }

    try {
        check_ground_truth_consistency(s);
    } catch (const inventory::IncompleteSheet&) {
        throw MalformedRecord(line_number, "item_ground_truth has a domain with no answers");
    }
    return s;
}

std::string session_to_json_line(const Session& s) {
    json j;
    j["session_id"] = s.session_id;
    j["client_id"] = s.client_id;
    j["counselor_id"] = s.counselor_id;
    j["utterances"] = json::array();
    for (const Utterance& u : s.utterances)
        j["utterances"].push_back({{"speaker", speaker_name(u.speaker)}, {"text", u.text}});
    if (s.ground_truth) {
        json g;
        for (Domain d : kDomains) g[std::string(1, domain_letter(d))] = s.ground_truth->get(d);
        j["ground_truth"] = g;
    }
    if (s.item_ground_truth) {
        json ig;
        for (const auto& [index, v] : *s.item_ground_truth) ig[std::to_string(index)] = v;
        j["item_ground_truth"] = ig;
    }
    return j.dump();
}

std::vector<Session> load_sessions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus: " + path.string());
    std::vector<Session> out;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (util::trim(line).empty()) continue;
        Session s = session_from_json_line(line, line_number);
        if (!ids.insert(s.session_id).second) throw DuplicateSessionId(s.session_id);
        out.push_back(std::move(s));
    }
    return out;
}

void save_sessions(const std::vector<Session>& sessions, const std::filesystem::path& path) {
    std::ostringstream ss;
    for (const Session& s : sessions) ss << session_to_json_line(s) << '\n';
    util::write_file_atomic(path, ss.str());
}

Session truncate(const Session& session, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) throw InvalidFraction(fraction);
    std::size_t n = session.utterances.size();
    // tolerance keeps ceil faithful to real arithmetic (0.1 * 30 must give 3, not 4)
    auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    k = std::max<std::size_t>(1, std::min(k, n));
    Session out = session;
    out.utterances.assign(session.utterances.begin(), session.utterances.begin() + static_cast<long>(k));
    return out;
}

SplitResult split(const std::vector<Session>& sessions, double validation_fraction,
                  std::uint64_t seed, bool group_by_client) {
    if (validation_fraction < 0.0 || validation_fraction > 1.0)
        throw InvalidFraction(validation_fraction);
    std::size_t n = sessions.size();
    auto target = static_cast<std::size_t>(
        util::round_half_away(validation_fraction * static_cast<double>(n)));

    rng::Stream stream(seed);
    std::vector<char> in_validation(n, 0);

    if (!group_by_client) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[stream.next_below(i)]);
        for (std::size_t i = 0; i < target; ++i) in_validation[order[i]] = 1;
    } else {
        std::vector<std::string> clients;
        std::map<std::string, std::vector<std::size_t>> by_client;
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, fresh] = by_client.try_emplace(sessions[i].client_id);
            if (fresh) clients.push_back(sessions[i].client_id);
            it->second.push_back(i);
        }
        for (std::size_t i = clients.size(); i > 1; --i)
            std::swap(clients[i - 1], clients[stream.next_below(i)]);
        std::size_t taken = 0;
        for (const std::string& c : clients) {
            if (taken >= target) break;
            for (std::size_t idx : by_client[c]) in_validation[idx] = 1;
            taken += by_client[c].size();
        }
    }

    SplitResult out;
    for (std::size_t i = 0; i < n; ++i)
        (in_validation[i] ? out.validation : out.train).push_back(sessions[i]);
    return out;
}

CorpusStats corpus_stats(const std::vector<Session>& sessions) {
    if (sessions.empty()) throw EmptyCorpus();
    CorpusStats st;
    st.n_sessions = sessions.size();
    std::size_t total_chars = 0;
    std::set<std::string> clients;
    for (const Session& s : sessions) {
        clients.insert(s.client_id);
        for (const Utterance& u : s.utterances) {
            ++st.n_utterances_total;
            if (u.speaker == Speaker::counselor)
                ++st.n_utterances_counselor;
            else
                ++st.n_utterances_client;
            total_chars += util::utf8_length(u.text);
        }
    }
    st.avg_utterances_per_dialogue =
        static_cast<double>(st.n_utterances_total) / static_cast<double>(st.n_sessions);
    st.avg_length_per_utterance =
        st.n_utterances_total == 0
            ? 0.0
            : static_cast<double>(total_chars) / static_cast<double>(st.n_utterances_total);
    st.avg_sessions_per_client =
        static_cast<double>(st.n_sessions) / static_cast<double>(clients.size());
    return st;
}

std::string stats_markdown(const std::vector<Session>& sessions) {
    CorpusStats st = corpus_stats(sessions);
    std::size_t counselor_chars = 0, client_chars = 0;
    std::set<std::string> clients, counselors;
    std::size_t counselor_utts = 0, client_utts = 0;
    for (const Session& s : sessions) {
        clients.insert(s.client_id);
        counselors.insert(s.counselor_id);
        for (const Utterance& u : s.utterances) {
            if (u.speaker == Speaker::counselor) {
                ++counselor_utts;
                counselor_chars += util::utf8_length(u.text);
            } else {
                ++client_utts;
                client_chars += util::utf8_length(u.text);
            }
        }
    }
    auto per = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    std::ostringstream os;
    os << "| Statistic | Total | Counselor | Client |\n";
    os << "| --- | --- | --- | --- |\n";
    os << "| # Sessions | " << st.n_sessions << " | - | - |\n";
    os << "| # Speakers | " << clients.size() + counselors.size() << " | " << counselors.size()
       << " | " << clients.size() << " |\n";
    os << "| # Avg. sessions per speaker | - | "
       << util::format_fixed(per(st.n_sessions, counselors.size()), 2) << " | "
       << util::format_fixed(per(st.n_sessions, clients.size()), 2) << " |\n";
    os << "| # Utterances | " << st.n_utterances_total << " | " << counselor_utts << " | "
       << client_utts << " |\n";
    os << "| # Avg. utterances per dialogue | "
       << util::format_fixed(st.avg_utterances_per_dialogue, 2) << " | "
       << util::format_fixed(per(counselor_utts, st.n_sessions), 2) << " | "
       << util::format_fixed(per(client_utts, st.n_sessions), 2) << " |\n";
    os << "| Avg. length per utterance | " << util::format_fixed(st.avg_length_per_utterance, 2)
       << " | " << util::format_fixed(per(counselor_chars, counselor_utts), 2) << " | "
       << util::format_fixed(per(client_chars, client_utts), 2) << " |\n";
    return os.str();
}

std::vector<AnonFinding> audit_anonymization(const Session& session,
                                             const std::vector<std::string>& markers) {
    std::vector<AnonFinding> findings;
    for (std::size_t i = 0; i < session.utterances.size(); ++i) {
        const std::string& text = session.utterances[i].text;
        bool marked = false;
        for (const std::string& m : markers)
            if (!m.empty() && text.find(m) != std::string::npos) {
                marked = true;
                break;
            }
        if (marked) continue;

        // digit runs of 7 or more
        std::size_t run_start = 0, run_len = 0;
        bool digit_hit = false;
        for (std::size_t p = 0; p <= text.size(); ++p) {
            if (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
                if (run_len == 0) run_start = p;
                ++run_len;
            } else {
                if (run_len >= 7 && !digit_hit) {
                    findings.push_back({i, "digit_run", text.substr(run_start, run_len)});
                    digit_hit = true;
                }
                run_len = 0;
            }
        }

        // tokens containing '@'
        std::istringstream ss(text);
        std::string token;
        while (ss >> token) {
            if (token.size() > 1 && token.find('@') != std::string::npos) {
                findings.push_back({i, "email_like", token});
                break;
            }
        }
    }
    return findings;
}

}  // namespace ocean::corpus
