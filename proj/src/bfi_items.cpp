#include "ocean/inventory.hpp"

namespace ocean::inventory {

// Item stems for "I am someone who ..."
const std::vector<std::string>& item_texts() {
    static const std::vector<std::string> texts = {
        "Is outgoing, sociable.",
        "Is compassionate, has a soft heart.",
        "Tends to be disorganized.",
        "Is relaxed, handles stress well.",
        "Has few artistic interests.",
        "Has an assertive personality.",
        "Is respectful, treats others with respect.",
        "Tends to be lazy.",
        "Stays optimistic after experiencing a setback.",
        "Is curious about many different things.",
        "Rarely feels excited or eager.",
        "Tends to find fault with others.",
        "Is dependable, steady.",
        "Is moody, has up and down mood swings.",
        "Is inventive, finds clever ways to do things.",
        "Tends to be quiet.",
        "Feels little sympathy for others.",
        "Is systematic, likes to keep things in order.",
        "Can be tense.",
        "Is fascinated by art, music, or literature.",
        "Is dominant, acts as a leader.",
        "Starts arguments with others.",
        "Has difficulty getting started on tasks.",
        "Feels secure, comfortable with self.",
        "Avoids intellectual, philosophical discussions.",
        "Is less active than other people.",
        "Has a forgiving nature.",
        "Can be somewhat careless.",
        "Is emotionally stable, not easily upset.",
        "Has little creativity.",
        "Is sometimes shy, introverted.",
        "Is helpful and unselfish with others.",
        "Keeps things neat and tidy.",
        "Worries a lot.",
        "Values art and beauty.",
        "Finds it hard to influence people.",
        "Is sometimes rude to others.",
        "Is efficient, gets things done.",
        "Often feels sad.",
        "Is complex, a deep thinker.",
        "Is full of energy.",
        "Is suspicious of others’ intentions.",
        "Is reliable, can always be counted on.",
        "Keeps their emotions under control.",
        "Has difficulty imagining things.",
        "Is talkative.",
        "Can be cold and uncaring.",
        "Leaves a mess, doesn’t clean up.",
        "Rarely feels anxious or afraid.",
        "Thinks poetry and plays are boring.",
        "Prefers to have others take charge.",
        "Is polite, courteous to others.",
        "Is persistent, works until the task is finished.",
        "Tends to feel depressed, blue.",
        "Has little interest in abstract ideas.",
        "Shows a lot of enthusiasm.",
        "Assumes the best about people.",
        "Sometimes behaves irresponsibly.",
        "Is temperamental, gets emotional easily.",
        "Is original, comes up with new ideas.",
    };
    return texts;
}

}  // namespace ocean::inventory
