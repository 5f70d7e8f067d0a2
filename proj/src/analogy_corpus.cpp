#include "semlab/analogy_corpus.hpp"

#include <array>
#include <sstream>

#include "semlab/errors.hpp"
#include "semlab/rng.hpp"

namespace semlab {

namespace {

struct PairEntry {
    const char* male;
    const char* female;
    std::array<const char*, 5> topics;
};

const std::array<PairEntry, 20> kPairs = {{
    {"king", "queen", {"throne", "crown", "castle", "kingdom", "court"}},
    {"man", "woman", {"village", "market", "road", "house", "field"}},
    {"boy", "girl", {"school", "ball", "garden", "toy", "friend"}},
    {"father", "mother", {"child", "home", "family", "dinner", "advice"}},
    {"brother", "sister", {"game", "secret", "room", "journey", "quarrel"}},
    {"uncle", "aunt", {"visit", "gift", "farm", "story", "holiday"}},
    {"prince", "princess", {"palace", "dragon", "quest", "jewel", "banquet"}},
    {"lord", "lady", {"manor", "estate", "feast", "servant", "carriage"}},
    {"actor", "actress", {"stage", "theater", "audience", "script", "curtain"}},
    {"waiter", "waitress", {"table", "menu", "kitchen", "plate", "tray"}},
    {"duke", "duchess", {"province", "title", "ceremony", "portrait", "lineage"}},
    {"emperor", "empress", {"empire", "dynasty", "decree", "temple", "conquest"}},
    {"husband", "wife", {"wedding", "ring", "promise", "household", "anniversary"}},
    {"son", "daughter", {"lesson", "inheritance", "pride", "future", "name"}},
    {"nephew", "niece", {"cousin", "summer", "letter", "mischief", "allowance"}},
    {"grandfather", "grandmother", {"memory", "wisdom", "orchard", "harvest", "winter"}},
    {"hero", "heroine", {"battle", "courage", "legend", "rescue", "triumph"}},
    {"host", "hostess", {"party", "guest", "toast", "invitation", "welcome"}},
    {"wizard", "witch", {"spell", "potion", "tower", "raven", "prophecy"}},
    {"monk", "nun", {"monastery", "prayer", "silence", "candle", "devotion"}},
}};

const std::array<const char*, 20> kVerbs = {
    "walked",  "saw",      "loved",    "found",    "praised",
    "served",  "ruled",    "visited",  "held",     "watched",
    "called",  "honored",  "greeted",  "taught",   "guarded",
    "admired", "followed", "thanked",  "remembered", "helped"};

struct Markers {
    const char* subj;
    const char* poss;
    const char* obj;
    const char* refl;
    std::array<const char*, 2> titles;
};

const Markers kMale = {"he", "his", "him", "himself", {"sir", "mister"}};
const Markers kFemale = {"she", "her", "her", "herself", {"madam", "missus"}};

}  // namespace

const std::vector<GenderPair>& gender_pairs() {
    static const std::vector<GenderPair> pairs = [] {
        std::vector<GenderPair> out;
        for (const PairEntry& p : kPairs) out.push_back({p.male, p.female});
        return out;
    }();
    return pairs;
}

const std::vector<GenderPair>& analogy_eval_pairs() {
    static const std::vector<GenderPair> pairs = {
        {"king", "queen"},     {"boy", "girl"},       {"brother", "sister"},
        {"father", "mother"},  {"prince", "princess"}};
    return pairs;
}

std::string make_gendered_corpus(std::size_t sentences, std::uint64_t seed) {
    if (sentences == 0) throw ValidationError("make_gendered_corpus: need >= 1 sentence");
    Rng rng(seed);
    std::ostringstream out;
    for (std::size_t s = 0; s < sentences; ++s) {
        const PairEntry& pair = kPairs[rng.uniform_index(kPairs.size())];
        const bool female = rng.uniform_index(2) == 1;
        const char* word = female ? pair.female : pair.male;
        const Markers& mk = female ? kFemale : kMale;
        const char* topic = pair.topics[rng.uniform_index(pair.topics.size())];
        const char* verb = kVerbs[rng.uniform_index(kVerbs.size())];
        const char* title = mk.titles[rng.uniform_index(2)];
        switch (rng.uniform_index(6)) {
            case 0:
                out << title << " " << word << " " << verb << " the " << topic;
                break;
            case 1:
                out << "the " << word << " " << verb << " " << mk.poss << " " << topic;
                break;
            case 2:
                out << title << " " << word << " " << verb << " a " << topic;
                break;
            case 3:
                out << "the " << word << " and " << mk.subj << " " << verb << " the "
                    << topic;
                break;
            case 4:
                out << mk.subj << " " << verb << " the " << word << " near the "
                    << topic;
                break;
            default:
                out << "the " << word << " " << verb << " the " << topic << " "
                    << mk.refl;
                break;
        }
        out << ".\n";
    }
    return out.str();
}

}  // namespace semlab
