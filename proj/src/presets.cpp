#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "semlab/analogy_corpus.hpp"
#include "semlab/errors.hpp"
#include "semlab/experiments.hpp"
#include "semlab/serialize.hpp"

namespace semlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Step {
    std::string file;
    json config;
};

std::string numbered(int no, const std::string& stem) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d_", no);
    return buf + stem + ".json";
}

json sae_section(std::size_t m, double lambda, std::size_t epochs,
                 std::size_t resample_interval = 0) {
    json j{{"m", m},
           {"lambda", lambda},
           {"epochs", epochs},
           {"batch_size", 64},
           {"lr", 1e-3}};
    if (resample_interval) j["resample_interval"] = resample_interval;
    return j;
}

std::string sk(int k) { return "_s" + std::to_string(k); }

// Dictionary recovery on easy independent data: one dataset, five seeds.
std::vector<Step> preset_recovery() {
    std::vector<Step> steps;
    int no = 1;
    steps.push_back(
        {numbered(no++, "gen_data"),
         json{{"kind", "gen-data"},
              {"seed", 42420},
              {"name", "recovery_data"},
              {"data",
               json{{"spec", json{{"n", 32},
                                  {"p", 0.02},
                                  {"structure", "independent"},
                                  {"noise_sigma", 0.0}}},
                    {"N", 50000},
                    {"d", 64},
                    {"dict_mode", "random"}}}}});
    for (int k = 0; k < 5; ++k) {
        steps.push_back({numbered(no++, "train_sae" + sk(k)),
                         json{{"kind", "train-sae"},
                              {"seed", 42421 + k},
                              {"name", "sae" + sk(k)},
                              {"data", "recovery_data.slab"},
                              {"sae", sae_section(64, 3e-3, 30)}}});
        steps.push_back({numbered(no++, "eval_recovery" + sk(k)),
                         json{{"kind", "eval-recovery"},
                              {"seed", 42421 + k},
                              {"name", "recovery" + sk(k)},
                              {"data", "recovery_data.slab"},
                              {"model", "sae" + sk(k) + ".slab"},
                              {"tau", 0.8}}});
    }
    return steps;
}

// Hierarchical data; width-matched vanilla vs Matryoshka SAEs, five seeds.
std::vector<Step> preset_absorption() {
    json edges = json::array();
    for (int p = 0; p < 4; ++p)
        for (int c = 0; c < 3; ++c) edges.push_back(json::array({p, 4 + 3 * p + c}));
    std::vector<Step> steps;
    int no = 1;
    steps.push_back({numbered(no++, "gen_data"),
                     json{{"kind", "gen-data"},
                          {"seed", 51510},
                          {"name", "hier_data"},
                          {"data",
                           json{{"spec", json{{"n", 16},
                                              {"p", 0.1},
                                              {"q", 0.3},
                                              {"structure", "hierarchical"},
                                              {"parent_edges", edges},
                                              {"noise_sigma", 0.0}}},
                                {"N", 20000},
                                {"d", 32},
                                {"dict_mode", "random"}}}}});
    for (int k = 0; k < 5; ++k) {
        steps.push_back({numbered(no++, "train_vanilla" + sk(k)),
                         json{{"kind", "train-sae"},
                              {"seed", 51511 + k},
                              {"name", "van" + sk(k)},
                              {"data", "hier_data.slab"},
                              {"sae", sae_section(16, 0.02, 25)}}});
        steps.push_back({numbered(no++, "train_matryoshka" + sk(k)),
                         json{{"kind", "train-matryoshka"},
                              {"seed", 51511 + k},
                              {"name", "mat" + sk(k)},
                              {"data", "hier_data.slab"},
                              {"sae", sae_section(16, 0.02, 25)},
                              {"matryoshka", json{{"groups", 5}}}}});
        steps.push_back({numbered(no++, "eval_vanilla" + sk(k)),
                         json{{"kind", "eval-absorption"},
                              {"seed", 51511 + k},
                              {"name", "abs_van" + sk(k)},
                              {"data", "hier_data.slab"},
                              {"model", "van" + sk(k) + ".slab"}}});
        steps.push_back({numbered(no++, "eval_matryoshka" + sk(k)),
                         json{{"kind", "eval-absorption"},
                              {"seed", 51511 + k},
                              {"name", "abs_mat" + sk(k)},
                              {"data", "hier_data.slab"},
                              {"model", "mat" + sk(k) + ".slab"}}});
    }
    return steps;
}

// Attribute data (3 colors x 2 shapes); narrow vs wide SAEs, five seeds.
std::vector<Step> preset_composition() {
    std::vector<Step> steps;
    int no = 1;
    steps.push_back({numbered(no++, "gen_data"),
                     json{{"kind", "gen-data"},
                          {"seed", 62620},
                          {"name", "attr_data"},
                          {"data",
                           json{{"spec", json{{"n", 5},
                                              {"structure", "attributes"},
                                              {"group_sizes", json::array({3, 2})},
                                              {"noise_sigma", 0.0}}},
                                {"N", 20000},
                                {"d", 16},
                                {"dict_mode", "orthogonal"}}}}});
    for (int k = 0; k < 5; ++k) {
        steps.push_back({numbered(no++, "train_narrow" + sk(k)),
                         json{{"kind", "train-sae"},
                              {"seed", 62621 + k},
                              {"name", "narrow" + sk(k)},
                              {"data", "attr_data.slab"},
                              {"sae", sae_section(6, 0.15, 25)}}});
        steps.push_back({numbered(no++, "train_wide" + sk(k)),
                         json{{"kind", "train-sae"},
                              {"seed", 62621 + k},
                              {"name", "wide" + sk(k)},
                              {"data", "attr_data.slab"},
                              {"sae", sae_section(16, 0.15, 25)}}});
        steps.push_back({numbered(no++, "eval_narrow" + sk(k)),
                         json{{"kind", "eval-composition"},
                              {"seed", 62621 + k},
                              {"name", "comp_narrow" + sk(k)},
                              {"data", "attr_data.slab"},
                              {"model", "narrow" + sk(k) + ".slab"},
                              {"margin", 0.1}}});
        steps.push_back({numbered(no++, "eval_wide" + sk(k)),
                         json{{"kind", "eval-composition"},
                              {"seed", 62621 + k},
                              {"name", "comp_wide" + sk(k)},
                              {"data", "attr_data.slab"},
                              {"model", "wide" + sk(k) + ".slab"},
                              {"margin", 0.1}}});
    }
    return steps;
}

json embed_section(std::size_t dim) {
    return json{{"algorithm", "cbow"}, {"dim", dim},      {"window", 5},
                {"negatives", 5},      {"epochs", 10},    {"lr_start", 0.05},
                {"lr_end", 1e-4}};
}

// Synthetic gendered corpus; five embedding seeds; king-queen style queries.
std::vector<Step> preset_analogy() {
    json queries = json::array();
    for (const GenderPair& p : analogy_eval_pairs())
        queries.push_back(json{
            {"a", p.male}, {"b", "man"}, {"c", "woman"}, {"expect", p.female}});
    std::vector<Step> steps;
    int no = 1;
    steps.push_back({numbered(no++, "gen_corpus"),
                     json{{"kind", "gen-corpus"},
                          {"seed", 73730},
                          {"name", "corpus"},
                          {"corpus", json{{"template", "gendered"},
                                          {"sentences", 13000}}}}});
    for (int k = 0; k < 5; ++k) {
        steps.push_back({numbered(no++, "train_embeddings" + sk(k)),
                         json{{"kind", "train-embeddings"},
                              {"seed", 73731 + k},
                              {"name", "space" + sk(k)},
                              {"corpus", "corpus.txt"},
                              {"min_count", 1},
                              {"embed", embed_section(64)}}});
        steps.push_back({numbered(no++, "analogy" + sk(k)),
                         json{{"kind", "analogy"},
                              {"seed", 73731 + k},
                              {"name", "analogy" + sk(k)},
                              {"space", "space" + sk(k) + ".slab"},
                              {"queries", queries},
                              {"top_k", 10},
                              {"exclude_queries", true}}});
    }
    return steps;
}

// Two spaces (different width and seed) over one corpus: neighbor overlap,
// then an SAE over one space feeding a unified word+feature network.
std::vector<Step> preset_holism() {
    std::vector<Step> steps;
    int no = 1;
    steps.push_back({numbered(no++, "gen_corpus"),
                     json{{"kind", "gen-corpus"},
                          {"seed", 84840},
                          {"name", "corpus"},
                          {"corpus", json{{"template", "gendered"},
                                          {"sentences", 13000}}}}});
    steps.push_back({numbered(no++, "train_space_a"),
                     json{{"kind", "train-embeddings"},
                          {"seed", 84841},
                          {"name", "space_a"},
                          {"corpus", "corpus.txt"},
                          {"min_count", 1},
                          {"embed", embed_section(64)}}});
    steps.push_back({numbered(no++, "train_space_b"),
                     json{{"kind", "train-embeddings"},
                          {"seed", 84842},
                          {"name", "space_b"},
                          {"corpus", "corpus.txt"},
                          {"min_count", 1},
                          {"embed", embed_section(96)}}});
    steps.push_back({numbered(no++, "nn_overlap"),
                     json{{"kind", "nn-overlap"},
                          {"seed", 84843},
                          {"name", "overlap"},
                          {"space_a", "space_a.slab"},
                          {"space_b", "space_b.slab"},
                          {"k", 10},
                          {"metric", "cosine"}}});
    steps.push_back({numbered(no++, "train_embed_sae"),
                     json{{"kind", "train-sae"},
                          {"seed", 84844},
                          {"name", "embed_sae"},
                          {"data", "space_a.slab"},
                          {"sae", sae_section(32, 1e-4, 200)}}});
    steps.push_back({numbered(no++, "unified_net"),
                     json{{"kind", "unified-net"},
                          {"seed", 84845},
                          {"name", "unified"},
                          {"space", "space_a.slab"},
                          {"model", "embed_sae.slab"},
                          {"k", 10},
                          {"metric", "cosine"}}});
    return steps;
}

std::vector<Step> steps_for(const std::string& name) {
    if (name == "recovery") return preset_recovery();
    if (name == "absorption") return preset_absorption();
    if (name == "composition") return preset_composition();
    if (name == "analogy") return preset_analogy();
    if (name == "holism") return preset_holism();
    std::string avail;
    for (const std::string& p : preset_names()) avail += (avail.empty() ? "" : ", ") + p;
    throw LookupError("unknown preset \"" + name + "\" (available: " + avail + ")");
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"absorption", "analogy",
                                                   "composition", "holism", "recovery"};
    return names;
}

std::vector<std::string> write_preset(const std::string& name,
                                      const std::string& out_dir) {
    const std::vector<Step> steps = steps_for(name);
    fs::create_directories(out_dir);
    std::vector<std::string> paths;
    json index = json::array();
    for (const Step& s : steps) {
        const std::string path = (fs::path(out_dir) / s.file).string();
        write_json_file(path, s.config);
        paths.push_back(path);
        index.push_back(s.file);
    }
    write_json_file((fs::path(out_dir) / "pipeline.json").string(),
                    json{{"preset", name}, {"steps", index}});
    return paths;
}

}  // namespace semlab
