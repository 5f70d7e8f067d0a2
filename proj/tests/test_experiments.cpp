#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "semlab/errors.hpp"
#include "semlab/experiments.hpp"
#include "semlab/mat.hpp"
#include "semlab/sae.hpp"
#include "semlab/serialize.hpp"

using namespace semlab;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string case_dir(const std::string& leaf) {
    static const fs::path base = [] {
        auto d = fs::temp_directory_path() / "semlab_experiment_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    const fs::path dir = base / leaf;
    fs::create_directories(dir);
    return dir.string();
}

std::string at(const std::string& dir, const std::string& leaf) {
    return (fs::path(dir) / leaf).string();
}

json gen_config(std::uint64_t seed) {
    return json{{"kind", "gen-data"},
                {"seed", seed},
                {"name", "gen"},
                {"data",
                 {{"spec", {{"n", 6}, {"p", 0.15}}},
                  {"N", 400},
                  {"d", 8}}}};
}

EmbeddingSpace toy_space(const std::vector<std::string>& tokens,
                         const Mat& vectors) {
    EmbeddingSpace space;
    space.vocab.id_to_token = tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        space.vocab.token_to_id[tokens[i]] = i;
    space.vocab.counts.assign(tokens.size(), 1);
    space.config.dim = vectors.cols();
    space.vectors = vectors;
    return space;
}

}  // namespace

TEST_CASE("gen-data writes dataset, metrics and report with matching hashes") {
    const std::string dir = case_dir("gen");
    const RunReport rep = run(gen_config(1234), dir, true);

    CHECK(fs::exists(at(dir, "gen.slab")));
    CHECK(fs::exists(at(dir, "gen_metrics.json")));
    CHECK(fs::exists(at(dir, "gen_report.json")));
    CHECK(rep.metrics["kind"] == "gen-data");
    CHECK(rep.metrics["name"] == "gen");
    CHECK(rep.metrics["seed"] == 1234);
    CHECK(rep.metrics["n"] == 6);
    CHECK(rep.metrics["d"] == 8);
    CHECK(rep.metrics["N"] == 400);
    CHECK(rep.metrics["config"] == gen_config(1234));
    REQUIRE(rep.artifacts.contains("gen.slab"));
    CHECK(rep.artifacts["gen.slab"] == hash_hex(file_hash(at(dir, "gen.slab"))));
    CHECK(read_json_file(at(dir, "gen_metrics.json")) == rep.metrics);
    const json report = read_json_file(at(dir, "gen_report.json"));
    CHECK(report["metrics"] == rep.metrics);
    CHECK(report["artifacts"] == rep.artifacts);
    CHECK(report.contains("duration_seconds"));
    CHECK_FALSE(rep.metrics.contains("duration_seconds"));

    const StoredDataset ds = load_dataset(at(dir, "gen.slab"));
    CHECK(ds.data.X.rows() == 400);
    CHECK(ds.data.X.cols() == 8);
    CHECK(hash_hex(mat_hash(ds.data.X)) == rep.metrics["X_hash"]);
}

TEST_CASE("metric payloads are byte-identical across reruns") {
    const std::string a = case_dir("rerun_a");
    const std::string b = case_dir("rerun_b");
    run(gen_config(777), a, true);
    run(gen_config(777), b, true);
    CHECK(read_text_file(at(a, "gen_metrics.json")) ==
          read_text_file(at(b, "gen_metrics.json")));

    const std::string c = case_dir("rerun_c");
    run(gen_config(778), c, true);
    CHECK(read_text_file(at(a, "gen_metrics.json")) !=
          read_text_file(at(c, "gen_metrics.json")));
}

TEST_CASE("config errors carry exact dotted paths") {
    const std::string dir = case_dir("errors");
    try {
        run(json{{"kind", "summon"}, {"seed", 1}}, dir, true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("$.kind: unknown experiment kind") !=
              std::string::npos);
    }
    try {
        run(json{{"kind", "gen-data"}}, dir, true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.seed: missing required field");
    }
    json extra = gen_config(1);
    extra["bogus"] = true;
    try {
        run(extra, dir, true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.bogus: unknown field");
    }
    json bad = gen_config(1);
    bad["data"].erase("N");
    try {
        run(bad, dir, true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.data.N: missing required field");
    }
    const json missing{{"kind", "train-sae"},
                       {"seed", 3},
                       {"data", "nowhere.slab"},
                       {"sae", {{"m", 4}}}};
    try {
        run(missing, dir, true);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("input not found") != std::string::npos);
    }
}

TEST_CASE("train chain: sae learns and recovery eval reads it back") {
    const std::string dir = case_dir("chain");
    run(gen_config(2024), dir, true);

    const json sae_cfg{{"kind", "train-sae"},
                       {"seed", 31},
                       {"name", "sae"},
                       {"data", "gen.slab"},
                       {"sae",
                        {{"m", 8}, {"lambda", 1e-3}, {"epochs", 8},
                         {"batch_size", 64}}}};
    const RunReport st = run(sae_cfg, dir, true);
    CHECK(st.metrics["m"] == 8);
    CHECK(st.metrics["epochs"] == 8);
    CHECK(st.metrics["loss_drop"].get<double>() > 0.0);
    CHECK(fs::exists(at(dir, "sae.slab")));
    CHECK(fs::exists(at(dir, "sae_log.csv")));
    REQUIRE(st.artifacts.contains("sae_log.csv"));

    const StoredModel mod = load_model(at(dir, "sae.slab"));
    for (std::size_t j = 0; j < mod.model.W_dec.rows(); ++j)
        CHECK(l2_norm(mod.model.W_dec.row_span(j)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mod.header["provenance"]["seed"] == 31);
    CHECK(mod.header["provenance"]["sae_config"]["m"] == 8);

    const json rec_cfg{{"kind", "eval-recovery"},
                       {"seed", 1},
                       {"name", "rec"},
                       {"data", "gen.slab"},
                       {"model", "sae.slab"},
                       {"tau", 0.5}};
    const RunReport rc = run(rec_cfg, dir, true);
    CHECK(rc.metrics["n_true"] == 6);
    CHECK(rc.metrics["tau"] == 0.5);
    const double mmc = rc.metrics["mean_max_cosine"].get<double>();
    CHECK(mmc > 0.0);
    CHECK(mmc <= 1.0 + 1e-12);
    CHECK(rc.metrics["matching"].is_array());
    CHECK(fs::exists(at(dir, "rec_matching.csv")));
}

TEST_CASE("run_config_file applies seed and out overrides") {
    const std::string dir = case_dir("overrides");
    const json cfg{{"kind", "gen-corpus"},
                   {"seed", 5},
                   {"name", "corp"},
                   {"corpus", {{"sentences", 40}}}};
    write_json_file(at(dir, "cfg.json"), cfg);
    const RunReport rep = run_config_file(at(dir, "cfg.json"), 99, std::string("sub"), true);
    CHECK(rep.metrics["seed"] == 99);
    CHECK(rep.metrics["config"]["seed"] == 99);
    CHECK(fs::exists(at(dir, "sub/corp.txt")));
    CHECK(fs::exists(at(dir, "sub/corp_metrics.json")));
    CHECK(rep.metrics["sentences"] == 40);
    CHECK(rep.metrics["vocab_size"].get<std::size_t>() > 10);

    CHECK_THROWS_AS(run_config_file(at(dir, "absent.json"), {}, {}, true), IoError);
    write_text_file(at(dir, "list.json"), "[1, 2]\n");
    CHECK_THROWS_AS(run_config_file(at(dir, "list.json"), {}, {}, true), ConfigError);
}

TEST_CASE("gen-corpus is deterministic in the seed and defaults its name") {
    const std::string a = case_dir("corpus_a");
    const std::string b = case_dir("corpus_b");
    const json cfg{{"kind", "gen-corpus"}, {"seed", 400},
                   {"corpus", {{"sentences", 30}}}};
    const RunReport ra = run(cfg, a, true);
    const RunReport rb = run(cfg, b, true);
    CHECK(fs::exists(at(a, "gen_corpus.txt")));  // default name gen-corpus -> gen_corpus
    CHECK(ra.metrics["corpus_hash"] == rb.metrics["corpus_hash"]);

    json other = cfg;
    other["seed"] = 401;
    const RunReport rc = run(other, case_dir("corpus_c"), true);
    CHECK(ra.metrics["corpus_hash"] != rc.metrics["corpus_hash"]);
}

TEST_CASE("train-transcoder synthesizes a rotation target") {
    const std::string dir = case_dir("transcoder");
    run(gen_config(640), dir, true);
    const json cfg{{"kind", "train-transcoder"},
                   {"seed", 41},
                   {"name", "tc"},
                   {"data", "gen.slab"},
                   {"map", json::object()},
                   {"sae", {{"m", 8}, {"lambda", 1e-3}, {"epochs", 6}}}};
    const RunReport rep = run(cfg, dir, true);
    CHECK(rep.metrics["sublayer_hash"].get<std::string>().size() == 16);
    CHECK(rep.metrics["loss_drop"].get<double>() > 0.0);
    const StoredModel mod = load_model(at(dir, "tc.slab"));
    CHECK(mod.model.input_dim() == 8);
    CHECK(mod.model.output_dim() == 8);
}

TEST_CASE("train-matryoshka accepts the groups shorthand") {
    const std::string dir = case_dir("matryoshka");
    run(gen_config(650), dir, true);
    const json cfg{{"kind", "train-matryoshka"},
                   {"seed", 42},
                   {"name", "mat"},
                   {"data", "gen.slab"},
                   {"matryoshka", {{"groups", 3}}},
                   {"sae", {{"m", 8}, {"lambda", 1e-3}, {"epochs", 4}}}};
    const RunReport rep = run(cfg, dir, true);
    const MatryoshkaConfig expect = default_matryoshka(8, 3);
    CHECK(rep.metrics["boundaries"] == json(expect.boundaries));
    const StoredModel mod = load_model(at(dir, "mat.slab"));
    CHECK(mod.header["provenance"]["matryoshka"]["boundaries"] == json(expect.boundaries));
}

TEST_CASE("feature-card and steer work against an aligned model") {
    const std::string dir = case_dir("card_steer");
    json gen{{"kind", "gen-data"},
             {"seed", 8800},
             {"name", "ortho"},
             {"data",
              {{"spec", {{"n", 2}, {"p", 0.5}}},
               {"N", 50},
               {"d", 3},
               {"dict_mode", "orthogonal"}}}};
    run(gen, dir, true);
    const StoredDataset ds = load_dataset(at(dir, "ortho.slab"));

    SaeModel model;
    model.W_dec = ds.dict.D;
    model.W_enc = transpose(ds.dict.D);
    model.b_enc = Mat(1, 2);
    model.b_dec = Mat(1, 3);
    save_model(at(dir, "aligned.slab"), model, json::object());

    const json card{{"kind", "feature-card"},
                    {"seed", 1},
                    {"name", "card"},
                    {"data", "ortho.slab"},
                    {"model", "aligned.slab"},
                    {"latents", {0, 1}},
                    {"top_k", 3}};
    const RunReport cr = run(card, dir, true);
    CHECK(cr.metrics["count"] == 2);
    REQUIRE(cr.metrics["cards"].size() == 2);
    CHECK(cr.metrics["cards"][0]["latent"] == 0);
    CHECK(cr.metrics["cards"][0]["nearest_true_features"][0]["index"] == 0);
    CHECK(cr.metrics["cards"][0]["nearest_true_features"][0]["cosine"].get<double>() ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fs::exists(at(dir, "card.txt")));
    CHECK(read_text_file(at(dir, "card.txt")).find("feature 1") != std::string::npos);

    const json none{{"kind", "feature-card"},
                    {"seed", 1},
                    {"name", "card2"},
                    {"data", "ortho.slab"},
                    {"model", "aligned.slab"},
                    {"latent", 0},
                    {"readout", "none"}};
    const RunReport nr = run(none, dir, true);
    CHECK(nr.metrics["cards"][0]["positive_effects"].empty());

    const json steer{{"kind", "steer"},
                     {"seed", 1},
                     {"name", "push"},
                     {"data", "ortho.slab"},
                     {"model", "aligned.slab"},
                     {"latent", 0},
                     {"value", 25.0}};
    const RunReport sr = run(steer, dir, true);
    CHECK(sr.metrics["target_true_feature"] == 0);
    CHECK(sr.metrics["samples"] == 50);
    CHECK(sr.metrics["hit_fraction"] == 1.0);
    CHECK(sr.metrics["mean_shift"].get<double>() > 0.0);

    json oob = steer;
    oob["latent"] = 9;
    oob["name"] = "oob";
    CHECK_THROWS_AS(run(oob, dir, true), IndexError);
}

TEST_CASE("analogy experiment ranks crafted queries") {
    const std::string dir = case_dir("analogy");
    const EmbeddingSpace space = toy_space(
        {"king", "man", "woman", "queen", "tree"},
        Mat::from_rows({{1.0, 1.0, 0.0},
                        {1.0, 0.0, 0.0},
                        {0.0, 0.0, 1.0},
                        {0.0, 1.0, 1.0},
                        {-1.0, 0.3, -0.2}}));
    save_space(at(dir, "space.slab"), space, json::object());
    const json cfg{{"kind", "analogy"},
                   {"seed", 2},
                   {"name", "royal"},
                   {"space", "space.slab"},
                   {"top_k", 3},
                   {"queries",
                    json::array({{{"a", "king"},
                                  {"b", "man"},
                                  {"c", "woman"},
                                  {"expect", "queen"}}})}};
    const RunReport rep = run(cfg, dir, true);
    CHECK(rep.metrics["mean_rank"] == 1.0);
    REQUIRE(rep.metrics["queries"].size() == 1);
    CHECK(rep.metrics["queries"][0]["rank"] == 1);
    CHECK(rep.metrics["queries"][0]["hits"][0]["token"] == "queen");
    CHECK(fs::exists(at(dir, "royal_queries.csv")));

    json typo = cfg;
    typo["queries"][0]["expect"] = "queeen";
    typo["name"] = "typo";
    CHECK_THROWS_AS(run(typo, dir, true), OutOfVocabularyError);
}

TEST_CASE("nn-overlap experiment compares two stored spaces") {
    const std::string dir = case_dir("overlap");
    const Mat V = Mat::from_rows({{1.0, 0.0}, {0.9, 0.1}, {0.0, 1.0},
                                  {-0.5, 0.5}, {0.3, -0.8}});
    const EmbeddingSpace a = toy_space({"t0", "t1", "t2", "t3", "t4"}, V);
    save_space(at(dir, "a.slab"), a, json::object());
    save_space(at(dir, "b.slab"), a, json::object());
    const json cfg{{"kind", "nn-overlap"},
                   {"seed", 3},
                   {"name", "ov"},
                   {"space_a", "a.slab"},
                   {"space_b", "b.slab"},
                   {"k", 2}};
    const RunReport rep = run(cfg, dir, true);
    CHECK(rep.metrics["mean_overlap"] == 1.0);
    CHECK(rep.metrics["baseline"] == 0.5);
    CHECK(rep.metrics["ratio_to_baseline"] == 2.0);
    CHECK(fs::exists(at(dir, "ov_tokens.csv")));

    const EmbeddingSpace c = toy_space({"t0", "t1", "t2", "t3", "other"}, V);
    save_space(at(dir, "c.slab"), c, json::object());
    json bad = cfg;
    bad["space_b"] = "c.slab";
    bad["name"] = "bad";
    CHECK_THROWS_AS(run(bad, dir, true), VocabularyMismatchError);
}

TEST_CASE("unified-net experiment merges a space with a model") {
    const std::string dir = case_dir("unified");
    const EmbeddingSpace space = toy_space(
        {"u", "v", "w"}, Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.7, 0.7}}));
    save_space(at(dir, "s.slab"), space, json::object());
    SaeModel model;
    model.W_enc = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    model.b_enc = Mat(1, 2);
    model.W_dec = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    model.b_dec = Mat(1, 2);
    save_model(at(dir, "m.slab"), model, json::object());
    const json cfg{{"kind", "unified-net"},
                   {"seed", 4},
                   {"name", "net"},
                   {"space", "s.slab"},
                   {"model", "m.slab"},
                   {"k", 2}};
    const RunReport rep = run(cfg, dir, true);
    CHECK(rep.metrics["n_tokens"] == 3);
    CHECK(rep.metrics["n_features"] == 2);
    CHECK(rep.metrics["n_nodes"] == 5);
    CHECK(rep.metrics["cross_type_edges"].get<std::size_t>() > 0);
    CHECK(fs::exists(at(dir, "net_edges.csv")));
}

TEST_CASE("write_preset lays out numbered steps plus a pipeline manifest") {
    const std::string dir = case_dir("preset");
    const std::vector<std::string> steps = write_preset("recovery", dir);
    REQUIRE(steps.size() == 11);  // 1 gen + 5 train + 5 eval
    for (const std::string& s : steps) CHECK(fs::exists(s));
    CHECK(fs::path(steps[0]).filename().string().substr(0, 3) == "01_");

    const json pipeline = read_json_file(at(dir, "pipeline.json"));
    CHECK(pipeline["preset"] == "recovery");
    REQUIRE(pipeline["steps"].is_array());
    CHECK(pipeline["steps"].size() == 11);
    for (std::size_t i = 0; i < steps.size(); ++i)
        CHECK(at(dir, pipeline["steps"][i].get<std::string>()) == steps[i]);

    const json first = read_json_file(steps[0]);
    CHECK(first["kind"] == "gen-data");
    CHECK(first.contains("seed"));

    CHECK(preset_names() ==
          std::vector<std::string>{"absorption", "analogy", "composition", "holism",
                                   "recovery"});
    try {
        write_preset("nope", dir);
        FAIL("expected LookupError");
    } catch (const LookupError& e) {
        CHECK(std::string(e.what()).find("recovery") != std::string::npos);
    }
}
