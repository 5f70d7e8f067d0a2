#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "semlab/errors.hpp"
#include "semlab/rng.hpp"
#include "semlab/serialize.hpp"

using namespace semlab;
using nlohmann::json;

namespace {

std::string scratch(const std::string& leaf) {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() / "semlab_serialize_tests";
        std::filesystem::remove_all(d);
        std::filesystem::create_directories(d);
        return d;
    }();
    return (dir / leaf).string();
}

SaeModel small_model() {
    SaeModel m;
    m.W_enc = Mat::from_rows({{0.1, -0.2, 0.3}, {0.4, 0.5, -0.6}});
    m.b_enc = Mat::from_rows({{0.01, 0.02, 0.03}});
    m.W_dec = Mat::from_rows({{0.6, 0.8}, {1.0, 0.0}, {0.0, -1.0}});
    m.b_dec = Mat::from_rows({{-0.5, 0.25}});
    return m;
}

}  // namespace

TEST_CASE("json_bytes is canonical: sorted keys, two-space indent, newline") {
    json j;
    j["b"] = 1;
    j["a"] = 2;
    CHECK(json_bytes(j) == "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
    CHECK(json_bytes(json::array({1, 2})) == "[\n  1,\n  2\n]\n");

    const std::string path = scratch("canon.json");
    write_json_file(path, j);
    CHECK(read_text_file(path) == json_bytes(j));
    CHECK(read_json_file(path) == j);
}

TEST_CASE("text file round trip and error paths") {
    const std::string path = scratch("t.txt");
    write_text_file(path, "hello\n");
    CHECK(read_text_file(path) == "hello\n");
    CHECK_THROWS_AS(read_text_file(scratch("missing.txt")), IoError);
    write_text_file(scratch("bad.json"), "{not json");
    CHECK_THROWS_AS(read_json_file(scratch("bad.json")), ConfigError);
}

TEST_CASE("csv writer escapes commas, quotes and newlines") {
    const std::string path = scratch("x.csv");
    write_csv(path, {"a", "b"},
              {{"1", "x,y"}, {"q\"uote", "line\nbreak"}});
    CHECK(read_text_file(path) ==
          "a,b\n"
          "1,\"x,y\"\n"
          "\"q\"\"uote\",\"line\nbreak\"\n");
    CHECK_THROWS_AS(write_csv(path, {"a", "b"}, {{"only-one"}}), ValidationError);
}

TEST_CASE("file_hash is fnv1a64 of the bytes, hash_hex is 16 lowercase digits") {
    const std::string path = scratch("h.txt");
    write_text_file(path, "abc");
    CHECK(file_hash(path) == 0xe71fa2190541574bULL);
    CHECK(hash_hex(0) == "0000000000000000");
    CHECK(hash_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("JsonReader reports exact dotted paths") {
    const json j = {{"lr", "fast"}, {"m", 16}, {"neg", -3}, {"frac", 2.5},
                    {"on", 1}, {"name", 7}};
    JsonReader r(j, "$.sae");

    try {
        r.num("lr");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.sae.lr: expected a number");
    }
    try {
        r.num("absent");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.sae.absent: missing required field");
    }
    try {
        r.u64("neg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.sae.neg: expected a non-negative integer");
    }
    CHECK_THROWS_AS(r.u64("frac"), ConfigError);
    CHECK_THROWS_AS(r.flag_or("on", false), ConfigError);
    CHECK_THROWS_AS(r.str("name"), ConfigError);

    CHECK(r.num("m") == 16.0);
    CHECK(r.u64("m") == 16);
    CHECK(r.index("m") == 16);
    CHECK(r.num_or("ghost", 1.5) == 1.5);
    CHECK(r.u64_or("ghost", 9) == 9);
    CHECK(r.str_or("ghost", "d") == "d");
    CHECK(r.flag_or("ghost", true));
    CHECK(r.has("m"));
    CHECK_FALSE(r.has("ghost"));
}

TEST_CASE("JsonReader rejects unread keys and non-objects") {
    const json j = {{"m", 4}, {"extra", 1}};
    JsonReader r(j, "$.cfg");
    r.index("m");
    try {
        r.finish();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "$.cfg.extra: unknown field");
    }
    JsonReader r2(j, "$.cfg");
    r2.index("m");
    r2.raw("extra");
    CHECK_NOTHROW(r2.finish());

    CHECK_THROWS_AS(JsonReader(json::array({1}), "$"), ConfigError);
}

TEST_CASE("feature spec json round trips") {
    FeatureGenSpec spec;
    spec.n = 6;
    spec.p = 0.1;
    spec.structure = FeatureStructure::hierarchical;
    spec.parent_edges = {{0, 3}, {0, 4}, {1, 5}};
    spec.q = 0.4;
    spec.noise_sigma = 0.05;
    spec.seed = 99;
    const FeatureGenSpec back = feature_spec_from_json(to_json(spec), "$");
    CHECK(back.n == spec.n);
    CHECK(back.p == spec.p);
    CHECK(back.structure == spec.structure);
    CHECK(back.parent_edges == spec.parent_edges);
    CHECK(back.q == spec.q);
    CHECK(back.noise_sigma == spec.noise_sigma);
    CHECK(back.seed == spec.seed);

    FeatureGenSpec attrs;
    attrs.n = 5;
    attrs.structure = FeatureStructure::attributes;
    attrs.group_sizes = {3, 2};
    const FeatureGenSpec back2 = feature_spec_from_json(to_json(attrs), "$");
    CHECK(back2.group_sizes == attrs.group_sizes);

    json j = to_json(attrs);
    j["mystery"] = 1;
    CHECK_THROWS_AS(feature_spec_from_json(j, "$"), ConfigError);
    json bad = to_json(spec);
    bad["parent_edges"] = json::array({json::array({1})});
    CHECK_THROWS_AS(feature_spec_from_json(bad, "$"), ConfigError);
    json cyc = to_json(spec);
    cyc["parent_edges"] = json::array({json::array({0, 1}), json::array({1, 0})});
    CHECK_THROWS_AS(feature_spec_from_json(cyc, "$"), ValidationError);
    json unk = to_json(spec);
    unk["structure"] = "fancy";
    CHECK_THROWS_AS(feature_spec_from_json(unk, "$"), ConfigError);
}

TEST_CASE("embed and sae config json round trips") {
    EmbedConfig e;
    e.algorithm = EmbedAlgo::skipgram;
    e.dim = 48;
    e.window = 3;
    e.negatives = 7;
    e.epochs = 4;
    e.lr_start = 0.04;
    e.lr_end = 0.002;
    e.subsample = 1e-4;
    e.seed = 11;
    const EmbedConfig eb = embed_config_from_json(to_json(e), "$");
    CHECK(eb.algorithm == e.algorithm);
    CHECK(eb.dim == e.dim);
    CHECK(eb.window == e.window);
    CHECK(eb.negatives == e.negatives);
    CHECK(eb.epochs == e.epochs);
    CHECK(eb.lr_start == e.lr_start);
    CHECK(eb.lr_end == e.lr_end);
    CHECK(eb.subsample == e.subsample);
    CHECK(eb.seed == e.seed);
    json badalgo = to_json(e);
    badalgo["algorithm"] = "glove";
    CHECK_THROWS_AS(embed_config_from_json(badalgo, "$"), ConfigError);

    SaeConfig s;
    s.m = 24;
    s.lambda = 0.01;
    s.optimizer = OptimKind::sgd;
    s.lr = 0.5;
    s.batch_size = 32;
    s.epochs = 3;
    s.seed = 5;
    s.resample_interval = 2;
    const SaeConfig sb = sae_config_from_json(to_json(s), "$");
    CHECK(sb.m == s.m);
    CHECK(sb.lambda == s.lambda);
    CHECK(sb.optimizer == s.optimizer);
    CHECK(sb.lr == s.lr);
    CHECK(sb.batch_size == s.batch_size);
    CHECK(sb.epochs == s.epochs);
    CHECK(sb.seed == s.seed);
    CHECK(sb.resample_interval == s.resample_interval);
    json badopt = to_json(s);
    badopt["optimizer"] = "lion";
    CHECK_THROWS_AS(sae_config_from_json(badopt, "$"), ConfigError);
    json extra = to_json(s);
    extra["momentum"] = 0.9;
    CHECK_THROWS_AS(sae_config_from_json(extra, "$"), ConfigError);
    CHECK_THROWS_AS(sae_config_from_json(json{{"lambda", 0.1}}, "$"), ConfigError);
}

TEST_CASE("matryoshka json: explicit weights round trip, uniform default") {
    MatryoshkaConfig m;
    m.boundaries = {2, 4, 8};
    m.weights = {0.5, 0.3, 0.2};
    const MatryoshkaConfig back = matryoshka_from_json(to_json(m), "$");
    CHECK(back.boundaries == m.boundaries);
    CHECK(back.weights == m.weights);

    const MatryoshkaConfig uni =
        matryoshka_from_json(json{{"boundaries", {3, 6}}}, "$");
    CHECK(uni.weights == std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(matryoshka_from_json(json{{"boundaries", "all"}}, "$"), ConfigError);
    CHECK_THROWS_AS(matryoshka_from_json(json{{"weights", {1.0}}}, "$"), ConfigError);
}

TEST_CASE("slab container round trips bit-exactly") {
    Mat a = Mat::from_rows({{1.5, -0.0, 3e-300}, {-2.25, 0.1, 7.0}});
    Mat b = Mat::from_rows({{42.0}});
    const std::string path = scratch("round.slab");
    write_slab(path, json{{"type", "demo"}, {"note", "kept"}},
               {{"A", &a}, {"B", &b}});
    auto [header, blocks] = read_slab(path);
    CHECK(header["type"] == "demo");
    CHECK(header["note"] == "kept");
    REQUIRE(header["blocks"].is_array());
    CHECK(header["blocks"].size() == 2);
    REQUIRE(blocks.count("A") == 1);
    REQUIRE(blocks.count("B") == 1);
    const Mat& ra = blocks.at("A");
    REQUIRE(ra.rows() == 2);
    REQUIRE(ra.cols() == 3);
    CHECK(std::memcmp(ra.data(), a.data(), a.size() * sizeof(double)) == 0);
    CHECK(std::signbit(ra(0, 1)));  // -0.0 survives
    CHECK(blocks.at("B")(0, 0) == 42.0);
}

TEST_CASE("slab reader rejects corruption") {
    Mat a = Mat::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const std::string path = scratch("corrupt.slab");
    write_slab(path, json{{"type", "demo"}}, {{"A", &a}});
    const std::string good = read_text_file(path);

    std::string flipped = good;
    flipped.back() = static_cast<char>(flipped.back() ^ 0xFF);
    write_text_file(path, flipped);
    try {
        read_slab(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("hash mismatch") != std::string::npos);
    }

    std::string badmagic = good;
    badmagic[0] = 'X';
    write_text_file(path, badmagic);
    try {
        read_slab(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("not a slab file") != std::string::npos);
    }

    std::string badver = good;
    badver[4] = 9;
    write_text_file(path, badver);
    try {
        read_slab(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("unsupported slab version") != std::string::npos);
    }

    write_text_file(path, good.substr(0, good.size() - 5));
    try {
        read_slab(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
    CHECK_THROWS_AS(read_slab(scratch("nothing.slab")), IoError);
}

TEST_CASE("dataset save/load keeps codes, dictionary and spec") {
    Rng rng(77);
    FeatureGenSpec spec;
    spec.n = 4;
    spec.p = 0.3;
    spec.seed = 77;
    const GroundTruthDictionary dict =
        make_dictionary(4, 6, DictionaryMode::random, rng);
    const Mat S = sample_codes(spec, 25, rng);
    ActivationDataset data = render_activations(S, dict, 0.0, rng);
    data.spec = spec;

    const std::string path = scratch("data.slab");
    save_dataset(path, data, dict, json{{"who", "test"}});
    const StoredDataset got = load_dataset(path);
    CHECK(std::memcmp(got.data.X.data(), data.X.data(),
                      data.X.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(got.data.S.data(), data.S.data(),
                      data.S.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(got.dict.D.data(), dict.D.data(),
                      dict.D.size() * sizeof(double)) == 0);
    CHECK(got.data.spec.n == spec.n);
    CHECK(got.data.spec.p == spec.p);
    CHECK(got.data.dict_hash == mat_hash(dict.D));
    CHECK(got.header["provenance"]["who"] == "test");

    ActivationDataset blind = data;
    blind.S = Mat();
    save_dataset(scratch("blind.slab"), blind, dict, json::object());
    CHECK(load_dataset(scratch("blind.slab")).data.S.empty());
}

TEST_CASE("model save/load round trips and type tags are enforced") {
    const SaeModel m = small_model();
    const std::string mpath = scratch("model.slab");
    save_model(mpath, m, json{{"stage", 3}});
    const StoredModel got = load_model(mpath);
    CHECK(std::memcmp(got.model.W_enc.data(), m.W_enc.data(),
                      m.W_enc.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(got.model.W_dec.data(), m.W_dec.data(),
                      m.W_dec.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(got.model.b_enc.data(), m.b_enc.data(),
                      m.b_enc.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(got.model.b_dec.data(), m.b_dec.data(),
                      m.b_dec.size() * sizeof(double)) == 0);
    CHECK(got.header["m"] == 3);

    CHECK_THROWS_AS(load_dataset(mpath), IoError);
    try {
        load_dataset(mpath);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("not a dataset file") != std::string::npos);
    }
}

TEST_CASE("embedding space save/load keeps vocab order and config") {
    EmbeddingSpace space;
    space.vocab.id_to_token = {"zeta", "alpha", "mid"};
    space.vocab.counts = {9, 4, 4};
    space.vocab.min_count = 2;
    for (std::size_t i = 0; i < 3; ++i)
        space.vocab.token_to_id[space.vocab.id_to_token[i]] = i;
    space.config.dim = 2;
    space.config.seed = 8;
    space.vectors = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}});

    const std::string path = scratch("space.slab");
    save_space(path, space, json::object());
    const EmbeddingSpace got = load_space(path);
    CHECK(got.vocab.id_to_token == space.vocab.id_to_token);
    CHECK(got.vocab.counts == space.vocab.counts);
    CHECK(got.vocab.min_count == 2);
    CHECK(got.vocab.id_of("alpha") == 1);
    CHECK(got.config.dim == 2);
    CHECK(got.config.seed == 8);
    CHECK(std::memcmp(got.vectors.data(), space.vectors.data(),
                      space.vectors.size() * sizeof(double)) == 0);

    CHECK_THROWS_AS(load_model(path), IoError);
}
