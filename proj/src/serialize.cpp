#include "semlab/serialize.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "semlab/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "slab files assume a little-endian host");

namespace semlab {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
    return j;
}

std::string json_bytes(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, json_bytes(j));
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < header.size(); ++i)
        ss << (i ? "," : "") << csv_escape(header[i]);
    ss << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw ValidationError("write_csv: row width " + std::to_string(row.size()) +
                                  " vs header width " + std::to_string(header.size()));
        for (std::size_t i = 0; i < row.size(); ++i)
            ss << (i ? "," : "") << csv_escape(row[i]);
        ss << "\n";
    }
    write_text_file(path, ss.str());
}

std::uint64_t file_hash(const std::string& path) {
    return fnv1a64(read_text_file(path));
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------- JsonReader ----------

JsonReader::JsonReader(const nlohmann::json& j, std::string path)
    : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
}

void JsonReader::fail(const std::string& key, const std::string& why) const {
    throw ConfigError(path_ + "." + key + ": " + why);
}

bool JsonReader::has(const char* key) const { return j_->contains(key); }

const nlohmann::json& JsonReader::raw(const char* key) {
    auto it = j_->find(key);
    if (it == j_->end()) fail(key, "missing required field");
    seen_.insert(key);
    return *it;
}

const nlohmann::json* JsonReader::raw_or_null(const char* key) {
    auto it = j_->find(key);
    if (it == j_->end()) return nullptr;
    seen_.insert(key);
    return &*it;
}

double JsonReader::num(const char* key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
}

double JsonReader::num_or(const char* key, double fallback) {
    return has(key) ? num(key) : fallback;
}

std::uint64_t JsonReader::u64(const char* key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned()))
        fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::uint64_t JsonReader::u64_or(const char* key, std::uint64_t fallback) {
    return has(key) ? u64(key) : fallback;
}

std::size_t JsonReader::index(const char* key) {
    return static_cast<std::size_t>(u64(key));
}

std::size_t JsonReader::index_or(const char* key, std::size_t fallback) {
    return has(key) ? index(key) : fallback;
}

bool JsonReader::flag_or(const char* key, bool fallback) {
    if (!has(key)) return fallback;
    const nlohmann::json& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected true/false");
    return v.get<bool>();
}

std::string JsonReader::str(const char* key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
}

std::string JsonReader::str_or(const char* key, const std::string& fallback) {
    return has(key) ? str(key) : fallback;
}

void JsonReader::finish() {
    for (auto it = j_->begin(); it != j_->end(); ++it)
        if (!seen_.count(it.key()))
            throw ConfigError(path_ + "." + it.key() + ": unknown field");
}

// ---------- config <-> json ----------

nlohmann::json to_json(const FeatureGenSpec& spec) {
    nlohmann::json j{{"n", spec.n},
                     {"p", spec.p},
                     {"noise_sigma", spec.noise_sigma},
                     {"seed", spec.seed}};
    switch (spec.structure) {
        case FeatureStructure::independent:
            j["structure"] = "independent";
            break;
        case FeatureStructure::hierarchical: {
            j["structure"] = "hierarchical";
            j["q"] = spec.q;
            nlohmann::json edges = nlohmann::json::array();
            for (const auto& [p, c] : spec.parent_edges)
                edges.push_back(nlohmann::json::array({p, c}));
            j["parent_edges"] = edges;
            break;
        }
        case FeatureStructure::attributes:
            j["structure"] = "attributes";
            j["group_sizes"] = spec.group_sizes;
            break;
    }
    return j;
}

FeatureGenSpec feature_spec_from_json(const nlohmann::json& j, const std::string& at) {
    JsonReader r(j, at);
    FeatureGenSpec spec;
    spec.n = r.index("n");
    spec.p = r.num_or("p", spec.p);
    spec.noise_sigma = r.num_or("noise_sigma", 0.0);
    spec.seed = r.u64_or("seed", 0);
    const std::string structure = r.str_or("structure", "independent");
    if (structure == "independent") {
        spec.structure = FeatureStructure::independent;
    } else if (structure == "hierarchical") {
        spec.structure = FeatureStructure::hierarchical;
        spec.q = r.num_or("q", spec.q);
        const nlohmann::json& edges = r.raw("parent_edges");
        if (!edges.is_array()) r.fail("parent_edges", "expected an array of [parent, child]");
        for (const auto& e : edges) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number_integer())
                r.fail("parent_edges", "expected [parent, child] integer pairs");
            spec.parent_edges.emplace_back(e[0].get<std::size_t>(),
                                           e[1].get<std::size_t>());
        }
    } else if (structure == "attributes") {
        spec.structure = FeatureStructure::attributes;
        const nlohmann::json& sizes = r.raw("group_sizes");
        if (!sizes.is_array()) r.fail("group_sizes", "expected an array of sizes");
        for (const auto& s : sizes) {
            if (!s.is_number_integer()) r.fail("group_sizes", "expected integers");
            spec.group_sizes.push_back(s.get<std::size_t>());
        }
    } else {
        r.fail("structure", "unknown structure \"" + structure + "\"");
    }
    r.finish();
    validate_spec(spec);
    return spec;
}

nlohmann::json to_json(const EmbedConfig& cfg) {
    return nlohmann::json{
        {"algorithm", cfg.algorithm == EmbedAlgo::cbow ? "cbow" : "skipgram"},
        {"dim", cfg.dim},
        {"window", cfg.window},
        {"negatives", cfg.negatives},
        {"epochs", cfg.epochs},
        {"lr_start", cfg.lr_start},
        {"lr_end", cfg.lr_end},
        {"subsample", cfg.subsample},
        {"seed", cfg.seed}};
}

EmbedConfig embed_config_from_json(const nlohmann::json& j, const std::string& at) {
    JsonReader r(j, at);
    EmbedConfig cfg;
    const std::string algo = r.str_or("algorithm", "cbow");
    if (algo == "cbow")
        cfg.algorithm = EmbedAlgo::cbow;
    else if (algo == "skipgram")
        cfg.algorithm = EmbedAlgo::skipgram;
    else
        r.fail("algorithm", "expected \"cbow\" or \"skipgram\"");
    cfg.dim = r.index_or("dim", cfg.dim);
    cfg.window = r.index_or("window", cfg.window);
    cfg.negatives = r.index_or("negatives", cfg.negatives);
    cfg.epochs = r.index_or("epochs", cfg.epochs);
    cfg.lr_start = r.num_or("lr_start", cfg.lr_start);
    cfg.lr_end = r.num_or("lr_end", cfg.lr_end);
    cfg.subsample = r.num_or("subsample", cfg.subsample);
    cfg.seed = r.u64_or("seed", cfg.seed);
    r.finish();
    return cfg;
}

nlohmann::json to_json(const SaeConfig& cfg) {
    return nlohmann::json{
        {"m", cfg.m},
        {"lambda", cfg.lambda},
        {"optimizer", cfg.optimizer == OptimKind::adam ? "adam" : "sgd"},
        {"lr", cfg.lr},
        {"beta1", cfg.beta1},
        {"beta2", cfg.beta2},
        {"eps", cfg.eps},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"seed", cfg.seed},
        {"resample_interval", cfg.resample_interval}};
}

SaeConfig sae_config_from_json(const nlohmann::json& j, const std::string& at) {
    JsonReader r(j, at);
    SaeConfig cfg;
    cfg.m = r.index("m");
    cfg.lambda = r.num_or("lambda", cfg.lambda);
    const std::string opt = r.str_or("optimizer", "adam");
    if (opt == "adam")
        cfg.optimizer = OptimKind::adam;
    else if (opt == "sgd")
        cfg.optimizer = OptimKind::sgd;
    else
        r.fail("optimizer", "expected \"adam\" or \"sgd\"");
    cfg.lr = r.num_or("lr", cfg.lr);
    cfg.beta1 = r.num_or("beta1", cfg.beta1);
    cfg.beta2 = r.num_or("beta2", cfg.beta2);
    cfg.eps = r.num_or("eps", cfg.eps);
    cfg.batch_size = r.index_or("batch_size", cfg.batch_size);
    cfg.epochs = r.index_or("epochs", cfg.epochs);
    cfg.seed = r.u64_or("seed", cfg.seed);
    cfg.resample_interval = r.index_or("resample_interval", cfg.resample_interval);
    r.finish();
    return cfg;
}

nlohmann::json to_json(const MatryoshkaConfig& mcfg) {
    return nlohmann::json{{"boundaries", mcfg.boundaries}, {"weights", mcfg.weights}};
}

MatryoshkaConfig matryoshka_from_json(const nlohmann::json& j, const std::string& at) {
    JsonReader r(j, at);
    MatryoshkaConfig mcfg;
    const nlohmann::json& bounds = r.raw("boundaries");
    if (!bounds.is_array()) r.fail("boundaries", "expected an array of integers");
    for (const auto& b : bounds) {
        if (!b.is_number_integer()) r.fail("boundaries", "expected integers");
        mcfg.boundaries.push_back(b.get<std::size_t>());
    }
    if (const nlohmann::json* w = r.raw_or_null("weights")) {
        if (!w->is_array()) r.fail("weights", "expected an array of numbers");
        for (const auto& x : *w) {
            if (!x.is_number()) r.fail("weights", "expected numbers");
            mcfg.weights.push_back(x.get<double>());
        }
    } else {
        mcfg.weights.assign(mcfg.boundaries.size(),
                            1.0 / static_cast<double>(mcfg.boundaries.size()));
    }
    r.finish();
    return mcfg;
}

// ---------- binary container ----------

namespace {
constexpr char kMagic[4] = {'S', 'L', 'A', 'B'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_slab(const std::string& path, nlohmann::json header,
                const std::vector<std::pair<std::string, const Mat*>>& blocks) {
    nlohmann::json blocklist = nlohmann::json::array();
    for (const auto& [name, mat] : blocks) {
        blocklist.push_back(nlohmann::json{{"name", name},
                                           {"rows", mat->rows()},
                                           {"cols", mat->cols()},
                                           {"hash", hash_hex(mat_hash(*mat))}});
    }
    header["blocks"] = std::move(blocklist);
    const std::string head = json_bytes(header);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t head_len = head.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, mat] : blocks)
        out.write(reinterpret_cast<const char*>(mat->data()),
                  static_cast<std::streamsize>(mat->size() * sizeof(double)));
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::pair<nlohmann::json, std::map<std::string, Mat>> read_slab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(path + ": not a slab file");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw IoError(path + ": unsupported slab version " + std::to_string(version));
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    if (!in) throw IoError(path + ": truncated header length");
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!in) throw IoError(path + ": truncated header");
    nlohmann::json header = nlohmann::json::parse(head, nullptr, false);
    if (header.is_discarded()) throw IoError(path + ": corrupt header JSON");

    std::map<std::string, Mat> blocks;
    if (!header.contains("blocks") || !header["blocks"].is_array())
        throw IoError(path + ": header lists no blocks");
    for (const auto& b : header["blocks"]) {
        const std::string name = b.at("name").get<std::string>();
        const std::size_t rows = b.at("rows").get<std::size_t>();
        const std::size_t cols = b.at("cols").get<std::size_t>();
        Mat m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw IoError(path + ": truncated block \"" + name + "\"");
        const std::string expect = b.at("hash").get<std::string>();
        if (hash_hex(mat_hash(m)) != expect)
            throw IoError(path + ": hash mismatch in block \"" + name + "\"");
        blocks.emplace(name, std::move(m));
    }
    return {std::move(header), std::move(blocks)};
}

// ---------- typed artifacts ----------

void save_dataset(const std::string& path, const ActivationDataset& data,
                  const GroundTruthDictionary& dict, const nlohmann::json& provenance) {
    nlohmann::json header{{"type", "dataset"},
                          {"spec", to_json(data.spec)},
                          {"noise_sigma", data.noise_sigma},
                          {"dict_hash", hash_hex(data.dict_hash)},
                          {"provenance", provenance}};
    std::vector<std::pair<std::string, const Mat*>> blocks{{"X", &data.X}, {"D", &dict.D}};
    if (!data.S.empty()) blocks.insert(blocks.begin() + 1, {"S", &data.S});
    write_slab(path, std::move(header), blocks);
}

StoredDataset load_dataset(const std::string& path) {
    auto [header, blocks] = read_slab(path);
    if (header.value("type", "") != "dataset")
        throw IoError(path + ": not a dataset file");
    StoredDataset out;
    out.header = header;
    out.data.spec = feature_spec_from_json(header.at("spec"), path + "#spec");
    out.data.noise_sigma = header.value("noise_sigma", 0.0);
    out.data.X = std::move(blocks.at("X"));
    if (blocks.count("S")) out.data.S = std::move(blocks.at("S"));
    out.dict.D = std::move(blocks.at("D"));
    out.data.dict_hash = mat_hash(out.dict.D);
    if (hash_hex(out.data.dict_hash) != header.value("dict_hash", ""))
        throw IoError(path + ": dictionary hash mismatch");
    return out;
}

void save_model(const std::string& path, const SaeModel& model,
                const nlohmann::json& provenance) {
    model.require_valid();
    nlohmann::json header{{"type", "sae_model"},
                          {"d_in", model.input_dim()},
                          {"d_out", model.output_dim()},
                          {"m", model.width()},
                          {"provenance", provenance}};
    write_slab(path, std::move(header),
               {{"W_enc", &model.W_enc},
                {"b_enc", &model.b_enc},
                {"W_dec", &model.W_dec},
                {"b_dec", &model.b_dec}});
}

StoredModel load_model(const std::string& path) {
    auto [header, blocks] = read_slab(path);
    if (header.value("type", "") != "sae_model")
        throw IoError(path + ": not a model file");
    StoredModel out;
    out.header = header;
    out.model.W_enc = std::move(blocks.at("W_enc"));
    out.model.b_enc = std::move(blocks.at("b_enc"));
    out.model.W_dec = std::move(blocks.at("W_dec"));
    out.model.b_dec = std::move(blocks.at("b_dec"));
    out.model.require_valid();
    return out;
}

void save_space(const std::string& path, const EmbeddingSpace& space,
                const nlohmann::json& provenance) {
    nlohmann::json header{{"type", "embedding_space"},
                          {"vocab",
                           {{"tokens", space.vocab.id_to_token},
                            {"counts", space.vocab.counts},
                            {"min_count", space.vocab.min_count}}},
                          {"embed_config", to_json(space.config)},
                          {"provenance", provenance}};
    write_slab(path, std::move(header), {{"vectors", &space.vectors}});
}

EmbeddingSpace load_space(const std::string& path) {
    auto [header, blocks] = read_slab(path);
    if (header.value("type", "") != "embedding_space")
        throw IoError(path + ": not an embedding-space file");
    EmbeddingSpace space;
    const nlohmann::json& vocab = header.at("vocab");
    space.vocab.id_to_token = vocab.at("tokens").get<std::vector<std::string>>();
    space.vocab.counts = vocab.at("counts").get<std::vector<std::size_t>>();
    space.vocab.min_count = vocab.value("min_count", 1);
    for (std::size_t i = 0; i < space.vocab.id_to_token.size(); ++i)
        space.vocab.token_to_id.emplace(space.vocab.id_to_token[i], i);
    space.config = embed_config_from_json(header.at("embed_config"),
                                          path + "#embed_config");
    space.vectors = std::move(blocks.at("vectors"));
    if (space.vectors.rows() != space.vocab.size())
        throw IoError(path + ": vector count does not match vocabulary");
    return space;
}

}  // namespace semlab
