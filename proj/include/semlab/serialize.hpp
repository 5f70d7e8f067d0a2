#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semlab/embeddings.hpp"
#include "semlab/mat.hpp"
#include "semlab/sae.hpp"
#include "semlab/synth.hpp"

namespace semlab {

// ---------- plain files ----------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json read_json_file(const std::string& path);
// Canonical bytes: dump(2) with sorted keys (nlohmann default) + newline.
// Everything JSON this project writes goes through here, which is what makes
// "byte-identical metrics" a meaningful contract.
std::string json_bytes(const nlohmann::json& j);
void write_json_file(const std::string& path, const nlohmann::json& j);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::uint64_t file_hash(const std::string& path);
std::string hash_hex(std::uint64_t h);

// ---------- strict config reading ----------

// Typed field access over one JSON object with exact error paths; finish()
// rejects keys that were never read (unknown-field detection).
class JsonReader {
public:
    JsonReader(const nlohmann::json& j, std::string path);

    bool has(const char* key) const;
    double num(const char* key);
    double num_or(const char* key, double fallback);
    std::uint64_t u64(const char* key);
    std::uint64_t u64_or(const char* key, std::uint64_t fallback);
    std::size_t index(const char* key);
    std::size_t index_or(const char* key, std::size_t fallback);
    bool flag_or(const char* key, bool fallback);
    std::string str(const char* key);
    std::string str_or(const char* key, const std::string& fallback);
    // Marks the key consumed and returns it raw (arrays, nested objects).
    const nlohmann::json& raw(const char* key);
    const nlohmann::json* raw_or_null(const char* key);
    void finish();

    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& key, const std::string& why) const;

private:
    const nlohmann::json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

// ---------- config <-> json ----------

nlohmann::json to_json(const FeatureGenSpec& spec);
FeatureGenSpec feature_spec_from_json(const nlohmann::json& j, const std::string& at);

nlohmann::json to_json(const EmbedConfig& cfg);
EmbedConfig embed_config_from_json(const nlohmann::json& j, const std::string& at);

nlohmann::json to_json(const SaeConfig& cfg);
SaeConfig sae_config_from_json(const nlohmann::json& j, const std::string& at);

nlohmann::json to_json(const MatryoshkaConfig& mcfg);
MatryoshkaConfig matryoshka_from_json(const nlohmann::json& j, const std::string& at);

// ---------- binary container ----------
//
// Layout: "SLAB" magic, u32 version, u64 header length, JSON header bytes,
// then the declared blocks as raw little-endian doubles. The header carries
// each block's shape and content hash; reads verify both.

void write_slab(const std::string& path, nlohmann::json header,
                const std::vector<std::pair<std::string, const Mat*>>& blocks);
std::pair<nlohmann::json, std::map<std::string, Mat>> read_slab(const std::string& path);

// ---------- typed artifacts ----------

void save_dataset(const std::string& path, const ActivationDataset& data,
                  const GroundTruthDictionary& dict, const nlohmann::json& provenance);

struct StoredDataset {
    ActivationDataset data;
    GroundTruthDictionary dict;
    nlohmann::json header;
};
StoredDataset load_dataset(const std::string& path);

void save_model(const std::string& path, const SaeModel& model,
                const nlohmann::json& provenance);

struct StoredModel {
    SaeModel model;
    nlohmann::json header;
};
StoredModel load_model(const std::string& path);

void save_space(const std::string& path, const EmbeddingSpace& space,
                const nlohmann::json& provenance);
EmbeddingSpace load_space(const std::string& path);

}  // namespace semlab
