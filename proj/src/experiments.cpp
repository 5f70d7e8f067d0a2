#include "semlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "semlab/analogy_corpus.hpp"
#include "semlab/analysis.hpp"
#include "semlab/corpus.hpp"
#include "semlab/embeddings.hpp"
#include "semlab/errors.hpp"
#include "semlab/neighbors.hpp"
#include "semlab/sae.hpp"
#include "semlab/serialize.hpp"
#include "semlab/synth.hpp"
#include "semlab/version.hpp"

namespace semlab {

namespace {

namespace fs = std::filesystem;

struct Ctx {
    const nlohmann::json* config = nullptr;
    std::string config_dir;
    std::string out_dir;
    std::string name;
    std::uint64_t seed = 0;
    nlohmann::json artifacts = nlohmann::json::object();

    std::string in_path(const std::string& p) const {
        fs::path fp(p);
        const std::string full =
            fp.is_absolute() ? fp.string() : (fs::path(config_dir) / fp).string();
        if (!fs::exists(full)) throw IoError("input not found: " + full);
        return full;
    }
    std::string out_path(const std::string& file) const {
        return (fs::path(out_dir) / file).string();
    }
    void record(const std::string& file) {
        artifacts[file] = hash_hex(file_hash(out_path(file)));
    }
    nlohmann::json provenance() const {
        return nlohmann::json{
            {"config", *config}, {"seed", seed}, {"version", kVersion}};
    }
};

SimilarityMetric metric_from_string(const std::string& s, JsonReader& r,
                                    const char* key) {
    if (s == "cosine") return SimilarityMetric::cosine;
    if (s == "euclidean") return SimilarityMetric::euclidean;
    if (s == "cityblock") return SimilarityMetric::cityblock;
    r.fail(key, "expected \"cosine\", \"euclidean\" or \"cityblock\"");
}

struct TrainInput {
    Mat X;
    nlohmann::json header;
};

TrainInput load_training_matrix(const std::string& path) {
    auto [header, blocks] = read_slab(path);
    const std::string type = header.value("type", "");
    if (type == "dataset") return {std::move(blocks.at("X")), std::move(header)};
    if (type == "embedding_space")
        return {std::move(blocks.at("vectors")), std::move(header)};
    throw IoError(path + ": expected a dataset or embedding-space file");
}

std::string fmt(double v) { return nlohmann::json(v).dump(); }

// ---------------- generation ----------------

void h_gen_data(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    JsonReader d(top.raw("data"), "$.data");
    FeatureGenSpec spec = feature_spec_from_json(d.raw("spec"), "$.data.spec");
    const std::size_t N = d.index("N");
    const std::size_t dim = d.index("d");
    const std::string mode_s = d.str_or("dict_mode", "random");
    DictionaryMode mode = DictionaryMode::random;
    if (mode_s == "orthogonal")
        mode = DictionaryMode::orthogonal;
    else if (mode_s != "random")
        d.fail("dict_mode", "expected \"random\" or \"orthogonal\"");
    d.finish();

    spec.seed = derive_seed(ctx.seed, "gen-data");
    Rng rng_dict(derive_seed(ctx.seed, "dictionary"));
    const GroundTruthDictionary dict = make_dictionary(spec.n, dim, mode, rng_dict);
    Rng rng_codes(derive_seed(ctx.seed, "codes"));
    const Mat S = sample_codes(spec, N, rng_codes);
    Rng rng_noise(derive_seed(ctx.seed, "noise"));
    ActivationDataset data = render_activations(S, dict, spec.noise_sigma, rng_noise);
    data.spec = spec;

    const std::string file = ctx.name + ".slab";
    save_dataset(ctx.out_path(file), data, dict, ctx.provenance());
    ctx.record(file);

    double mean_sq = 0.0;
    for (std::size_t i = 0; i < data.X.rows(); ++i) {
        const double n2 = l2_norm(data.X.row_span(i));
        mean_sq += n2 * n2;
    }
    mean_sq /= static_cast<double>(data.X.rows());
    metrics["n"] = spec.n;
    metrics["d"] = dim;
    metrics["N"] = N;
    metrics["dict_mode"] = mode_s;
    metrics["noise_sigma"] = spec.noise_sigma;
    metrics["mean_sq_norm"] = mean_sq;
    metrics["X_hash"] = hash_hex(mat_hash(data.X));
    metrics["dict_hash"] = hash_hex(data.dict_hash);
    metrics["file"] = file;
}

void h_gen_corpus(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    JsonReader c(top.raw("corpus"), "$.corpus");
    const std::string tmpl = c.str_or("template", "gendered");
    if (tmpl != "gendered")
        c.fail("template", "unknown template \"" + tmpl + "\" (available: gendered)");
    const std::size_t sentences = c.index_or("sentences", 13000);
    c.finish();

    const std::string text =
        make_gendered_corpus(sentences, derive_seed(ctx.seed, "gen-corpus"));
    const std::string file = ctx.name + ".txt";
    write_text_file(ctx.out_path(file), text);
    ctx.record(file);

    auto [vocab, corpus] = build_vocab(text, 1);
    metrics["sentences"] = sentences;
    metrics["total_tokens"] = corpus.total_tokens;
    metrics["vocab_size"] = vocab.size();
    metrics["corpus_hash"] = hash_hex(fnv1a64(text));
    metrics["file"] = file;
}

// ---------------- training ----------------

void h_train_embeddings(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const std::string corpus_path = ctx.in_path(top.str("corpus"));
    const std::size_t min_count = top.index_or("min_count", 1);
    EmbedConfig cfg;
    if (top.has("embed")) cfg = embed_config_from_json(top.raw("embed"), "$.embed");
    cfg.seed = derive_seed(ctx.seed, "train-embeddings");

    auto [vocab, corpus] = build_vocab(read_text_file(corpus_path), min_count);
    const EmbeddingSpace space = train_embeddings(corpus, vocab, cfg);

    const std::string file = ctx.name + ".slab";
    save_space(ctx.out_path(file), space, ctx.provenance());
    ctx.record(file);
    metrics["V"] = vocab.size();
    metrics["dim"] = cfg.dim;
    metrics["total_tokens"] = corpus.total_tokens;
    metrics["algorithm"] = cfg.algorithm == EmbedAlgo::cbow ? "cbow" : "skipgram";
    metrics["vectors_hash"] = hash_hex(mat_hash(space.vectors));
    metrics["file"] = file;
}

void write_train_log(const Ctx& ctx, const std::string& file,
                     const std::vector<EpochStats>& log) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t e = 0; e < log.size(); ++e)
        rows.push_back({std::to_string(e), fmt(log[e].total), fmt(log[e].recon),
                        fmt(log[e].sparsity), fmt(log[e].alive_frac)});
    write_csv(ctx.out_path(file), {"epoch", "total", "recon", "sparsity", "alive_frac"},
              rows);
}

void finish_dictionary_training(Ctx& ctx, nlohmann::json& metrics,
                                const SaeConfig& scfg, const TrainResult& result,
                                nlohmann::json extra_provenance) {
    nlohmann::json prov = ctx.provenance();
    prov["sae_config"] = to_json(scfg);
    for (auto& [k, v] : extra_provenance.items()) prov[k] = v;
    if (!result.log.empty()) {
        const EpochStats& last = result.log.back();
        prov["final_epoch"] =
            nlohmann::json{{"total", last.total},
                           {"recon", last.recon},
                           {"sparsity", last.sparsity},
                           {"alive_frac", last.alive_frac}};
    }
    const std::string model_file = ctx.name + ".slab";
    save_model(ctx.out_path(model_file), result.model, prov);
    ctx.record(model_file);
    const std::string log_file = ctx.name + "_log.csv";
    write_train_log(ctx, log_file, result.log);
    ctx.record(log_file);

    metrics["m"] = scfg.m;
    metrics["lambda"] = scfg.lambda;
    metrics["epochs"] = result.log.size();
    metrics["first_total"] = result.log.front().total;
    metrics["final_total"] = result.log.back().total;
    metrics["final_recon"] = result.log.back().recon;
    metrics["final_sparsity"] = result.log.back().sparsity;
    metrics["final_alive_frac"] = result.log.back().alive_frac;
    metrics["loss_drop"] = 1.0 - result.log.back().total / result.log.front().total;
    metrics["W_dec_hash"] = hash_hex(mat_hash(result.model.W_dec));
    metrics["W_enc_hash"] = hash_hex(mat_hash(result.model.W_enc));
    metrics["file"] = model_file;
    metrics["log_file"] = log_file;
}

void h_train_sae(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    TrainInput in = load_training_matrix(ctx.in_path(top.str("data")));
    SaeConfig scfg = sae_config_from_json(top.raw("sae"), "$.sae");
    scfg.seed = derive_seed(ctx.seed, "train-sae");
    ActivationDataset data;
    data.X = std::move(in.X);
    const TrainResult result = train_sae(data, scfg);
    finish_dictionary_training(ctx, metrics, scfg, result, nlohmann::json::object());
}

void h_train_transcoder(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    TrainInput in = load_training_matrix(ctx.in_path(top.str("data")));
    SaeConfig scfg = sae_config_from_json(top.raw("sae"), "$.sae");
    scfg.seed = derive_seed(ctx.seed, "train-transcoder");
    nlohmann::json extra = nlohmann::json::object();
    Mat X_out;
    if (top.has("target")) {
        X_out = load_training_matrix(ctx.in_path(top.str("target"))).X;
    } else {
        JsonReader mapr(top.raw("map"), "$.map");
        const std::string mk = mapr.str_or("kind", "rotation");
        if (mk != "rotation")
            mapr.fail("kind", "unknown map kind \"" + mk + "\" (available: rotation)");
        mapr.finish();
        Rng rng(derive_seed(ctx.seed, "sublayer"));
        const GroundTruthDictionary R =
            make_dictionary(in.X.cols(), in.X.cols(), DictionaryMode::orthogonal, rng);
        X_out = matmul(in.X, R.D);
        extra["sublayer_hash"] = hash_hex(mat_hash(R.D));
        metrics["sublayer_hash"] = extra["sublayer_hash"];
    }
    TranscoderTask task{std::move(in.X), std::move(X_out)};
    const TrainResult result = train_transcoder(task, scfg);
    finish_dictionary_training(ctx, metrics, scfg, result, std::move(extra));
}

void h_train_matryoshka(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    TrainInput in = load_training_matrix(ctx.in_path(top.str("data")));
    SaeConfig scfg = sae_config_from_json(top.raw("sae"), "$.sae");
    scfg.seed = derive_seed(ctx.seed, "train-matryoshka");
    MatryoshkaConfig mcfg;
    if (top.has("matryoshka")) {
        const nlohmann::json& mj = top.raw("matryoshka");
        if (mj.is_object() && mj.contains("groups")) {
            JsonReader mr(mj, "$.matryoshka");
            mcfg = default_matryoshka(scfg.m, mr.index("groups"));
            mr.finish();
        } else {
            mcfg = matryoshka_from_json(mj, "$.matryoshka");
        }
    } else {
        mcfg = default_matryoshka(scfg.m);
    }
    ActivationDataset data;
    data.X = std::move(in.X);
    const TrainResult result = train_matryoshka(data, scfg, mcfg);
    nlohmann::json extra{{"matryoshka", to_json(mcfg)}};
    finish_dictionary_training(ctx, metrics, scfg, result, std::move(extra));
    metrics["boundaries"] = mcfg.boundaries;
}

// ---------------- evaluation ----------------

void h_eval_recovery(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const StoredDataset ds = load_dataset(ctx.in_path(top.str("data")));
    const StoredModel mod = load_model(ctx.in_path(top.str("model")));
    const double tau = top.num_or("tau", 0.8);
    const double eps = top.num_or("eps_fire", kFireEps);
    const RecoveryReport rep = recovery_report(ds.dict, mod.model, ds.data.X, tau, eps);

    std::vector<std::vector<std::string>> rows;
    nlohmann::json matching = nlohmann::json::array();
    for (const MatchEntry& e : rep.matching) {
        rows.push_back({std::to_string(e.true_feature), std::to_string(e.latent),
                        fmt(e.cosine)});
        matching.push_back(nlohmann::json{
            {"true_feature", e.true_feature}, {"latent", e.latent}, {"cosine", e.cosine}});
    }
    const std::string csv = ctx.name + "_matching.csv";
    write_csv(ctx.out_path(csv), {"true_feature", "latent", "cosine"}, rows);
    ctx.record(csv);

    std::size_t recovered = 0;
    for (char f : rep.recovered) recovered += f ? 1 : 0;
    metrics["mean_max_cosine"] = rep.mean_max_cosine;
    metrics["n_true"] = rep.recovered.size();
    metrics["matched"] = rep.matching.size();
    metrics["recovered_fraction"] =
        static_cast<double>(recovered) / static_cast<double>(rep.recovered.size());
    metrics["alive_latents"] = rep.alive_latents;
    metrics["tau"] = tau;
    metrics["eps_fire"] = eps;
    metrics["matching"] = std::move(matching);
}

void h_eval_absorption(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const StoredDataset ds = load_dataset(ctx.in_path(top.str("data")));
    const StoredModel mod = load_model(ctx.in_path(top.str("model")));
    // Default tau -1 so every parent gets its best latent, whatever the fit.
    const double tau = top.num_or("tau", -1.0);
    const double eps = top.num_or("eps_fire", kFireEps);
    const auto matching = match_features(ds.dict, mod.model, tau);
    const AbsorptionReport rep = absorption_score(mod.model, ds.data, matching, eps);

    std::vector<std::vector<std::string>> rows;
    nlohmann::json pairs = nlohmann::json::array();
    for (const AbsorptionEntry& e : rep.pairs) {
        rows.push_back({std::to_string(e.parent), std::to_string(e.child),
                        std::to_string(e.parent_latent), fmt(e.rate_child_present),
                        fmt(e.rate_child_absent), fmt(e.absorption)});
        pairs.push_back(nlohmann::json{{"parent", e.parent},
                                       {"child", e.child},
                                       {"parent_latent", e.parent_latent},
                                       {"rate_child_present", e.rate_child_present},
                                       {"rate_child_absent", e.rate_child_absent},
                                       {"absorption", e.absorption},
                                       {"n_child_present", e.n_child_present},
                                       {"n_child_absent", e.n_child_absent}});
    }
    const std::string csv = ctx.name + "_pairs.csv";
    write_csv(ctx.out_path(csv),
              {"parent", "child", "parent_latent", "rate_child_present",
               "rate_child_absent", "absorption"},
              rows);
    ctx.record(csv);
    metrics["mean_absorption"] = rep.mean_absorption;
    metrics["n_pairs"] = rep.pairs.size();
    metrics["tau"] = tau;
    metrics["eps_fire"] = eps;
    metrics["pairs"] = std::move(pairs);
}

void h_eval_composition(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const StoredDataset ds = load_dataset(ctx.in_path(top.str("data")));
    const StoredModel mod = load_model(ctx.in_path(top.str("model")));
    const double margin = top.num_or("margin", 0.1);
    const double eps = top.num_or("eps_fire", kFireEps);
    const CompositionReport rep = composition_score(mod.model, ds.data, margin, eps);

    std::vector<std::vector<std::string>> rows;
    nlohmann::json latents = nlohmann::json::array();
    for (const CompositionEntry& e : rep.latents) {
        rows.push_back({std::to_string(e.latent), fmt(e.best_single_f1),
                        std::to_string(e.best_single_attr), fmt(e.best_pair_f1),
                        std::to_string(e.pair_a), std::to_string(e.pair_b),
                        e.composite ? "1" : "0"});
        latents.push_back(nlohmann::json{{"latent", e.latent},
                                         {"best_single_f1", e.best_single_f1},
                                         {"best_single_attr", e.best_single_attr},
                                         {"best_pair_f1", e.best_pair_f1},
                                         {"pair_a", e.pair_a},
                                         {"pair_b", e.pair_b},
                                         {"composite", e.composite}});
    }
    const std::string csv = ctx.name + "_latents.csv";
    write_csv(ctx.out_path(csv),
              {"latent", "best_single_f1", "best_single_attr", "best_pair_f1", "pair_a",
               "pair_b", "composite"},
              rows);
    ctx.record(csv);
    metrics["composite_fraction"] = rep.composite_fraction;
    metrics["n_alive"] = rep.latents.size();
    metrics["margin"] = margin;
    metrics["eps_fire"] = eps;
    metrics["latents"] = std::move(latents);
}

void h_feature_card(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const StoredDataset ds = load_dataset(ctx.in_path(top.str("data")));
    const StoredModel mod = load_model(ctx.in_path(top.str("model")));
    std::vector<std::size_t> latents;
    if (top.has("latents")) {
        const nlohmann::json& arr = top.raw("latents");
        if (!arr.is_array()) top.fail("latents", "expected an array of latent indices");
        for (const auto& v : arr) {
            if (!v.is_number_integer()) top.fail("latents", "expected integers");
            latents.push_back(v.get<std::size_t>());
        }
    }
    if (top.has("latent")) latents.push_back(top.index("latent"));
    if (latents.empty())
        top.fail("latent", "specify \"latent\" or a \"latents\" array");
    const std::size_t top_k = top.index_or("top_k", 10);
    const std::size_t n_neighbors = top.index_or("n_neighbors", 5);
    const std::size_t n_effects = top.index_or("n_effects", 10);
    const double eps = top.num_or("eps_fire", kFireEps);
    const std::string readout_s = top.str_or("readout", "identity");
    Mat readout;
    if (readout_s == "identity") {
        readout = Mat(mod.model.output_dim(), mod.model.output_dim());
        for (std::size_t i = 0; i < readout.rows(); ++i) readout(i, i) = 1.0;
    } else if (readout_s != "none") {
        top.fail("readout", "expected \"identity\" or \"none\"");
    }

    nlohmann::json cards = nlohmann::json::array();
    std::string text;
    for (std::size_t j : latents) {
        const FeatureCard card =
            feature_card(mod.model, ds.data.X, j, top_k, ds.dict.D, readout, {},
                         n_neighbors, n_effects, eps);
        nlohmann::json cj{{"latent", card.latent}, {"deciles", card.deciles}};
        nlohmann::json tops = nlohmann::json::array();
        for (const CardSample& s : card.top_samples)
            tops.push_back(nlohmann::json{{"sample", s.sample}, {"activation", s.activation}});
        cj["top_samples"] = std::move(tops);
        nlohmann::json near = nlohmann::json::array();
        for (const CardNeighbor& nb : card.nearest)
            near.push_back(nlohmann::json{{"index", nb.index}, {"cosine", nb.cosine}});
        cj["nearest_true_features"] = std::move(near);
        nlohmann::json pos = nlohmann::json::array(), neg = nlohmann::json::array();
        for (const ReadoutEffect& e : card.positive_effects)
            pos.push_back(nlohmann::json{{"index", e.index}, {"value", e.value}});
        for (const ReadoutEffect& e : card.negative_effects)
            neg.push_back(nlohmann::json{{"index", e.index}, {"value", e.value}});
        cj["positive_effects"] = std::move(pos);
        cj["negative_effects"] = std::move(neg);
        cards.push_back(std::move(cj));
        text += render_card(card);
    }
    const std::string txt = ctx.name + ".txt";
    write_text_file(ctx.out_path(txt), text);
    ctx.record(txt);
    metrics["count"] = latents.size();
    metrics["cards"] = std::move(cards);
}

void h_steer(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const StoredDataset ds = load_dataset(ctx.in_path(top.str("data")));
    const StoredModel mod = load_model(ctx.in_path(top.str("model")));
    const std::size_t latent = top.index("latent");
    if (latent >= mod.model.width())
        throw IndexError("steer: latent " + std::to_string(latent) + " out of range");
    const bool additive = top.flag_or("additive", false);
    std::size_t samples = top.index_or("samples", 200);
    samples = std::min(samples, ds.data.X.rows());
    if (samples == 0) throw ValidationError("steer: no samples");

    double value;
    if (top.has("value")) {
        value = top.num("value");
    } else {
        const double scale = top.num_or("scale", 10.0);
        const Mat F = encode(mod.model, ds.data.X);
        double peak = 0.0;
        for (std::size_t i = 0; i < F.rows(); ++i) peak = std::max(peak, F(i, latent));
        if (peak <= kFireEps)
            throw DeadFeatureError("steer: latent " + std::to_string(latent) +
                                   " never fires; give an explicit \"value\"");
        value = scale * peak;
    }

    // The true feature this latent represents = its closest dictionary row.
    std::size_t target = 0;
    double best = -2.0;
    for (std::size_t t = 0; t < ds.dict.D.rows(); ++t) {
        const double c = cosine(mod.model.W_dec.row_span(latent), ds.dict.D.row_span(t));
        if (c > best) {
            best = c;
            target = t;
        }
    }

    std::size_t hits = 0;
    double mean_shift = 0.0;
    Mat x(1, ds.data.X.cols());
    for (std::size_t i = 0; i < samples; ++i) {
        std::copy(ds.data.X.row(i), ds.data.X.row(i) + ds.data.X.cols(), x.row(0));
        const Mat steered = clamp_feature(mod.model, x, latent, value, additive);
        const Mat plain = decode(mod.model, encode(mod.model, x));
        mean_shift += l2_dist(steered.row_span(0), plain.row_span(0));
        std::vector<double> dir(ds.data.X.cols());
        for (std::size_t c = 0; c < dir.size(); ++c)
            dir[c] = steered(0, c) - mod.model.b_dec(0, c);
        std::size_t nearest = 0;
        double nb = -2.0;
        for (std::size_t t = 0; t < ds.dict.D.rows(); ++t) {
            const double cs = cosine(dir, ds.dict.D.row_span(t));
            if (cs > nb) {
                nb = cs;
                nearest = t;
            }
        }
        hits += nearest == target ? 1 : 0;
    }
    metrics["latent"] = latent;
    metrics["target_true_feature"] = target;
    metrics["target_cosine"] = best;
    metrics["value"] = value;
    metrics["additive"] = additive;
    metrics["samples"] = samples;
    metrics["hit_fraction"] = static_cast<double>(hits) / static_cast<double>(samples);
    metrics["mean_shift"] = mean_shift / static_cast<double>(samples);
}

void h_analogy(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const EmbeddingSpace space = load_space(ctx.in_path(top.str("space")));
    const bool exclude = top.flag_or("exclude_queries", true);
    const std::size_t top_k = top.index_or("top_k", 10);
    const nlohmann::json& queries = top.raw("queries");
    if (!queries.is_array() || queries.empty())
        top.fail("queries", "expected a non-empty array of {a,b,c[,expect]}");

    nlohmann::json out_queries = nlohmann::json::array();
    std::vector<std::vector<std::string>> rows;
    double rank_sum = 0.0;
    std::size_t ranked = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        JsonReader q(queries[qi], "$.queries[" + std::to_string(qi) + "]");
        const std::string a = q.str("a"), b = q.str("b"), c = q.str("c");
        const std::string expect = q.str_or("expect", "");
        q.finish();
        const auto hits = analogy(space, a, b, c, exclude, top_k);
        nlohmann::json hj = nlohmann::json::array();
        for (const AnalogyHit& h : hits)
            hj.push_back(nlohmann::json{{"token", h.token}, {"similarity", h.similarity}});
        nlohmann::json qj{{"a", a}, {"b", b}, {"c", c}, {"hits", std::move(hj)}};
        std::size_t rank = 0;
        if (!expect.empty()) {
            space.vocab.id_of(expect);  // fail loudly on typos
            const auto full = analogy(space, a, b, c, exclude, space.vocab.size());
            for (std::size_t r = 0; r < full.size(); ++r)
                if (full[r].token == expect) {
                    rank = r + 1;
                    break;
                }
            qj["expect"] = expect;
            qj["rank"] = rank;
            rank_sum += static_cast<double>(rank);
            ++ranked;
        }
        rows.push_back({a, b, c, expect, std::to_string(rank),
                        hits.empty() ? "" : hits.front().token,
                        hits.empty() ? "" : fmt(hits.front().similarity)});
        out_queries.push_back(std::move(qj));
    }
    const std::string csv = ctx.name + "_queries.csv";
    write_csv(ctx.out_path(csv), {"a", "b", "c", "expect", "rank", "top1", "top1_sim"},
              rows);
    ctx.record(csv);
    metrics["V"] = space.vocab.size();
    metrics["top_k"] = top_k;
    metrics["exclude_queries"] = exclude;
    metrics["queries"] = std::move(out_queries);
    if (ranked) metrics["mean_rank"] = rank_sum / static_cast<double>(ranked);
}

nlohmann::json graph_to_json(const NeighborGraph& g) {
    nlohmann::json adj = nlohmann::json::array();
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
        nlohmann::json nb = nlohmann::json::array();
        for (const NeighborEntry& e : g.neighbors[i])
            nb.push_back(
                nlohmann::json{{"node", g.labels[e.node]}, {"similarity", e.similarity}});
        adj.push_back(nlohmann::json{{"node", g.labels[i]}, {"neighbors", std::move(nb)}});
    }
    return adj;
}

void write_graph_csv(Ctx& ctx, const std::string& file, const NeighborGraph& g) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < g.labels.size(); ++i)
        for (std::size_t r = 0; r < g.neighbors[i].size(); ++r)
            rows.push_back({g.labels[i], g.labels[g.neighbors[i][r].node],
                            std::to_string(r + 1), fmt(g.neighbors[i][r].similarity)});
    write_csv(ctx.out_path(file), {"source", "target", "rank", "similarity"}, rows);
    ctx.record(file);
}

void h_nn_overlap(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const EmbeddingSpace a = load_space(ctx.in_path(top.str("space_a")));
    const EmbeddingSpace b = load_space(ctx.in_path(top.str("space_b")));
    const std::size_t k = top.index_or("k", 10);
    const SimilarityMetric metric =
        metric_from_string(top.str_or("metric", "cosine"), top, "metric");
    const OverlapReport rep = nn_overlap(a, b, k, metric);

    std::vector<std::vector<std::string>> rows;
    for (const OverlapEntry& e : rep.per_token)
        rows.push_back({e.token, fmt(e.overlap), fmt(e.jaccard)});
    const std::string csv = ctx.name + "_tokens.csv";
    write_csv(ctx.out_path(csv), {"token", "overlap", "jaccard"}, rows);
    ctx.record(csv);

    metrics["V"] = a.vocab.size();
    metrics["k"] = k;
    metrics["metric"] = metric_name(metric);
    metrics["mean_overlap"] = rep.mean_overlap;
    metrics["mean_jaccard"] = rep.mean_jaccard;
    metrics["baseline"] = rep.baseline;
    metrics["ratio_to_baseline"] =
        rep.baseline > 0.0 ? rep.mean_overlap / rep.baseline : 0.0;
}

void h_unified_net(JsonReader& top, Ctx& ctx, nlohmann::json& metrics) {
    const EmbeddingSpace space = load_space(ctx.in_path(top.str("space")));
    const StoredModel mod = load_model(ctx.in_path(top.str("model")));
    const std::size_t k = top.index_or("k", 10);
    const SimilarityMetric metric =
        metric_from_string(top.str_or("metric", "cosine"), top, "metric");
    const double eps = top.num_or("eps_fire", kFireEps);
    const NeighborGraph g = unified_network(space, mod.model, k, metric, eps);

    write_graph_csv(ctx, ctx.name + "_edges.csv", g);
    const std::size_t V = space.vocab.size();
    std::size_t cross = 0;
    for (std::size_t i = 0; i < g.labels.size(); ++i)
        for (const NeighborEntry& e : g.neighbors[i])
            if ((i < V) != (e.node < V)) ++cross;
    metrics["n_nodes"] = g.labels.size();
    metrics["n_tokens"] = V;
    metrics["n_features"] = g.labels.size() - V;
    metrics["k"] = k;
    metrics["metric"] = metric_name(metric);
    metrics["cross_type_edges"] = cross;
    metrics["graph"] = graph_to_json(g);
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {
        "gen-data",        "gen-corpus",      "train-embeddings", "train-sae",
        "train-transcoder", "train-matryoshka", "eval-recovery",   "eval-absorption",
        "eval-composition", "feature-card",    "steer",            "analogy",
        "nn-overlap",      "unified-net"};
    return kinds;
}

RunReport run(const nlohmann::json& config, const std::string& config_dir, bool quiet) {
    const auto t0 = std::chrono::steady_clock::now();
    JsonReader top(config, "$");
    const std::string kind = top.str("kind");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        top.fail("kind", "unknown experiment kind \"" + kind + "\"");
    const std::uint64_t seed = top.u64("seed");
    std::string default_name = kind;
    std::replace(default_name.begin(), default_name.end(), '-', '_');
    const std::string name = top.str_or("name", default_name);
    const std::string out_rel = top.str_or("out", ".");

    Ctx ctx;
    ctx.config = &config;
    ctx.config_dir = config_dir.empty() ? "." : config_dir;
    fs::path outp(out_rel);
    ctx.out_dir = outp.is_absolute() ? outp.string()
                                     : (fs::path(ctx.config_dir) / outp).string();
    fs::create_directories(ctx.out_dir);
    ctx.name = name;
    ctx.seed = seed;

    nlohmann::json metrics = nlohmann::json::object();
    if (kind == "gen-data")
        h_gen_data(top, ctx, metrics);
    else if (kind == "gen-corpus")
        h_gen_corpus(top, ctx, metrics);
    else if (kind == "train-embeddings")
        h_train_embeddings(top, ctx, metrics);
    else if (kind == "train-sae")
        h_train_sae(top, ctx, metrics);
    else if (kind == "train-transcoder")
        h_train_transcoder(top, ctx, metrics);
    else if (kind == "train-matryoshka")
        h_train_matryoshka(top, ctx, metrics);
    else if (kind == "eval-recovery")
        h_eval_recovery(top, ctx, metrics);
    else if (kind == "eval-absorption")
        h_eval_absorption(top, ctx, metrics);
    else if (kind == "eval-composition")
        h_eval_composition(top, ctx, metrics);
    else if (kind == "feature-card")
        h_feature_card(top, ctx, metrics);
    else if (kind == "steer")
        h_steer(top, ctx, metrics);
    else if (kind == "analogy")
        h_analogy(top, ctx, metrics);
    else if (kind == "nn-overlap")
        h_nn_overlap(top, ctx, metrics);
    else if (kind == "unified-net")
        h_unified_net(top, ctx, metrics);
    top.finish();

    metrics["kind"] = kind;
    metrics["name"] = name;
    metrics["seed"] = seed;
    metrics["config"] = config;
    write_json_file(ctx.out_path(name + "_metrics.json"), metrics);

    RunReport report;
    report.resolved_config = config;
    report.metrics = metrics;
    report.artifacts = ctx.artifacts;
    report.tool_version = kVersion;
    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json_file(ctx.out_path(name + "_report.json"),
                    nlohmann::json{{"resolved_config", report.resolved_config},
                                   {"metrics", report.metrics},
                                   {"artifacts", report.artifacts},
                                   {"duration_seconds", report.duration_seconds},
                                   {"tool_version", report.tool_version}});

    if (!quiet) {
        for (auto& [key, val] : metrics.items()) {
            if (key == "kind" || key == "name" || key == "seed" || key == "config")
                continue;
            if (val.is_object() || val.is_array()) continue;
            std::printf("[%s/%s] %s = %s\n", kind.c_str(), name.c_str(), key.c_str(),
                        val.dump().c_str());
        }
        std::fflush(stdout);
    }
    return report;
}

RunReport run_config_file(const std::string& path,
                          std::optional<std::uint64_t> seed_override,
                          std::optional<std::string> out_override, bool quiet) {
    nlohmann::json config = read_json_file(path);
    if (!config.is_object()) throw ConfigError(path + ": expected a JSON object");
    if (seed_override) config["seed"] = *seed_override;
    if (out_override) config["out"] = *out_override;
    const std::string dir = fs::path(path).parent_path().string();
    return run(config, dir.empty() ? "." : dir, quiet);
}

}  // namespace semlab
