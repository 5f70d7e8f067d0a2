#include "semlab/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semlab/errors.hpp"

namespace semlab {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow; -log(sigmoid(z)) == softplus(-z).
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

void require_ids(const Mat& W, const std::vector<std::size_t>& ids, const char* what) {
    for (std::size_t id : ids)
        if (id >= W.rows())
            throw IndexError(std::string(what) + " id " + std::to_string(id) +
                             " out of range (V = " + std::to_string(W.rows()) + ")");
}

std::vector<double> mean_rows(const Mat& W, const std::vector<std::size_t>& ids) {
    std::vector<double> h(W.cols(), 0.0);
    for (std::size_t id : ids) add_scaled(h, W.row_span(id), 1.0);
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (double& x : h) x *= inv;
    return h;
}

}  // namespace

NegativeTable::NegativeTable(const std::vector<std::size_t>& counts) {
    if (counts.size() < 2)
        throw DegenerateVocabError("negative table needs a vocabulary of >= 2 tokens");
    cumulative_.reserve(counts.size());
    double acc = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) throw ValidationError("negative table: zero count");
        acc += std::pow(static_cast<double>(c), 0.75);
        cumulative_.push_back(acc);
    }
}

std::size_t NegativeTable::sample(Rng& rng, std::size_t avoid) const {
    for (int tries = 0; tries < 100; ++tries) {
        const double u = rng.uniform() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
        if (idx >= cumulative_.size()) idx = cumulative_.size() - 1;
        if (idx != avoid) return idx;
    }
    // Pathologically concentrated distribution; fall back deterministically.
    return (avoid + 1) % cumulative_.size();
}

double ns_pair_loss(const Mat& W_in, const Mat& W_out,
                    const std::vector<std::size_t>& inputs, std::size_t target,
                    const std::vector<std::size_t>& negatives) {
    if (inputs.empty()) throw ValidationError("ns_pair_loss: no input tokens");
    require_same_shape(W_in, W_out, "ns_pair_loss");
    require_ids(W_in, inputs, "input");
    require_ids(W_out, {target}, "target");
    require_ids(W_out, negatives, "negative");
    const std::vector<double> h = mean_rows(W_in, inputs);
    double loss = softplus(-dot(h, W_out.row_span(target)));
    for (std::size_t neg : negatives) loss += softplus(dot(h, W_out.row_span(neg)));
    return loss;
}

double ns_pair_step(Mat& W_in, Mat& W_out, const std::vector<std::size_t>& inputs,
                    std::size_t target, const std::vector<std::size_t>& negatives,
                    double lr) {
    if (inputs.empty()) throw ValidationError("ns_pair_step: no input tokens");
    require_same_shape(W_in, W_out, "ns_pair_step");
    require_ids(W_in, inputs, "input");
    require_ids(W_out, {target}, "target");
    require_ids(W_out, negatives, "negative");

    const std::vector<double> h = mean_rows(W_in, inputs);
    std::vector<double> dh(h.size(), 0.0);
    // All slopes from pre-update weights, applied afterwards, so this is the
    // exact gradient of ns_pair_loss.
    std::vector<std::pair<std::size_t, double>> slopes;
    slopes.reserve(negatives.size() + 1);
    double loss = 0.0;
    {
        const double z = dot(h, W_out.row_span(target));
        loss += softplus(-z);
        const double g = stable_sigmoid(z) - 1.0;
        add_scaled(dh, W_out.row_span(target), g);
        slopes.emplace_back(target, g);
    }
    for (std::size_t neg : negatives) {
        const double z = dot(h, W_out.row_span(neg));
        loss += softplus(z);
        const double g = stable_sigmoid(z);
        add_scaled(dh, W_out.row_span(neg), g);
        slopes.emplace_back(neg, g);
    }
    for (const auto& [id, g] : slopes) add_scaled(W_out.row_span(id), h, -lr * g);
    const double share = -lr / static_cast<double>(inputs.size());
    for (std::size_t id : inputs) add_scaled(W_in.row_span(id), dh, share);
    return loss;
}

EmbeddingSpace train_embeddings(const TokenizedCorpus& corpus, const Vocabulary& vocab,
                                const EmbedConfig& cfg) {
    const std::size_t V = vocab.size();
    if (V < 2)
        throw DegenerateVocabError("train_embeddings: vocabulary of " +
                                   std::to_string(V) + " tokens cannot be trained");
    if (cfg.dim < 2) throw ValidationError("train_embeddings: dimension must be >= 2");
    if (cfg.window < 1) throw ValidationError("train_embeddings: window must be >= 1");
    if (cfg.negatives < 1)
        throw ValidationError("train_embeddings: need >= 1 negative sample");
    if (cfg.epochs < 1) throw ValidationError("train_embeddings: epochs must be >= 1");
    if (cfg.lr_start <= 0.0 || cfg.lr_end < 0.0 || cfg.lr_end > cfg.lr_start)
        throw ValidationError("train_embeddings: need lr_start >= lr_end > 0");
    if (cfg.subsample < 0.0)
        throw ValidationError("train_embeddings: subsample must be >= 0");

    bool has_window = false;
    for (const auto& sent : corpus.sentences) {
        for (std::size_t id : sent)
            if (id >= V)
                throw VocabularyMismatchError("corpus id " + std::to_string(id) +
                                              " outside vocabulary of " +
                                              std::to_string(V));
        if (sent.size() >= 2) has_window = true;
    }
    if (!has_window)
        throw InsufficientContextError(
            "train_embeddings: no sentence provides a context window");

    Rng rng(cfg.seed);
    const std::size_t d = cfg.dim;
    Mat W_in(V, d);
    const double half = 0.5 / static_cast<double>(d);
    for (std::size_t i = 0; i < W_in.size(); ++i)
        W_in.data()[i] = rng.uniform(-half, half);
    Mat W_out(V, d);

    NegativeTable table(vocab.counts);
    const std::size_t total_positions = corpus.total_tokens * cfg.epochs;
    std::size_t processed = 0;
    const double lr_span = cfg.lr_end - cfg.lr_start;

    std::vector<std::size_t> context, negatives, kept;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& raw_sent : corpus.sentences) {
            const std::vector<std::size_t>* sent = &raw_sent;
            if (cfg.subsample > 0.0) {
                kept.clear();
                for (std::size_t id : raw_sent) {
                    const double f = static_cast<double>(vocab.counts[id]) /
                                     static_cast<double>(corpus.total_tokens);
                    const double keep =
                        (std::sqrt(f / cfg.subsample) + 1.0) * cfg.subsample / f;
                    if (keep >= 1.0 || rng.uniform() < keep) kept.push_back(id);
                }
                sent = &kept;
            }
            const std::size_t len = sent->size();
            for (std::size_t pos = 0; pos < len; ++pos) {
                const double progress =
                    total_positions > 1
                        ? static_cast<double>(processed) /
                              static_cast<double>(total_positions - 1)
                        : 0.0;
                const double lr = cfg.lr_start + lr_span * std::min(progress, 1.0);
                ++processed;

                const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
                const std::size_t hi = std::min(len, pos + cfg.window + 1);
                const std::size_t center = (*sent)[pos];
                if (cfg.algorithm == EmbedAlgo::cbow) {
                    context.clear();
                    for (std::size_t c = lo; c < hi; ++c)
                        if (c != pos) context.push_back((*sent)[c]);
                    if (context.empty()) continue;
                    negatives.clear();
                    for (std::size_t k = 0; k < cfg.negatives; ++k)
                        negatives.push_back(table.sample(rng, center));
                    ns_pair_step(W_in, W_out, context, center, negatives, lr);
                } else {
                    for (std::size_t c = lo; c < hi; ++c) {
                        if (c == pos) continue;
                        const std::size_t target = (*sent)[c];
                        negatives.clear();
                        for (std::size_t k = 0; k < cfg.negatives; ++k)
                            negatives.push_back(table.sample(rng, target));
                        ns_pair_step(W_in, W_out, {center}, target, negatives, lr);
                    }
                }
            }
        }
    }
    W_in.require_finite("train_embeddings result");
    EmbeddingSpace space;
    space.vocab = vocab;
    space.vectors = std::move(W_in);
    space.config = cfg;
    return space;
}

std::vector<AnalogyHit> analogy(const EmbeddingSpace& space, std::string_view a,
                                std::string_view b, std::string_view c,
                                bool exclude_queries, std::size_t top_k) {
    const std::size_t ia = space.vocab.id_of(a);
    const std::size_t ib = space.vocab.id_of(b);
    const std::size_t ic = space.vocab.id_of(c);
    const std::size_t d = space.vectors.cols();
    std::vector<double> q(d);
    for (std::size_t j = 0; j < d; ++j)
        q[j] = space.vectors(ia, j) - space.vectors(ib, j) + space.vectors(ic, j);
    if (l2_norm(q) == 0.0)
        throw UndefinedSimilarityError("analogy: query vector a - b + c is zero");

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(space.vocab.size());
    for (std::size_t t = 0; t < space.vocab.size(); ++t) {
        if (exclude_queries && (t == ia || t == ib || t == ic)) continue;
        scored.emplace_back(cosine(q, space.vectors.row_span(t)), t);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    if (scored.size() > top_k) scored.resize(top_k);
    std::vector<AnalogyHit> out;
    out.reserve(scored.size());
    for (const auto& [sim, id] : scored)
        out.push_back({space.vocab.id_to_token[id], sim});
    return out;
}

}  // namespace semlab
