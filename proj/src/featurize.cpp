#include "provdistill/featurize.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "provdistill/rng.hpp"

namespace provdistill {

using nlohmann::json;

NodeSentence build_sentence(const ProvenanceGraph& g, uint32_t node_index, size_t max_tokens) {
    if (node_index >= g.num_nodes())
        throw Error(Errc::shape_mismatch, "node index out of range");
    NodeSentence s;
    s.node_index = node_index;
    for (const auto& [k, v] : g.nodes[node_index].nattrs) {
        if (s.tokens.size() >= max_tokens) break;
        s.tokens.push_back(v);
    }
    for (uint32_t e : g.incident_edges(node_index)) {
        if (s.tokens.size() >= max_tokens) break;
        s.tokens.push_back(g.edges[e].etype);
    }
    if (s.tokens.empty()) s.tokens.push_back(kEmptyToken);
    return s;
}

std::vector<NodeSentence> build_corpus(const ProvenanceGraph& g, size_t max_tokens) {
    std::vector<NodeSentence> corpus;
    corpus.reserve(g.num_nodes());
    for (uint32_t i = 0; i < g.num_nodes(); ++i)
        corpus.push_back(build_sentence(g, i, max_tokens));
    return corpus;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

EmbeddingModel train_skipgram(const std::vector<NodeSentence>& corpus, const SkipgramConfig& cfg) {
    if (corpus.empty()) throw Error(Errc::empty_corpus, "skip-gram corpus is empty");
    if (cfg.dim < 2) throw Error(Errc::invalid_config, "embedding dim must be >= 2");
    if (cfg.window < 1 || cfg.negatives < 0 || cfg.epochs < 0 || cfg.lr <= 0)
        throw Error(Errc::invalid_config, "bad skip-gram config");

    EmbeddingModel model;
    model.config = cfg;
    model.row_tokens.push_back("");  // OOV row

    std::vector<std::vector<int32_t>> ids(corpus.size());
    std::vector<uint64_t> counts{0};
    for (size_t s = 0; s < corpus.size(); ++s) {
        ids[s].reserve(corpus[s].tokens.size());
        for (const auto& tok : corpus[s].tokens) {
            auto [it, fresh] = model.vocab.emplace(tok, static_cast<int32_t>(model.row_tokens.size()));
            if (fresh) {
                model.row_tokens.push_back(tok);
                counts.push_back(0);
            }
            counts[it->second]++;
            ids[s].push_back(it->second);
        }
    }
    const auto vocab_size = static_cast<int32_t>(model.row_tokens.size());  // incl. OOV row

    // Noise distribution: unigram^(3/4), cumulative table for binary search.
    std::vector<double> cum(vocab_size, 0.0);
    double total_mass = 0.0;
    for (int32_t v = 1; v < vocab_size; ++v) {
        total_mass += std::pow(static_cast<double>(counts[v]), 0.75);
        cum[v] = total_mass;
    }

    Rng rng(cfg.seed);
    RowMat input(vocab_size, cfg.dim);
    input.row(0).setZero();
    const double span = 1.0 / cfg.dim;
    for (int32_t v = 1; v < vocab_size; ++v)
        for (int d = 0; d < cfg.dim; ++d)
            input(v, d) = (rng.uniform01() - 0.5) * span;
    RowMat output = RowMat::Zero(vocab_size, cfg.dim);

    uint64_t pairs_per_epoch = 0;
    for (const auto& sent : ids) {
        const auto len = static_cast<int64_t>(sent.size());
        for (int64_t i = 0; i < len; ++i) {
            const int64_t lo = std::max<int64_t>(0, i - cfg.window);
            const int64_t hi = std::min<int64_t>(len - 1, i + cfg.window);
            pairs_per_epoch += static_cast<uint64_t>(hi - lo);
        }
    }
    const uint64_t total_pairs = pairs_per_epoch * static_cast<uint64_t>(cfg.epochs);

    auto sample_noise = [&]() -> int32_t {
        const double x = rng.uniform01() * total_mass;
        const auto it = std::lower_bound(cum.begin() + 1, cum.end(), x);
        return static_cast<int32_t>(it - cum.begin());
    };

    Eigen::RowVectorXd err(cfg.dim);
    uint64_t done = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        uint64_t epoch_pairs = 0;
        for (const auto& sent : ids) {
            const auto len = static_cast<int64_t>(sent.size());
            for (int64_t i = 0; i < len; ++i) {
                const int32_t center = sent[i];
                const int64_t lo = std::max<int64_t>(0, i - cfg.window);
                const int64_t hi = std::min<int64_t>(len - 1, i + cfg.window);
                for (int64_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const double lr = std::max(
                        cfg.lr * (1.0 - static_cast<double>(done) / static_cast<double>(total_pairs)),
                        cfg.lr * 1e-4);
                    ++done;
                    ++epoch_pairs;
                    const int32_t ctx = sent[j];
                    err.setZero();

                    const double s_pos = input.row(center).dot(output.row(ctx));
                    const double g_pos = sigmoid(s_pos) - 1.0;
                    epoch_loss -= std::log(std::max(sigmoid(s_pos), 1e-300));
                    err += g_pos * output.row(ctx);
                    output.row(ctx) -= lr * g_pos * input.row(center);

                    for (int k = 0; k < cfg.negatives; ++k) {
                        if (total_mass <= 0.0) break;
                        const int32_t neg = sample_noise();
                        if (neg == ctx) continue;
                        const double s_neg = input.row(center).dot(output.row(neg));
                        const double g_neg = sigmoid(s_neg);
                        epoch_loss -= std::log(std::max(1.0 - sigmoid(s_neg), 1e-300));
                        err += g_neg * output.row(neg);
                        output.row(neg) -= lr * g_neg * input.row(center);
                    }
                    input.row(center) -= lr * err;
                }
            }
        }
        model.epoch_loss.push_back(epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
    }

    model.vectors = input;
    return model;
}

Vec positional_encoding(int64_t pos, int dim) {
    if (dim % 2 != 0) throw Error(Errc::odd_dimension, "positional encoding needs an even dim");
    if (pos < 0 || dim <= 0) throw Error(Errc::invalid_config, "positional encoding needs pos >= 0, dim > 0");
    Vec pe(dim);
    for (int i = 0; 2 * i < dim; ++i) {
        const double rate = std::pow(10000.0, 2.0 * i / dim);
        pe[2 * i] = std::sin(static_cast<double>(pos) / rate);
        pe[2 * i + 1] = std::cos(static_cast<double>(pos) / rate);
    }
    return pe;
}

Vec featurize_node(const EmbeddingModel& model, const NodeSentence& sentence) {
    const int dim = model.dim();
    Vec acc = Vec::Zero(dim);
    const auto len = static_cast<int64_t>(sentence.tokens.size());
    for (int64_t p = 0; p < len; ++p) {
        acc += model.vectors.row(model.row_of(sentence.tokens[p])).transpose();
        acc += positional_encoding(p, dim);
    }
    if (len > 0) acc /= static_cast<double>(len);
    return acc;
}

Mat featurize_graph(const ProvenanceGraph& g, const EmbeddingModel& model, size_t max_tokens) {
    Mat x(g.num_nodes(), model.dim());
    for (uint32_t i = 0; i < g.num_nodes(); ++i)
        x.row(i) = featurize_node(model, build_sentence(g, i, max_tokens)).transpose();
    return x;
}

void save_embedding(const EmbeddingModel& m, const std::filesystem::path& path) {
    json header;
    header["magic"] = "PDEM";
    header["rows"] = m.vectors.rows();
    header["dim"] = m.dim();
    header["tokens"] = std::vector<std::string>(m.row_tokens.begin() + 1, m.row_tokens.end());
    header["config"] = {{"dim", m.config.dim},       {"window", m.config.window},
                        {"negatives", m.config.negatives}, {"epochs", m.config.epochs},
                        {"lr", m.config.lr},         {"seed", m.config.seed}};
    header["epoch_loss"] = m.epoch_loss;
    const std::string h = header.dump();

    std::string blob;
    io::put_u32(blob, static_cast<uint32_t>(h.size()));
    blob += h;
    blob += io::matrix_to_f32_blob(m.vectors);
    io::write_text(path, blob);
}

EmbeddingModel load_embedding(const std::filesystem::path& path) {
    const std::string blob = io::read_text(path);
    const uint32_t hlen = io::get_u32(blob, 0);
    const json header = json::parse(blob.substr(4, hlen));
    EmbeddingModel m;
    m.config.dim = header["config"]["dim"].get<int>();
    m.config.window = header["config"]["window"].get<int>();
    m.config.negatives = header["config"]["negatives"].get<int>();
    m.config.epochs = header["config"]["epochs"].get<int>();
    m.config.lr = header["config"]["lr"].get<double>();
    m.config.seed = header["config"]["seed"].get<uint64_t>();
    m.epoch_loss = header["epoch_loss"].get<std::vector<double>>();
    m.row_tokens.push_back("");
    for (const auto& t : header["tokens"]) {
        m.vocab.emplace(t.get<std::string>(), static_cast<int32_t>(m.row_tokens.size()));
        m.row_tokens.push_back(t.get<std::string>());
    }
    m.vectors = io::matrix_from_f32_blob(blob.substr(4 + hlen), header["rows"].get<Eigen::Index>(),
                                         header["dim"].get<Eigen::Index>());
    return m;
}

void save_features(const Mat& x, const std::filesystem::path& path) {
    std::string blob;
    io::put_u32(blob, 0x4D464450u);  // "PDFM"
    io::put_u32(blob, static_cast<uint32_t>(x.rows()));
    io::put_u32(blob, static_cast<uint32_t>(x.cols()));
    io::put_u32(blob, 0u);
    blob += io::matrix_to_f32_blob(x);
    io::write_text(path, blob);
}

Mat load_features(const std::filesystem::path& path) {
    const std::string blob = io::read_text(path);
    if (blob.size() < 16 || io::get_u32(blob, 0) != 0x4D464450u)
        throw Error(Errc::checksum_mismatch, "not a feature matrix file: " + path.string());
    const uint32_t rows = io::get_u32(blob, 4);
    const uint32_t cols = io::get_u32(blob, 8);
    return io::matrix_from_f32_blob(blob.substr(16), rows, cols);
}

}  // namespace provdistill
