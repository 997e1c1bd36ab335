#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "provdistill/io.hpp"
#include "provdistill/provgraph.hpp"

namespace provdistill {

struct NodeSentence {
    uint32_t node_index = 0;
    std::vector<std::string> tokens;
};

inline constexpr const char* kEmptyToken = "EMPTY";
inline constexpr size_t kDefaultMaxSentence = 512;

// Attribute values first (stored order), then incident edge types ascending
// by (t, eid). Hub sentences keep the earliest-timestamp tokens when
// truncated; isolated attribute-less nodes yield the single token "EMPTY".
NodeSentence build_sentence(const ProvenanceGraph& g, uint32_t node_index,
                            size_t max_tokens = kDefaultMaxSentence);

std::vector<NodeSentence> build_corpus(const ProvenanceGraph& g,
                                       size_t max_tokens = kDefaultMaxSentence);

struct SkipgramConfig {
    int dim = 32;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;
    uint64_t seed = 1;
};

struct EmbeddingModel {
    std::unordered_map<std::string, int32_t> vocab;  // token -> row, row 0 is OOV
    std::vector<std::string> row_tokens;             // row -> token ("" for OOV)
    Mat vectors;                                     // (1 + |vocab|) x dim, row 0 zero
    SkipgramConfig config;
    std::vector<double> epoch_loss;

    int dim() const { return static_cast<int>(vectors.cols()); }
    int32_t row_of(const std::string& token) const {
        auto it = vocab.find(token);
        return it == vocab.end() ? 0 : it->second;
    }
};

// Skip-gram with negative sampling: unigram^(3/4) noise distribution,
// linear learning-rate decay, single-threaded and seed-deterministic.
EmbeddingModel train_skipgram(const std::vector<NodeSentence>& corpus, const SkipgramConfig& cfg);

// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(...).
Vec positional_encoding(int64_t pos, int dim);

// Mean over positions p of embed(token_p) + PE(p); OOV rows are zero so
// unknown tokens contribute their positional term only.
Vec featurize_node(const EmbeddingModel& model, const NodeSentence& sentence);

Mat featurize_graph(const ProvenanceGraph& g, const EmbeddingModel& model,
                    size_t max_tokens = kDefaultMaxSentence);

void save_embedding(const EmbeddingModel& m, const std::filesystem::path& path);
EmbeddingModel load_embedding(const std::filesystem::path& path);

void save_features(const Mat& x, const std::filesystem::path& path);
Mat load_features(const std::filesystem::path& path);

}  // namespace provdistill
