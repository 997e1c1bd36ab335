#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "provdistill/evalkit.hpp"
#include "provdistill/sparse.hpp"

namespace provdistill {

struct SageConfig {
    int hidden = 64;
    int epochs = 25;
    double lr = 0.2;
    double weight_decay = 0.0;
    double momentum = 0.9;
    uint64_t seed = 0;
};

// Two-layer mean-aggregation classifier with separate self/neighbor weights:
//   h1     = relu(X Ws1 + meanN(X) Wn1 + b1)
//   logits = h1 Ws2 + meanN(h1) Wn2 + b2
// where meanN is the in+out neighbor mean (zero for isolated nodes).
struct SageModel {
    Mat w_self1, w_neigh1;
    Vec b1;
    Mat w_self2, w_neigh2;
    Vec b2;
    SageConfig config;

    int in_dim() const { return static_cast<int>(w_self1.rows()); }
    int hidden() const { return static_cast<int>(w_self1.cols()); }
    int classes() const { return static_cast<int>(w_self2.cols()); }

    static SageModel init(int d, int h, int c, const SageConfig& cfg);
};

Mat sage_forward(const SageModel& m, const Mat& x, const SymMeanOp& nbr);
Mat sage_forward(const SageModel& m, const Mat& x, const SparseAdj& a);

struct SageGrads {
    Mat w_self1, w_neigh1;
    Vec b1;
    Mat w_self2, w_neigh2;
    Vec b2;
};

// Softmax cross-entropy over all rows; exact hand-derived gradients
// (finite-difference checked in the tests). Returns the data loss.
double sage_loss_and_grads(const SageModel& m, const Mat& x, const SymMeanOp& nbr,
                           const std::vector<int32_t>& y, SageGrads* grads);

struct TrainResult {
    SageModel model;
    std::vector<double> loss_trace;  // per epoch, before each update
    double wall_clock_s = 0.0;
};

// Full-batch gradient descent with momentum; single-threaded, deterministic
// per seed. Throws SingleClass when labels cover < 2 classes.
TrainResult sage_train(SageModel model, const Mat& x, const SparseAdj& a,
                       const std::vector<int32_t>& y, const SageConfig& cfg);

// Argmax with ties broken toward the lowest class id.
std::vector<int32_t> sage_predict(const SageModel& m, const Mat& x, const SparseAdj& a);

struct DetectionRow {
    uint32_t index = 0;
    std::string nid;
    std::string true_type;
    int32_t predicted = -1;
    bool malicious = false;
};

struct DetectionReport {
    std::vector<DetectionRow> rows;
    std::optional<ConfusionCounts> counts;  // filled once ground truth is known
    std::optional<MetricsBlock> metric_block;

    std::vector<bool> flags() const;
};

// A node is flagged malicious when its predicted class disagrees with its
// recorded type; types the model never trained on (removed or unseen) are
// flagged unconditionally.
DetectionReport detect(const std::vector<int32_t>& predictions,
                       const std::vector<std::string>& true_types,
                       const std::vector<std::string>& model_classes,
                       const std::vector<std::string>& removed_classes,
                       const std::vector<std::string>& nids = {});

void save_model(const SageModel& m, const std::filesystem::path& path);
SageModel load_model(const std::filesystem::path& path);

}  // namespace provdistill
