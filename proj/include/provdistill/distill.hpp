#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "provdistill/provgraph.hpp"
#include "provdistill/sparse.hpp"

namespace provdistill {

// The (X, A, Y) triple the distillation strategies consume. A is binary.
struct GraphDataset {
    Mat X;
    SparseAdj A;
    std::vector<int32_t> y;
    std::vector<std::string> class_names;
    std::vector<uint64_t> class_counts;

    uint32_t num_nodes() const { return static_cast<uint32_t>(y.size()); }
    size_t num_classes() const { return class_names.size(); }
};

GraphDataset make_dataset(const ProvenanceGraph& g, Mat features);

enum class DistillMethod { random_sel, herding, kcenter, gcdm, gcond, sgdd };

DistillMethod method_from_string(const std::string& s);
std::string method_to_string(DistillMethod m);

struct DistillConfig {
    double r = 0.01;
    DistillMethod method = DistillMethod::random_sel;
    uint64_t seed = 0;
    double rare_class_threshold = 0.01;

    // synthesis (gcdm / gcond) hyperparameters; Adam steps for the
    // synthetic variables, plain SGD for the inner parameter updates
    int iterations = 60;
    double lr_feat = 0.03;
    double lr_adj = 0.03;
    int inner_steps = 1;
    int encoder_width = 64;
    int batch_per_class = 256;
    int theta_refresh = 20;   // redraw encoder/classifier params every k iterations
    double lr_theta = 0.005;
};

struct DistilledGraph {
    Mat Xp;
    SparseAdj Ap;                             // zero diagonal
    std::vector<int32_t> Yp;
    std::vector<std::string> class_names;     // kept classes, compacted ids
    std::vector<std::string> removed_classes; // filtered out before distillation
    std::vector<uint32_t> origin;             // source node indices (selection methods)
    std::vector<double> loss_trace;           // per-iteration loss (synthesis methods)
    DistillConfig config;

    uint32_t num_nodes() const { return static_cast<uint32_t>(Yp.size()); }
};

// Class ids whose share of all nodes is strictly below the threshold.
std::vector<int32_t> select_rare_classes(const std::vector<uint64_t>& class_counts,
                                         double threshold);

struct FilterResult {
    GraphDataset data;
    std::vector<int32_t> removed_ids;
    std::vector<std::string> removed_names;
    std::vector<uint32_t> kept_nodes;  // original indices, ascending
};

FilterResult filter_rare_classes(const GraphDataset& t, double threshold);

// budget(c) = max(1, round_half_even(r * count(c))).
std::vector<uint64_t> class_budgets(const std::vector<uint64_t>& class_counts, double r);

DistilledGraph distill_random(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                              const DistillConfig& cfg);
DistilledGraph distill_herding(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                               const DistillConfig& cfg);
DistilledGraph distill_kcenter(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                               const DistillConfig& cfg);
DistilledGraph distill_gcdm(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                            const DistillConfig& cfg);
DistilledGraph distill_gcond(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                             const DistillConfig& cfg);

// Filter, budget, and dispatch; the sgdd slot reports NotImplemented.
DistilledGraph distill(const GraphDataset& t, const DistillConfig& cfg);

// Shared relaxed encoder: relu(D^-1 (A + I) X W).
Mat gnn_encoder(const Mat& x, const SparseAdj& a, const Mat& w);

// ---- gradient-matching internals, exposed for finite-difference checks ----

struct EncoderTheta {
    Mat w1;  // d x h
    Mat w2;  // h x C
};

// Softmax cross-entropy gradients w.r.t. (w1, w2) of logits
// relu(P X w1) w2 restricted to batch rows; P = rownorm(A + I).
double encoder_ce_grads(const Mat& x, const SparseAdj& a, const std::vector<int32_t>& y,
                        const std::vector<uint32_t>& batch, const EncoderTheta& theta,
                        Mat* g1, Mat* g2);

// Matching loss sum over layers of (1 - cos(g_S, g_T)) where g_S are the
// cross-entropy gradients on the synthetic side with adjacency sigmoid(Z)
// symmetrized, zero diagonal. Fills gradients w.r.t. Xp and Z when requested;
// g1_s/g2_s receive the synthetic-side parameter gradients when non-null.
double gcond_matching_loss(const Mat& xp, const Mat& z, const std::vector<int32_t>& yp,
                           const EncoderTheta& theta, const Mat& g1_target, const Mat& g2_target,
                           Mat* grad_xp, Mat* grad_z, Mat* g1_s = nullptr, Mat* g2_s = nullptr);

void save_distilled(const DistilledGraph& d, const std::filesystem::path& dir);
DistilledGraph load_distilled(const std::filesystem::path& dir);

}  // namespace provdistill
