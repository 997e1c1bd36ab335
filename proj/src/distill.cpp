#include "provdistill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "provdistill/featurize.hpp"
#include "provdistill/rng.hpp"

namespace provdistill {

using nlohmann::json;

GraphDataset make_dataset(const ProvenanceGraph& g, Mat features) {
    if (static_cast<size_t>(features.rows()) != g.num_nodes())
        throw Error(Errc::shape_mismatch, "feature rows != node count");
    GraphDataset t;
    t.X = std::move(features);
    t.A = to_sparse(adjacency(g, AdjacencyMode::binary));
    LabelVector lv = node_labels(g);
    t.y = std::move(lv.y);
    t.class_names = std::move(lv.class_names);
    t.class_counts.assign(t.class_names.size(), 0);
    for (int32_t c : t.y) t.class_counts[c]++;
    return t;
}

DistillMethod method_from_string(const std::string& s) {
    if (s == "random") return DistillMethod::random_sel;
    if (s == "herding") return DistillMethod::herding;
    if (s == "kcenter") return DistillMethod::kcenter;
    if (s == "gcdm") return DistillMethod::gcdm;
    if (s == "gcond") return DistillMethod::gcond;
    if (s == "sgdd") return DistillMethod::sgdd;
    throw Error(Errc::invalid_config, "unknown distill method: " + s);
}

std::string method_to_string(DistillMethod m) {
    switch (m) {
    case DistillMethod::random_sel: return "random";
    case DistillMethod::herding: return "herding";
    case DistillMethod::kcenter: return "kcenter";
    case DistillMethod::gcdm: return "gcdm";
    case DistillMethod::gcond: return "gcond";
    case DistillMethod::sgdd: return "sgdd";
    }
    return "?";
}

std::vector<int32_t> select_rare_classes(const std::vector<uint64_t>& class_counts,
                                         double threshold) {
    uint64_t total = 0;
    for (uint64_t c : class_counts) total += c;
    std::vector<int32_t> removed;
    for (size_t c = 0; c < class_counts.size(); ++c) {
        // Strict inequality: a class sitting exactly at the threshold stays.
        if (static_cast<double>(class_counts[c]) < threshold * static_cast<double>(total))
            removed.push_back(static_cast<int32_t>(c));
    }
    return removed;
}

FilterResult filter_rare_classes(const GraphDataset& t, double threshold) {
    if (t.y.empty()) throw Error(Errc::empty_graph, "dataset has no nodes");
    FilterResult fr;
    fr.removed_ids = select_rare_classes(t.class_counts, threshold);
    if (fr.removed_ids.size() == t.class_names.size())
        throw Error(Errc::all_classes_removed, "rare-class filtering removed every class");

    std::vector<int32_t> new_id(t.class_names.size(), -1);
    for (int32_t c : fr.removed_ids) fr.removed_names.push_back(t.class_names[c]);
    int32_t next = 0;
    for (size_t c = 0; c < t.class_names.size(); ++c) {
        if (std::find(fr.removed_ids.begin(), fr.removed_ids.end(), static_cast<int32_t>(c)) ==
            fr.removed_ids.end())
            new_id[c] = next++;
    }

    for (uint32_t i = 0; i < t.num_nodes(); ++i)
        if (new_id[t.y[i]] >= 0) fr.kept_nodes.push_back(i);

    GraphDataset& out = fr.data;
    out.X.resize(static_cast<Eigen::Index>(fr.kept_nodes.size()), t.X.cols());
    out.y.reserve(fr.kept_nodes.size());
    for (size_t k = 0; k < fr.kept_nodes.size(); ++k) {
        out.X.row(static_cast<Eigen::Index>(k)) = t.X.row(fr.kept_nodes[k]);
        out.y.push_back(new_id[t.y[fr.kept_nodes[k]]]);
    }
    out.A = induced_subgraph(t.A, fr.kept_nodes);
    for (size_t c = 0; c < t.class_names.size(); ++c)
        if (new_id[c] >= 0) out.class_names.push_back(t.class_names[c]);
    out.class_counts.assign(out.class_names.size(), 0);
    for (int32_t c : out.y) out.class_counts[c]++;
    return fr;
}

std::vector<uint64_t> class_budgets(const std::vector<uint64_t>& class_counts, double r) {
    if (r <= 0.0 || r > 1.0) throw Error(Errc::invalid_config, "reduction rate must be in (0, 1]");
    std::vector<uint64_t> budgets;
    budgets.reserve(class_counts.size());
    for (uint64_t count : class_counts) {
        if (count == 0) throw Error(Errc::invalid_config, "class budgets need positive counts");
        const double v = r * static_cast<double>(count);
        const double lo = std::floor(v);
        const double frac = v - lo;
        double rounded;
        if (frac > 0.5) rounded = lo + 1;
        else if (frac < 0.5) rounded = lo;
        else rounded = (static_cast<uint64_t>(lo) % 2 == 0) ? lo : lo + 1;  // half to even
        budgets.push_back(std::max<uint64_t>(1, static_cast<uint64_t>(rounded)));
    }
    return budgets;
}

namespace {

// Adam state for one synthetic tensor.
struct Adam {
    Mat m, v;
    double b1 = 0.9, b2 = 0.99, eps = 1e-8;
    int t = 0;

    explicit Adam(Eigen::Index rows, Eigen::Index cols)
        : m(Mat::Zero(rows, cols)), v(Mat::Zero(rows, cols)) {}

    void step(Mat& param, const Mat& grad, double lr) {
        ++t;
        m = b1 * m + (1.0 - b1) * grad;
        v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(b1, t);
        const double bc2 = 1.0 - std::pow(b2, t);
        param -= (lr / bc1) *
                 (m.array() / ((v.array() / bc2).sqrt() + eps)).matrix();
    }
};

std::vector<std::vector<uint32_t>> members_by_class(const std::vector<int32_t>& y,
                                                    size_t num_classes) {
    std::vector<std::vector<uint32_t>> members(num_classes);
    for (uint32_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
    return members;
}

void check_budgets(const GraphDataset& t, const std::vector<uint64_t>& budgets) {
    if (budgets.size() != t.num_classes())
        throw Error(Errc::shape_mismatch, "budgets/classes mismatch");
    for (size_t c = 0; c < budgets.size(); ++c)
        if (budgets[c] == 0 || budgets[c] > t.class_counts[c])
            throw Error(Errc::invalid_config, "budget out of range for class " + std::to_string(c));
}

DistilledGraph from_selection(const GraphDataset& t, std::vector<uint32_t> origin,
                              const std::vector<uint64_t>& budgets, const DistillConfig& cfg) {
    DistilledGraph d;
    d.origin = std::move(origin);
    d.Xp.resize(static_cast<Eigen::Index>(d.origin.size()), t.X.cols());
    d.Yp.reserve(d.origin.size());
    for (size_t k = 0; k < d.origin.size(); ++k) {
        d.Xp.row(static_cast<Eigen::Index>(k)) = t.X.row(d.origin[k]);
        d.Yp.push_back(t.y[d.origin[k]]);
    }
    d.Ap = induced_subgraph(t.A, d.origin);
    d.class_names = t.class_names;
    d.config = cfg;
    (void)budgets;
    return d;
}

// Per-class seeded sample of real rows, ascending within each class.
std::vector<uint32_t> per_class_sample(const GraphDataset& t,
                                       const std::vector<uint64_t>& budgets, Rng& rng) {
    const auto members = members_by_class(t.y, t.num_classes());
    std::vector<uint32_t> origin;
    for (size_t c = 0; c < members.size(); ++c) {
        auto picks = rng.sample_without_replacement(members[c].size(), budgets[c]);
        std::sort(picks.begin(), picks.end());
        for (uint64_t p : picks) origin.push_back(members[c][p]);
    }
    return origin;
}

std::vector<int32_t> labels_from_budgets(const std::vector<uint64_t>& budgets) {
    std::vector<int32_t> yp;
    for (size_t c = 0; c < budgets.size(); ++c)
        yp.insert(yp.end(), budgets[c], static_cast<int32_t>(c));
    return yp;
}

Mat xavier(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double scale = std::sqrt(2.0 / static_cast<double>(rows + cols));
    Mat w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = rng.normal() * scale;
    return w;
}

}  // namespace

DistilledGraph distill_random(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                              const DistillConfig& cfg) {
    check_budgets(t, budgets);
    Rng rng(cfg.seed);
    return from_selection(t, per_class_sample(t, budgets, rng), budgets, cfg);
}

DistilledGraph distill_herding(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                               const DistillConfig& cfg) {
    check_budgets(t, budgets);
    const auto members = members_by_class(t.y, t.num_classes());
    std::vector<uint32_t> origin;
    for (size_t c = 0; c < members.size(); ++c) {
        const auto& m = members[c];
        Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(t.X.cols());
        for (uint32_t i : m) mu += t.X.row(i);
        mu /= static_cast<double>(m.size());

        std::vector<bool> taken(m.size(), false);
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(t.X.cols());
        for (uint64_t step = 1; step <= budgets[c]; ++step) {
            size_t best = m.size();
            double best_err = std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < m.size(); ++k) {
                if (taken[k]) continue;
                const double err =
                    (mu - (sum + t.X.row(m[k])) / static_cast<double>(step)).squaredNorm();
                if (err < best_err) {  // strict: ties go to the lowest index
                    best_err = err;
                    best = k;
                }
            }
            taken[best] = true;
            sum += t.X.row(m[best]);
            origin.push_back(m[best]);
        }
    }
    return from_selection(t, std::move(origin), budgets, cfg);
}

DistilledGraph distill_kcenter(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                               const DistillConfig& cfg) {
    check_budgets(t, budgets);
    const auto members = members_by_class(t.y, t.num_classes());
    std::vector<uint32_t> origin;
    for (size_t c = 0; c < members.size(); ++c) {
        const auto& m = members[c];
        Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(t.X.cols());
        for (uint32_t i : m) mu += t.X.row(i);
        mu /= static_cast<double>(m.size());

        size_t first = 0;
        double best_err = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < m.size(); ++k) {
            const double err = (t.X.row(m[k]) - mu).squaredNorm();
            if (err < best_err) {
                best_err = err;
                first = k;
            }
        }
        std::vector<bool> taken(m.size(), false);
        std::vector<double> dist(m.size());
        taken[first] = true;
        origin.push_back(m[first]);
        for (size_t k = 0; k < m.size(); ++k)
            dist[k] = (t.X.row(m[k]) - t.X.row(m[first])).squaredNorm();

        for (uint64_t step = 1; step < budgets[c]; ++step) {
            size_t next = m.size();
            double far = -1.0;
            for (size_t k = 0; k < m.size(); ++k) {
                if (taken[k]) continue;
                if (dist[k] > far) {  // strict: ties go to the lowest index
                    far = dist[k];
                    next = k;
                }
            }
            taken[next] = true;
            origin.push_back(m[next]);
            for (size_t k = 0; k < m.size(); ++k)
                dist[k] = std::min(dist[k], (t.X.row(m[k]) - t.X.row(m[next])).squaredNorm());
        }
    }
    return from_selection(t, std::move(origin), budgets, cfg);
}

Mat gnn_encoder(const Mat& x, const SparseAdj& a, const Mat& w) {
    if (x.cols() != w.rows()) throw Error(Errc::shape_mismatch, "encoder weight shape mismatch");
    return (rownorm_selfloop_apply(a, x) * w).cwiseMax(0.0);
}

namespace {

Mat class_means(const Mat& h, const std::vector<std::vector<uint32_t>>& members) {
    Mat mu = Mat::Zero(static_cast<Eigen::Index>(members.size()), h.cols());
    for (size_t c = 0; c < members.size(); ++c) {
        for (uint32_t i : members[c]) mu.row(static_cast<Eigen::Index>(c)) += h.row(i);
        if (!members[c].empty()) mu.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(members[c].size());
    }
    return mu;
}

}  // namespace

DistilledGraph distill_gcdm(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                            const DistillConfig& cfg) {
    check_budgets(t, budgets);
    Rng master(cfg.seed);
    Rng rng_init = master.fork(1);
    Rng rng_w = master.fork(2);

    DistilledGraph d;
    d.class_names = t.class_names;
    d.config = cfg;
    d.Yp = labels_from_budgets(budgets);
    const auto origin = per_class_sample(t, budgets, rng_init);
    d.Xp.resize(static_cast<Eigen::Index>(origin.size()), t.X.cols());
    for (size_t k = 0; k < origin.size(); ++k)
        d.Xp.row(static_cast<Eigen::Index>(k)) = t.X.row(origin[k]);
    d.Ap.n = d.num_nodes();  // featureless condensation keeps an empty adjacency
    d.Ap.offsets.assign(d.Ap.n + 1, 0);

    const auto members_t = members_by_class(t.y, t.num_classes());
    const auto members_s = members_by_class(d.Yp, t.num_classes());
    const Mat u_t = rownorm_selfloop_apply(t.A, t.X);  // fixed across weight draws
    Adam opt_x(d.Xp.rows(), d.Xp.cols());

    for (int it = 0; it < cfg.iterations; ++it) {
        const Mat w = xavier(t.X.cols(), cfg.encoder_width, rng_w);
        const Mat h_t = (u_t * w).cwiseMax(0.0);
        const Mat mu_t = class_means(h_t, members_t);

        const Mat v_s = d.Xp * w;
        const Mat h_s = v_s.cwiseMax(0.0);
        const Mat mu_s = class_means(h_s, members_s);

        const Mat diff = mu_s - mu_t;
        const double loss = diff.squaredNorm();
        if (!std::isfinite(loss))
            throw Error(Errc::non_finite_loss, "gcdm loss diverged; lower lr_feat");
        d.loss_trace.push_back(loss);

        Mat e(d.Xp.rows(), cfg.encoder_width);
        for (size_t c = 0; c < members_s.size(); ++c) {
            const double scale = 2.0 / static_cast<double>(members_s[c].size());
            for (uint32_t i : members_s[c]) e.row(i) = scale * diff.row(static_cast<Eigen::Index>(c));
        }
        const Mat grad = (e.cwiseProduct((v_s.array() > 0.0).cast<double>().matrix())) * w.transpose();
        opt_x.step(d.Xp, grad, cfg.lr_feat);
        if (!d.Xp.allFinite())
            throw Error(Errc::non_finite_loss, "gcdm features diverged; lower lr_feat");
    }
    return d;
}

namespace {

// Row-wise softmax with the usual max-shift.
Mat softmax_rows(const Mat& logits) {
    Mat p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
        p.row(i) = e / e.sum();
    }
    return p;
}

struct CosTerm {
    double value;  // 1 - cos(g, g_target)
    Mat dgrad;     // d value / d g
};

CosTerm cosine_term(const Mat& g, const Mat& g_target) {
    const double ng = g.norm();
    const double nt = g_target.norm();
    CosTerm out;
    if (ng < 1e-12 || nt < 1e-12) {
        out.value = 1.0;
        out.dgrad = Mat::Zero(g.rows(), g.cols());
        return out;
    }
    const double dot = (g.array() * g_target.array()).sum();
    out.value = 1.0 - dot / (ng * nt);
    out.dgrad = -(g_target / (ng * nt) - (dot / (ng * ng * ng * nt)) * g);
    return out;
}

// Dense synthetic-side forward pass with differentiable adjacency.
struct SCache {
    Mat p;     // n x n, rownorm(sym(sigmoid(Z)) + I)
    Vec dvec;  // row degrees of (As + I)
    Mat u;     // P Xp
    Mat v;     // U w1 (pre-relu)
    Mat hm;    // relu(V)
    Mat g;     // (1/n)(softmax - onehot)
    Mat g1;    // d ce / d w1
    Mat g2;    // d ce / d w2
    double ce = 0.0;
};

SCache s_forward(const Mat& xp, const Mat& z, const std::vector<int32_t>& yp,
                 const EncoderTheta& theta) {
    const auto n = xp.rows();
    if (z.rows() != n || z.cols() != n)
        throw Error(Errc::shape_mismatch, "adjacency logits must be n x n");
    if (xp.cols() != theta.w1.rows() || theta.w1.cols() != theta.w2.rows())
        throw Error(Errc::shape_mismatch, "encoder parameter shape mismatch");

    SCache c;
    Mat s = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    c.p = 0.5 * (s + s.transpose());
    c.p.diagonal().setZero();
    c.dvec = c.p.rowwise().sum().array() + 1.0;
    c.p.diagonal().setOnes();  // A~ = As + I
    for (Eigen::Index i = 0; i < n; ++i) c.p.row(i) /= c.dvec[i];

    c.u = c.p * xp;
    c.v = c.u * theta.w1;
    c.hm = c.v.cwiseMax(0.0);
    const Mat logits = c.hm * theta.w2;
    const Mat prob = softmax_rows(logits);

    c.g = prob;
    c.ce = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        c.g(i, yp[i]) -= 1.0;
        c.ce -= std::log(std::max(prob(i, yp[i]), 1e-300));
    }
    c.g /= static_cast<double>(n);
    c.ce /= static_cast<double>(n);

    const Mat r = (c.g * theta.w2.transpose()).cwiseProduct((c.v.array() > 0.0).cast<double>().matrix());
    c.g1 = c.u.transpose() * r;
    c.g2 = c.hm.transpose() * c.g;
    return c;
}

}  // namespace

double encoder_ce_grads(const Mat& x, const SparseAdj& a, const std::vector<int32_t>& y,
                        const std::vector<uint32_t>& batch, const EncoderTheta& theta,
                        Mat* g1, Mat* g2) {
    if (x.cols() != theta.w1.rows() || theta.w1.cols() != theta.w2.rows())
        throw Error(Errc::shape_mismatch, "encoder parameter shape mismatch");
    const Mat u = rownorm_selfloop_apply_rows(a, x, batch);
    const Mat v = u * theta.w1;
    const Mat hm = v.cwiseMax(0.0);
    const Mat prob = softmax_rows(hm * theta.w2);

    const auto b = static_cast<Eigen::Index>(batch.size());
    Mat g = prob;
    double ce = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        g(i, y[batch[i]]) -= 1.0;
        ce -= std::log(std::max(prob(i, y[batch[i]]), 1e-300));
    }
    g /= static_cast<double>(b);
    ce /= static_cast<double>(b);

    const Mat r = (g * theta.w2.transpose()).cwiseProduct((v.array() > 0.0).cast<double>().matrix());
    if (g1) *g1 = u.transpose() * r;
    if (g2) *g2 = hm.transpose() * g;
    return ce;
}

double gcond_matching_loss(const Mat& xp, const Mat& z, const std::vector<int32_t>& yp,
                           const EncoderTheta& theta, const Mat& g1_target, const Mat& g2_target,
                           Mat* grad_xp, Mat* grad_z, Mat* g1_s, Mat* g2_s) {
    const SCache c = s_forward(xp, z, yp, theta);
    if (g1_s) *g1_s = c.g1;
    if (g2_s) *g2_s = c.g2;

    const CosTerm t1 = cosine_term(c.g1, g1_target);
    const CosTerm t2 = cosine_term(c.g2, g2_target);
    const double loss = t1.value + t2.value;
    if (!grad_xp && !grad_z) return loss;

    const auto n = xp.rows();
    const Mat mask = (c.v.array() > 0.0).cast<double>().matrix();
    const Mat r = (c.g * theta.w2.transpose()).cwiseProduct(mask);

    // Reverse pass through g1 = U^T R, g2 = Hm^T G, the cross-entropy, and
    // the relaxed propagation P = D^-1 (sym(sigmoid(Z)) + I).
    Mat d_hm = c.g * t2.dgrad.transpose();
    Mat d_g = c.hm * t2.dgrad;
    Mat d_u = r * t1.dgrad.transpose();
    const Mat d_r = c.u * t1.dgrad;
    d_g += d_r.cwiseProduct(mask) * theta.w2;

    // dL_i = (1/n) (diag(p_i) - p_i p_i^T) dG_i, recovering p from G.
    Mat d_logits(n, c.g.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVectorXd p = c.g.row(i) * static_cast<double>(n);
        p(yp[i]) += 1.0;
        const double pd = p.dot(d_g.row(i));
        d_logits.row(i) = (p.array() * (d_g.row(i).array() - pd)).matrix() / static_cast<double>(n);
    }
    d_hm += d_logits * theta.w2.transpose();
    const Mat d_v = d_hm.cwiseProduct(mask);
    d_u += d_v * theta.w1.transpose();

    if (grad_xp) *grad_xp = c.p.transpose() * d_u;
    if (grad_z) {
        Mat d_p = d_u * xp.transpose();
        const Vec rho = (d_p.array() * c.p.array()).rowwise().sum();
        for (Eigen::Index i = 0; i < n; ++i)
            d_p.row(i) = (d_p.row(i).array() - rho[i]) / c.dvec[i];  // now d As
        grad_z->resize(n, n);
        grad_z->setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double ds = 0.5 * (d_p(i, j) + d_p(j, i));
                const double sig = 1.0 / (1.0 + std::exp(-z(i, j)));
                (*grad_z)(i, j) = ds * sig * (1.0 - sig);
            }
        }
    }
    return loss;
}

DistilledGraph distill_gcond(const GraphDataset& t, const std::vector<uint64_t>& budgets,
                             const DistillConfig& cfg) {
    check_budgets(t, budgets);
    Rng master(cfg.seed);
    Rng rng_init = master.fork(1);
    Rng rng_theta = master.fork(2);
    Rng rng_batch = master.fork(3);

    DistilledGraph d;
    d.class_names = t.class_names;
    d.config = cfg;
    d.Yp = labels_from_budgets(budgets);
    const auto origin = per_class_sample(t, budgets, rng_init);
    const auto n = static_cast<Eigen::Index>(origin.size());
    d.Xp.resize(n, t.X.cols());
    for (Eigen::Index k = 0; k < n; ++k) d.Xp.row(k) = t.X.row(origin[k]);
    // Jittered start: sampled rows plus per-column noise, so the matching
    // objective has visible room to descend.
    Eigen::RowVectorXd col_std(t.X.cols());
    for (Eigen::Index c2 = 0; c2 < t.X.cols(); ++c2) {
        const double mean = t.X.col(c2).mean();
        col_std[c2] = std::sqrt((t.X.col(c2).array() - mean).square().mean());
    }
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index c2 = 0; c2 < t.X.cols(); ++c2)
            d.Xp(k, c2) += 0.15 * col_std[c2] * rng_init.normal();

    Mat z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            z(i, j) = -2.0 + 0.1 * rng_init.normal();

    const auto members_t = members_by_class(t.y, t.num_classes());
    EncoderTheta theta;
    const int h = cfg.encoder_width;
    const auto num_classes = static_cast<Eigen::Index>(t.num_classes());
    Adam opt_x(n, t.X.cols());
    Adam opt_z(n, n);

    for (int it = 0; it < cfg.iterations; ++it) {
        if (it % std::max(1, cfg.theta_refresh) == 0) {
            theta.w1 = xavier(t.X.cols(), h, rng_theta);
            theta.w2 = xavier(h, num_classes, rng_theta);
        }

        std::vector<uint32_t> batch;
        for (size_t c = 0; c < members_t.size(); ++c) {
            const auto& m = members_t[c];
            const uint64_t take = std::min<uint64_t>(m.size(), cfg.batch_per_class);
            auto picks = rng_batch.sample_without_replacement(m.size(), take);
            std::sort(picks.begin(), picks.end());
            for (uint64_t p : picks) batch.push_back(m[p]);
        }

        Mat g1t, g2t;
        encoder_ce_grads(t.X, t.A, t.y, batch, theta, &g1t, &g2t);

        Mat gxp, gz;
        const double loss = gcond_matching_loss(d.Xp, z, d.Yp, theta, g1t, g2t, &gxp, &gz);
        if (!std::isfinite(loss))
            throw Error(Errc::non_finite_loss, "gcond matching loss diverged");
        d.loss_trace.push_back(loss);

        opt_x.step(d.Xp, gxp, cfg.lr_feat);
        opt_z.step(z, gz, cfg.lr_adj);
        if (!d.Xp.allFinite() || !z.allFinite())
            throw Error(Errc::non_finite_loss, "gcond synthesis diverged; lower lr_feat/lr_adj");

        for (int s = 0; s < cfg.inner_steps; ++s) {
            const SCache c = s_forward(d.Xp, z, d.Yp, theta);
            theta.w1 -= cfg.lr_theta * c.g1;
            theta.w2 -= cfg.lr_theta * c.g2;
        }
    }

    Mat s = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Mat sym = 0.5 * (s + s.transpose());
    d.Ap = sparse_from_dense(sym, 0.5);
    return d;
}

DistilledGraph distill(const GraphDataset& t, const DistillConfig& cfg) {
    if (cfg.r <= 0.0 || cfg.r > 1.0)
        throw Error(Errc::invalid_config, "reduction rate must be in (0, 1]");
    if (cfg.rare_class_threshold < 0.0 || cfg.rare_class_threshold >= 1.0)
        throw Error(Errc::invalid_config, "rare_class_threshold must be in [0, 1)");
    if (cfg.method == DistillMethod::sgdd)
        throw Error(Errc::not_implemented, "strategy not implemented: sgdd");

    FilterResult fr = filter_rare_classes(t, cfg.rare_class_threshold);
    const auto budgets = class_budgets(fr.data.class_counts, cfg.r);

    DistilledGraph d;
    switch (cfg.method) {
    case DistillMethod::random_sel: d = distill_random(fr.data, budgets, cfg); break;
    case DistillMethod::herding: d = distill_herding(fr.data, budgets, cfg); break;
    case DistillMethod::kcenter: d = distill_kcenter(fr.data, budgets, cfg); break;
    case DistillMethod::gcdm: d = distill_gcdm(fr.data, budgets, cfg); break;
    case DistillMethod::gcond: d = distill_gcond(fr.data, budgets, cfg); break;
    case DistillMethod::sgdd: break;  // unreachable
    }
    // Selection origins refer to the filtered dataset; map back to T indices.
    for (auto& o : d.origin) o = fr.kept_nodes[o];
    d.removed_classes = fr.removed_names;
    return d;
}

void save_distilled(const DistilledGraph& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_features(d.Xp, dir / "features.bin");
    save_sparse_adj(d.Ap, dir / "adj.bin");

    std::string labels;
    for (size_t i = 0; i < d.Yp.size(); ++i) {
        json j;
        j["index"] = i;
        j["class"] = d.Yp[i];
        j["class_name"] = d.class_names[d.Yp[i]];
        labels += j.dump() + "\n";
    }
    io::write_text(dir / "labels.jsonl", labels);

    json prov;
    prov["method"] = method_to_string(d.config.method);
    prov["r"] = d.config.r;
    prov["seed"] = d.config.seed;
    prov["rare_class_threshold"] = d.config.rare_class_threshold;
    prov["iterations"] = d.config.iterations;
    prov["lr_feat"] = d.config.lr_feat;
    prov["lr_adj"] = d.config.lr_adj;
    prov["inner_steps"] = d.config.inner_steps;
    prov["encoder_width"] = d.config.encoder_width;
    prov["batch_per_class"] = d.config.batch_per_class;
    prov["theta_refresh"] = d.config.theta_refresh;
    prov["lr_theta"] = d.config.lr_theta;
    prov["class_names"] = d.class_names;
    prov["removed_classes"] = d.removed_classes;
    prov["origin"] = d.origin;
    prov["loss_trace"] = d.loss_trace;
    io::save_json(dir / "provenance.json", prov);
}

DistilledGraph load_distilled(const std::filesystem::path& dir) {
    DistilledGraph d;
    d.Xp = load_features(dir / "features.bin");
    d.Ap = load_sparse_adj(dir / "adj.bin");
    io::for_each_line(dir / "labels.jsonl", [&](size_t, const std::string& l) {
        if (!l.empty()) d.Yp.push_back(json::parse(l)["class"].get<int32_t>());
    });
    const json prov = io::load_json(dir / "provenance.json");
    d.config.method = method_from_string(prov["method"].get<std::string>());
    d.config.r = prov["r"].get<double>();
    d.config.seed = prov["seed"].get<uint64_t>();
    d.config.rare_class_threshold = prov["rare_class_threshold"].get<double>();
    d.config.iterations = prov["iterations"].get<int>();
    d.config.lr_feat = prov["lr_feat"].get<double>();
    d.config.lr_adj = prov["lr_adj"].get<double>();
    d.config.inner_steps = prov["inner_steps"].get<int>();
    d.config.encoder_width = prov["encoder_width"].get<int>();
    d.config.batch_per_class = prov["batch_per_class"].get<int>();
    d.config.theta_refresh = prov["theta_refresh"].get<int>();
    d.config.lr_theta = prov["lr_theta"].get<double>();
    d.class_names = prov["class_names"].get<std::vector<std::string>>();
    d.removed_classes = prov["removed_classes"].get<std::vector<std::string>>();
    d.origin = prov["origin"].get<std::vector<uint32_t>>();
    d.loss_trace = prov["loss_trace"].get<std::vector<double>>();
    return d;
}

}  // namespace provdistill
