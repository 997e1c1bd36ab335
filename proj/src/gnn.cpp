#include "provdistill/gnn.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "provdistill/errors.hpp"
#include "provdistill/rng.hpp"

namespace provdistill {

using nlohmann::json;

SageModel SageModel::init(int d, int h, int c, const SageConfig& cfg) {
    Rng rng(cfg.seed);
    auto xavier = [&rng](int rows, int cols) {
        const double scale = std::sqrt(2.0 / static_cast<double>(rows + cols));
        Mat w(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w(i, j) = rng.normal() * scale;
        return w;
    };
    SageModel m;
    m.w_self1 = xavier(d, h);
    m.w_neigh1 = xavier(d, h);
    m.b1 = Vec::Zero(h);
    m.w_self2 = xavier(h, c);
    m.w_neigh2 = xavier(h, c);
    m.b2 = Vec::Zero(c);
    m.config = cfg;
    return m;
}

Mat sage_forward(const SageModel& m, const Mat& x, const SymMeanOp& nbr) {
    if (x.cols() != m.w_self1.rows())
        throw Error(Errc::shape_mismatch, "feature dim does not match model");
    if (static_cast<Eigen::Index>(nbr.n) != x.rows())
        throw Error(Errc::shape_mismatch, "adjacency size does not match features");
    const Mat n1 = nbr.apply(x);
    Mat h1 = x * m.w_self1 + n1 * m.w_neigh1;
    h1.rowwise() += m.b1.transpose();
    h1 = h1.cwiseMax(0.0);
    const Mat n2 = nbr.apply(h1);
    Mat logits = h1 * m.w_self2 + n2 * m.w_neigh2;
    logits.rowwise() += m.b2.transpose();
    return logits;
}

Mat sage_forward(const SageModel& m, const Mat& x, const SparseAdj& a) {
    return sage_forward(m, x, sym_mean_op(a));
}

namespace {

Mat softmax_rows(const Mat& logits) {
    Mat p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
        p.row(i) = e / e.sum();
    }
    return p;
}

}  // namespace

double sage_loss_and_grads(const SageModel& m, const Mat& x, const SymMeanOp& nbr,
                           const std::vector<int32_t>& y, SageGrads* grads) {
    const auto n = x.rows();
    if (static_cast<size_t>(n) != y.size())
        throw Error(Errc::shape_mismatch, "labels do not match feature rows");

    const Mat n1 = nbr.apply(x);
    Mat v1 = x * m.w_self1 + n1 * m.w_neigh1;
    v1.rowwise() += m.b1.transpose();
    const Mat mask = (v1.array() > 0.0).cast<double>().matrix();
    const Mat h1 = v1.cwiseMax(0.0);
    const Mat n2 = nbr.apply(h1);
    Mat logits = h1 * m.w_self2 + n2 * m.w_neigh2;
    logits.rowwise() += m.b2.transpose();

    const Mat prob = softmax_rows(logits);
    double loss = 0.0;
    Mat g = prob;
    for (Eigen::Index i = 0; i < n; ++i) {
        loss -= std::log(std::max(prob(i, y[i]), 1e-300));
        g(i, y[i]) -= 1.0;
    }
    loss /= static_cast<double>(n);
    g /= static_cast<double>(n);

    if (grads) {
        grads->w_self2 = h1.transpose() * g;
        grads->w_neigh2 = n2.transpose() * g;
        grads->b2 = g.colwise().sum().transpose();
        Mat dh1 = g * m.w_self2.transpose() + nbr.apply_transpose(g * m.w_neigh2.transpose());
        const Mat dv1 = dh1.cwiseProduct(mask);
        grads->w_self1 = x.transpose() * dv1;
        grads->w_neigh1 = n1.transpose() * dv1;
        grads->b1 = dv1.colwise().sum().transpose();
    }
    return loss;
}

TrainResult sage_train(SageModel model, const Mat& x, const SparseAdj& a,
                       const std::vector<int32_t>& y, const SageConfig& cfg) {
    std::set<int32_t> distinct(y.begin(), y.end());
    if (distinct.size() < 2)
        throw Error(Errc::single_class, "training labels cover fewer than 2 classes");

    const SymMeanOp nbr = sym_mean_op(a);
    model.config = cfg;

    SageGrads vel;
    vel.w_self1 = Mat::Zero(model.w_self1.rows(), model.w_self1.cols());
    vel.w_neigh1 = Mat::Zero(model.w_neigh1.rows(), model.w_neigh1.cols());
    vel.b1 = Vec::Zero(model.b1.size());
    vel.w_self2 = Mat::Zero(model.w_self2.rows(), model.w_self2.cols());
    vel.w_neigh2 = Mat::Zero(model.w_neigh2.rows(), model.w_neigh2.cols());
    vel.b2 = Vec::Zero(model.b2.size());

    TrainResult out;
    const auto start = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SageGrads g;
        const double loss = sage_loss_and_grads(model, x, nbr, y, &g);
        if (!std::isfinite(loss))
            throw Error(Errc::non_finite_loss, "training loss diverged; lower lr");
        out.loss_trace.push_back(loss);

        if (cfg.weight_decay != 0.0) {
            g.w_self1 += cfg.weight_decay * model.w_self1;
            g.w_neigh1 += cfg.weight_decay * model.w_neigh1;
            g.w_self2 += cfg.weight_decay * model.w_self2;
            g.w_neigh2 += cfg.weight_decay * model.w_neigh2;
        }

        auto step = [&cfg](Mat& v, Mat& p, const Mat& grad) {
            v = cfg.momentum * v + grad;
            p -= cfg.lr * v;
        };
        step(vel.w_self1, model.w_self1, g.w_self1);
        step(vel.w_neigh1, model.w_neigh1, g.w_neigh1);
        step(vel.w_self2, model.w_self2, g.w_self2);
        step(vel.w_neigh2, model.w_neigh2, g.w_neigh2);
        vel.b1 = cfg.momentum * vel.b1 + g.b1;
        model.b1 -= cfg.lr * vel.b1;
        vel.b2 = cfg.momentum * vel.b2 + g.b2;
        model.b2 -= cfg.lr * vel.b2;
    }
    out.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.model = std::move(model);
    return out;
}

std::vector<int32_t> sage_predict(const SageModel& m, const Mat& x, const SparseAdj& a) {
    const Mat logits = sage_forward(m, x, a);
    std::vector<int32_t> pred(logits.rows());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        int32_t best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
            if (logits(i, c) > logits(i, best)) best = static_cast<int32_t>(c);
        pred[i] = best;
    }
    return pred;
}

std::vector<bool> DetectionReport::flags() const {
    std::vector<bool> f;
    f.reserve(rows.size());
    for (const auto& r : rows) f.push_back(r.malicious);
    return f;
}

DetectionReport detect(const std::vector<int32_t>& predictions,
                       const std::vector<std::string>& true_types,
                       const std::vector<std::string>& model_classes,
                       const std::vector<std::string>& removed_classes,
                       const std::vector<std::string>& nids) {
    if (predictions.size() != true_types.size())
        throw Error(Errc::shape_mismatch, "predictions/labels length mismatch");
    std::set<std::string> removed(removed_classes.begin(), removed_classes.end());

    DetectionReport report;
    report.rows.reserve(predictions.size());
    for (size_t i = 0; i < predictions.size(); ++i) {
        DetectionRow row;
        row.index = static_cast<uint32_t>(i);
        if (i < nids.size()) row.nid = nids[i];
        row.true_type = true_types[i];
        row.predicted = predictions[i];

        int32_t true_class = -1;
        for (size_t c = 0; c < model_classes.size(); ++c)
            if (model_classes[c] == true_types[i]) true_class = static_cast<int32_t>(c);

        if (removed.count(true_types[i]) || true_class < 0)
            row.malicious = true;  // untrainable type
        else
            row.malicious = predictions[i] != true_class;
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

void append_blob(std::string& out, const Mat& m) { out += io::matrix_to_f32_blob(m); }

Mat take_blob(const std::string& in, size_t& off, Eigen::Index rows, Eigen::Index cols) {
    const size_t bytes = static_cast<size_t>(rows) * static_cast<size_t>(cols) * 4;
    Mat m = io::matrix_from_f32_blob(in.substr(off, bytes), rows, cols);
    off += bytes;
    return m;
}

}  // namespace

void save_model(const SageModel& m, const std::filesystem::path& path) {
    json header;
    header["magic"] = "PDSG";
    header["in_dim"] = m.in_dim();
    header["hidden"] = m.hidden();
    header["classes"] = m.classes();
    header["config"] = {{"hidden", m.config.hidden},   {"epochs", m.config.epochs},
                        {"lr", m.config.lr},           {"weight_decay", m.config.weight_decay},
                        {"momentum", m.config.momentum}, {"seed", m.config.seed}};
    const std::string h = header.dump();

    std::string blob;
    io::put_u32(blob, static_cast<uint32_t>(h.size()));
    blob += h;
    append_blob(blob, m.w_self1);
    append_blob(blob, m.w_neigh1);
    append_blob(blob, m.b1);
    append_blob(blob, m.w_self2);
    append_blob(blob, m.w_neigh2);
    append_blob(blob, m.b2);
    io::write_text(path, blob);
}

SageModel load_model(const std::filesystem::path& path) {
    const std::string blob = io::read_text(path);
    const uint32_t hlen = io::get_u32(blob, 0);
    const json header = json::parse(blob.substr(4, hlen));
    const auto d = header["in_dim"].get<Eigen::Index>();
    const auto h = header["hidden"].get<Eigen::Index>();
    const auto c = header["classes"].get<Eigen::Index>();

    SageModel m;
    m.config.hidden = header["config"]["hidden"].get<int>();
    m.config.epochs = header["config"]["epochs"].get<int>();
    m.config.lr = header["config"]["lr"].get<double>();
    m.config.weight_decay = header["config"]["weight_decay"].get<double>();
    m.config.momentum = header["config"]["momentum"].get<double>();
    m.config.seed = header["config"]["seed"].get<uint64_t>();

    size_t off = 4 + hlen;
    m.w_self1 = take_blob(blob, off, d, h);
    m.w_neigh1 = take_blob(blob, off, d, h);
    m.b1 = take_blob(blob, off, h, 1);
    m.w_self2 = take_blob(blob, off, h, c);
    m.w_neigh2 = take_blob(blob, off, h, c);
    m.b2 = take_blob(blob, off, c, 1);
    return m;
}

}  // namespace provdistill
