#include "provdistill/sparse.hpp"

#include <algorithm>
#include <unordered_map>

#include "provdistill/errors.hpp"

namespace provdistill {

bool SparseAdj::has_edge(uint32_t i, uint32_t j) const {
    auto r = row(i);
    return std::binary_search(r.begin(), r.end(), j);
}

SparseAdj make_sparse_adj(uint32_t n, std::vector<std::pair<uint32_t, uint32_t>> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    SparseAdj a;
    a.n = n;
    a.offsets.assign(n + 1, 0);
    for (const auto& [src, dst] : edges) a.offsets[src + 1]++;
    for (uint32_t i = 0; i < n; ++i) a.offsets[i + 1] += a.offsets[i];
    a.cols.reserve(edges.size());
    for (const auto& [src, dst] : edges) a.cols.push_back(dst);
    return a;
}

SparseAdj transpose(const SparseAdj& a) {
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    edges.reserve(a.nnz());
    for (uint32_t i = 0; i < a.n; ++i)
        for (uint32_t j : a.row(i)) edges.emplace_back(j, i);
    return make_sparse_adj(a.n, std::move(edges));
}

SparseAdj induced_subgraph(const SparseAdj& a, const std::vector<uint32_t>& selected) {
    std::unordered_map<uint32_t, uint32_t> remap;
    remap.reserve(selected.size());
    for (uint32_t k = 0; k < selected.size(); ++k) remap.emplace(selected[k], k);
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    for (uint32_t k = 0; k < selected.size(); ++k) {
        for (uint32_t j : a.row(selected[k])) {
            auto it = remap.find(j);
            if (it != remap.end()) edges.emplace_back(k, it->second);
        }
    }
    return make_sparse_adj(static_cast<uint32_t>(selected.size()), std::move(edges));
}

SparseAdj sparse_from_dense(const Mat& dense, double threshold) {
    const auto n = static_cast<uint32_t>(dense.rows());
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j)
            if (i != j && dense(i, j) > threshold) edges.emplace_back(i, j);
    return make_sparse_adj(n, std::move(edges));
}

Mat dense_from_sparse(const SparseAdj& a) {
    Mat m = Mat::Zero(a.n, a.n);
    for (uint32_t i = 0; i < a.n; ++i)
        for (uint32_t j : a.row(i)) m(i, j) = 1.0;
    return m;
}

SymMeanOp sym_mean_op(const SparseAdj& a) {
    // M = A + A^T with summed multiplicities.
    std::vector<std::pair<uint32_t, uint32_t>> entries;
    entries.reserve(a.nnz() * 2);
    for (uint32_t i = 0; i < a.n; ++i)
        for (uint32_t j : a.row(i)) {
            entries.emplace_back(i, j);
            entries.emplace_back(j, i);
        }
    std::sort(entries.begin(), entries.end());

    SymMeanOp op;
    op.n = a.n;
    op.offsets.assign(a.n + 1, 0);
    for (size_t k = 0; k < entries.size();) {
        size_t e = k;
        while (e < entries.size() && entries[e] == entries[k]) ++e;
        op.offsets[entries[k].first + 1]++;
        op.cols.push_back(entries[k].second);
        op.w.push_back(static_cast<double>(e - k));
        k = e;
    }
    for (uint32_t i = 0; i < a.n; ++i) op.offsets[i + 1] += op.offsets[i];

    op.inv_deg = Vec::Zero(a.n);
    for (uint32_t i = 0; i < a.n; ++i) {
        double deg = 0;
        for (uint64_t k = op.offsets[i]; k < op.offsets[i + 1]; ++k) deg += op.w[k];
        op.inv_deg[i] = deg > 0 ? 1.0 / deg : 0.0;
    }
    return op;
}

Mat SymMeanOp::apply(const Mat& x) const {
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (uint32_t i = 0; i < n; ++i) {
        for (uint64_t k = offsets[i]; k < offsets[i + 1]; ++k)
            out.row(i) += w[k] * x.row(cols[k]);
        out.row(i) *= inv_deg[i];
    }
    return out;
}

Mat SymMeanOp::apply_transpose(const Mat& g) const {
    Mat scaled = g;
    for (uint32_t i = 0; i < n; ++i) scaled.row(i) *= inv_deg[i];
    Mat out = Mat::Zero(g.rows(), g.cols());
    for (uint32_t i = 0; i < n; ++i)
        for (uint64_t k = offsets[i]; k < offsets[i + 1]; ++k)
            out.row(cols[k]) += w[k] * scaled.row(i);
    return out;
}

Mat rownorm_selfloop_apply(const SparseAdj& a, const Mat& x) {
    if (static_cast<Eigen::Index>(a.n) != x.rows())
        throw Error(Errc::shape_mismatch, "adjacency/feature row mismatch");
    Mat out(x.rows(), x.cols());
    for (uint32_t i = 0; i < a.n; ++i) {
        Eigen::RowVectorXd acc = x.row(i);  // self loop
        double deg = 1.0;
        for (uint32_t j : a.row(i)) {
            acc += x.row(j);
            deg += 1.0;
        }
        out.row(i) = acc / deg;
    }
    return out;
}

Mat rownorm_selfloop_apply_rows(const SparseAdj& a, const Mat& x,
                                const std::vector<uint32_t>& rows) {
    if (static_cast<Eigen::Index>(a.n) != x.rows())
        throw Error(Errc::shape_mismatch, "adjacency/feature row mismatch");
    Mat out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (size_t k = 0; k < rows.size(); ++k) {
        const uint32_t i = rows[k];
        Eigen::RowVectorXd acc = x.row(i);
        double deg = 1.0;
        for (uint32_t j : a.row(i)) {
            acc += x.row(j);
            deg += 1.0;
        }
        out.row(k) = acc / deg;
    }
    return out;
}

void save_sparse_adj(const SparseAdj& a, const std::filesystem::path& path) {
    std::string blob;
    blob.reserve(8 + (a.offsets.size() + a.cols.size()) * 4);
    io::put_u32(blob, a.n);
    io::put_u32(blob, static_cast<uint32_t>(a.cols.size()));
    for (uint64_t off : a.offsets) io::put_u32(blob, static_cast<uint32_t>(off));
    for (uint32_t c : a.cols) io::put_u32(blob, c);
    io::write_text(path, blob);
}

SparseAdj load_sparse_adj(const std::filesystem::path& path) {
    const std::string blob = io::read_text(path);
    SparseAdj a;
    a.n = io::get_u32(blob, 0);
    const uint32_t nnz = io::get_u32(blob, 4);
    size_t off = 8;
    a.offsets.resize(a.n + 1);
    for (auto& v : a.offsets) {
        v = io::get_u32(blob, off);
        off += 4;
    }
    a.cols.resize(nnz);
    for (auto& v : a.cols) {
        v = io::get_u32(blob, off);
        off += 4;
    }
    return a;
}

}  // namespace provdistill
