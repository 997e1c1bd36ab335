#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "provdistill/io.hpp"

namespace provdistill {

// Directed binary adjacency in compressed sparse row form.
// Column indices within a row are sorted and unique.
struct SparseAdj {
    uint32_t n = 0;
    std::vector<uint64_t> offsets;  // n + 1
    std::vector<uint32_t> cols;

    std::span<const uint32_t> row(uint32_t i) const {
        return {cols.data() + offsets[i], cols.data() + offsets[i + 1]};
    }
    uint64_t nnz() const { return cols.size(); }
    bool has_edge(uint32_t i, uint32_t j) const;
};

SparseAdj make_sparse_adj(uint32_t n, std::vector<std::pair<uint32_t, uint32_t>> edges);
SparseAdj transpose(const SparseAdj& a);

// Subgraph induced by `selected`; node k of the result is selected[k].
SparseAdj induced_subgraph(const SparseAdj& a, const std::vector<uint32_t>& selected);

// Binarize a dense matrix: entry kept where value > threshold, diagonal dropped.
SparseAdj sparse_from_dense(const Mat& dense, double threshold);
Mat dense_from_sparse(const SparseAdj& a);

// Symmetric neighbor-mean operator over M = A + A^T (multiplicities kept).
// apply(X) = D^-1 M X with zero rows for isolated nodes; apply_transpose is
// its adjoint M D^-1, which the classifier backward pass needs.
struct SymMeanOp {
    uint32_t n = 0;
    std::vector<uint64_t> offsets;
    std::vector<uint32_t> cols;
    std::vector<double> w;
    Vec inv_deg;

    Mat apply(const Mat& x) const;
    Mat apply_transpose(const Mat& g) const;
};

SymMeanOp sym_mean_op(const SparseAdj& a);

// One row of D^-1 (A + I) X  (row-normalized mean with a self loop), the
// propagation used by the distillation encoder.
Mat rownorm_selfloop_apply(const SparseAdj& a, const Mat& x);
Mat rownorm_selfloop_apply_rows(const SparseAdj& a, const Mat& x,
                                const std::vector<uint32_t>& rows);

void save_sparse_adj(const SparseAdj& a, const std::filesystem::path& path);
SparseAdj load_sparse_adj(const std::filesystem::path& path);

}  // namespace provdistill
