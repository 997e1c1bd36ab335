#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "provdistill/log_ingest.hpp"
#include "provdistill/sparse.hpp"

namespace provdistill {

struct NodeRecord {
    uint32_t index = 0;   // dense id assigned at build
    std::string nid;      // original entity_id
    std::string ntype;
    AttrList nattrs;
};

struct EdgeRecord {
    std::string eid;
    std::string etype;
    uint32_t src = 0;
    uint32_t dst = 0;
    int64_t t = 0;
    AttrList eattrs;
};

// CSR over edge indices: cols[k] is the neighbor node, eids[k] the position
// in the (t, eid)-sorted edge array.
struct EdgeCsr {
    std::vector<uint32_t> offsets;  // |V| + 1
    std::vector<uint32_t> cols;
    std::vector<uint32_t> eids;
};

struct ProvenanceGraph {
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;  // sorted by (t, eid)
    EdgeCsr out_adj;                // rows keyed by src
    EdgeCsr in_adj;                 // rows keyed by dst
    std::map<std::string, int32_t> type_vocab;
    size_t dropped_events = 0;      // danglers skipped under the drop policy

    size_t num_nodes() const { return nodes.size(); }
    size_t num_edges() const { return edges.size(); }

    // Edge indices incident to node i (both directions, self loops once),
    // ascending by (t, eid).
    std::vector<uint32_t> incident_edges(uint32_t i) const;
};

enum class DanglingPolicy { drop, synthesize };

ProvenanceGraph build_graph(IngestResult ingest, DanglingPolicy policy);

struct LabelVector {
    std::vector<int32_t> y;
    std::vector<std::string> class_names;  // class id -> ntype

    size_t num_classes() const { return class_names.size(); }
};

// Class ids 0..C-1 in lexicographic ntype order.
LabelVector node_labels(const ProvenanceGraph& g);

enum class AdjacencyMode { binary, multi };

// Collapsed sparse adjacency over node pairs with multiplicities; both
// directions kept so neighborhoods can be walked either way.
struct AdjacencyView {
    uint32_t n = 0;
    AdjacencyMode mode = AdjacencyMode::binary;
    std::vector<uint64_t> out_offsets;
    std::vector<uint32_t> out_cols;  // sorted within a row
    std::vector<uint32_t> out_mult;
    std::vector<uint64_t> in_offsets;
    std::vector<uint32_t> in_cols;
    std::vector<uint32_t> in_mult;

    uint32_t at(uint32_t i, uint32_t j) const;  // multiplicity (0 if absent)
    uint64_t out_degree_sum() const;
    uint64_t in_degree_sum() const;
};

AdjacencyView adjacency(const ProvenanceGraph& g, AdjacencyMode mode);

// The out-direction of a view as a plain binary CSR.
SparseAdj to_sparse(const AdjacencyView& v);

void save_graph(const ProvenanceGraph& g, const std::filesystem::path& dir);
ProvenanceGraph load_graph(const std::filesystem::path& dir);

}  // namespace provdistill
