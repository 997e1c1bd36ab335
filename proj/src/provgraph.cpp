#include "provdistill/provgraph.hpp"

#include <algorithm>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "provdistill/io.hpp"

namespace provdistill {

using nlohmann::json;

std::vector<uint32_t> ProvenanceGraph::incident_edges(uint32_t i) const {
    std::vector<uint32_t> out;
    const auto ob = out_adj.offsets[i], oe = out_adj.offsets[i + 1];
    const auto ib = in_adj.offsets[i], ie = in_adj.offsets[i + 1];
    out.reserve((oe - ob) + (ie - ib));
    uint32_t a = ob, b = ib;
    // Both lists are ascending by edge index; merge and drop self-loop dupes.
    while (a < oe || b < ie) {
        if (b >= ie || (a < oe && out_adj.eids[a] <= in_adj.eids[b])) {
            if (b < ie && out_adj.eids[a] == in_adj.eids[b]) ++b;
            out.push_back(out_adj.eids[a++]);
        } else {
            out.push_back(in_adj.eids[b++]);
        }
    }
    return out;
}

namespace {

EdgeCsr build_edge_csr(size_t n_nodes, const std::vector<EdgeRecord>& edges, bool by_src) {
    EdgeCsr csr;
    csr.offsets.assign(n_nodes + 1, 0);
    for (const auto& e : edges) csr.offsets[(by_src ? e.src : e.dst) + 1]++;
    for (size_t i = 0; i < n_nodes; ++i) csr.offsets[i + 1] += csr.offsets[i];
    csr.cols.resize(edges.size());
    csr.eids.resize(edges.size());
    std::vector<uint32_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
    for (uint32_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const uint32_t row = by_src ? e.src : e.dst;
        const uint32_t pos = cursor[row]++;
        csr.cols[pos] = by_src ? e.dst : e.src;
        csr.eids[pos] = k;
    }
    return csr;
}

}  // namespace

ProvenanceGraph build_graph(IngestResult ingest, DanglingPolicy policy) {
    ProvenanceGraph g;
    std::unordered_map<std::string, uint32_t> index;
    index.reserve(ingest.entities.size());

    for (auto& e : ingest.entities) {
        NodeRecord n;
        n.index = static_cast<uint32_t>(g.nodes.size());
        n.nid = std::move(e.entity_id);
        n.ntype = std::move(e.entity_type);
        n.nattrs = std::move(e.attrs);
        index.emplace(n.nid, n.index);
        g.nodes.push_back(std::move(n));
    }

    auto resolve = [&](const std::string& id) -> int64_t {
        auto it = index.find(id);
        if (it != index.end()) return it->second;
        if (policy == DanglingPolicy::drop) return -1;
        NodeRecord n;
        n.index = static_cast<uint32_t>(g.nodes.size());
        n.nid = id;
        n.ntype = "UNKNOWN";
        index.emplace(id, n.index);
        g.nodes.push_back(std::move(n));
        return g.nodes.back().index;
    };

    g.edges.reserve(ingest.events.size());
    for (auto& ev : ingest.events) {
        const int64_t src = resolve(ev.subject_id);
        const int64_t dst = src < 0 ? -1 : resolve(ev.object_id);
        if (src < 0 || dst < 0) {
            g.dropped_events++;
            continue;
        }
        EdgeRecord e;
        e.eid = std::move(ev.event_id);
        e.etype = std::move(ev.operation);
        e.src = static_cast<uint32_t>(src);
        e.dst = static_cast<uint32_t>(dst);
        e.t = ev.timestamp_ns;
        e.eattrs = std::move(ev.attrs);
        g.edges.push_back(std::move(e));
    }

    if (g.nodes.empty()) throw Error(Errc::empty_graph, "graph has no nodes");

    std::stable_sort(g.edges.begin(), g.edges.end(), [](const EdgeRecord& a, const EdgeRecord& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.eid < b.eid;
    });

    g.out_adj = build_edge_csr(g.nodes.size(), g.edges, true);
    g.in_adj = build_edge_csr(g.nodes.size(), g.edges, false);

    for (const auto& n : g.nodes) g.type_vocab.emplace(n.ntype, 0);
    int32_t next = 0;
    for (auto& [t, id] : g.type_vocab) id = next++;
    return g;
}

LabelVector node_labels(const ProvenanceGraph& g) {
    if (g.nodes.empty()) throw Error(Errc::empty_graph, "graph has no nodes");
    LabelVector lv;
    lv.class_names.resize(g.type_vocab.size());
    for (const auto& [t, id] : g.type_vocab) lv.class_names[id] = t;
    lv.y.reserve(g.nodes.size());
    for (const auto& n : g.nodes) lv.y.push_back(g.type_vocab.at(n.ntype));
    return lv;
}

namespace {

void collapse_direction(const EdgeCsr& csr, size_t n, std::vector<uint64_t>& offsets,
                        std::vector<uint32_t>& cols, std::vector<uint32_t>& mult,
                        AdjacencyMode mode) {
    offsets.assign(n + 1, 0);
    std::vector<uint32_t> row;
    for (size_t i = 0; i < n; ++i) {
        row.assign(csr.cols.begin() + csr.offsets[i], csr.cols.begin() + csr.offsets[i + 1]);
        std::sort(row.begin(), row.end());
        for (size_t k = 0; k < row.size();) {
            size_t e = k;
            while (e < row.size() && row[e] == row[k]) ++e;
            cols.push_back(row[k]);
            mult.push_back(mode == AdjacencyMode::binary ? 1u : static_cast<uint32_t>(e - k));
            k = e;
        }
        offsets[i + 1] = cols.size();
    }
}

}  // namespace

AdjacencyView adjacency(const ProvenanceGraph& g, AdjacencyMode mode) {
    AdjacencyView v;
    v.n = static_cast<uint32_t>(g.num_nodes());
    v.mode = mode;
    collapse_direction(g.out_adj, g.num_nodes(), v.out_offsets, v.out_cols, v.out_mult, mode);
    collapse_direction(g.in_adj, g.num_nodes(), v.in_offsets, v.in_cols, v.in_mult, mode);
    return v;
}

uint32_t AdjacencyView::at(uint32_t i, uint32_t j) const {
    const auto b = out_cols.begin() + out_offsets[i];
    const auto e = out_cols.begin() + out_offsets[i + 1];
    auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return 0;
    return out_mult[it - out_cols.begin()];
}

uint64_t AdjacencyView::out_degree_sum() const {
    uint64_t s = 0;
    for (uint32_t m : out_mult) s += m;
    return s;
}

uint64_t AdjacencyView::in_degree_sum() const {
    uint64_t s = 0;
    for (uint32_t m : in_mult) s += m;
    return s;
}

SparseAdj to_sparse(const AdjacencyView& v) {
    SparseAdj a;
    a.n = v.n;
    a.offsets.assign(v.out_offsets.begin(), v.out_offsets.end());
    a.cols = v.out_cols;
    return a;
}

namespace {

json attrs_json(const AttrList& attrs) {
    json arr = json::array();
    for (const auto& [k, v] : attrs) arr.push_back(json::array({k, v}));
    return arr;
}

AttrList attrs_from_json(const json& arr) {
    AttrList out;
    for (const auto& p : arr) out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    return out;
}

std::string csr_blob(const EdgeCsr& csr) {
    std::string out;
    for (uint32_t v : csr.offsets) io::put_u32(out, v);
    for (uint32_t v : csr.cols) io::put_u32(out, v);
    for (uint32_t v : csr.eids) io::put_u32(out, v);
    return out;
}

EdgeCsr csr_from_blob(const std::string& blob, size_t& off, size_t n_nodes, size_t n_edges) {
    EdgeCsr csr;
    csr.offsets.resize(n_nodes + 1);
    for (auto& v : csr.offsets) { v = io::get_u32(blob, off); off += 4; }
    csr.cols.resize(n_edges);
    for (auto& v : csr.cols) { v = io::get_u32(blob, off); off += 4; }
    csr.eids.resize(n_edges);
    for (auto& v : csr.eids) { v = io::get_u32(blob, off); off += 4; }
    return csr;
}

}  // namespace

void save_graph(const ProvenanceGraph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::string nodes;
    for (const auto& n : g.nodes) {
        json j;
        j["index"] = n.index;
        j["nid"] = n.nid;
        j["ntype"] = n.ntype;
        j["attrs"] = attrs_json(n.nattrs);
        nodes += j.dump() + "\n";
    }
    io::write_text(dir / "nodes.jsonl", nodes);

    std::string edges;
    for (const auto& e : g.edges) {
        json j;
        j["eid"] = e.eid;
        j["etype"] = e.etype;
        j["src"] = e.src;
        j["dst"] = e.dst;
        j["t"] = e.t;
        j["attrs"] = attrs_json(e.eattrs);
        edges += j.dump() + "\n";
    }
    io::write_text(dir / "edges.jsonl", edges);

    io::write_text(dir / "csr.bin", csr_blob(g.out_adj) + csr_blob(g.in_adj));

    json manifest;
    manifest["nodes"] = g.num_nodes();
    manifest["edges"] = g.num_edges();
    manifest["dropped_events"] = g.dropped_events;
    manifest["checksums"] = {
        {"nodes.jsonl", io::crc32_file(dir / "nodes.jsonl")},
        {"edges.jsonl", io::crc32_file(dir / "edges.jsonl")},
        {"csr.bin", io::crc32_file(dir / "csr.bin")},
    };
    io::save_json(dir / "manifest.json", manifest);
}

ProvenanceGraph load_graph(const std::filesystem::path& dir) {
    const json manifest = io::load_json(dir / "manifest.json");
    for (const auto& [name, crc] : manifest.at("checksums").items()) {
        if (io::crc32_file(dir / name) != crc.get<uint32_t>())
            throw Error(Errc::checksum_mismatch, "checksum mismatch for " + (dir / name).string());
    }

    ProvenanceGraph g;
    g.dropped_events = manifest.value("dropped_events", 0u);
    io::for_each_line(dir / "nodes.jsonl", [&](size_t, const std::string& l) {
        if (l.empty()) return;
        json j = json::parse(l);
        NodeRecord n;
        n.index = j["index"].get<uint32_t>();
        n.nid = j["nid"].get<std::string>();
        n.ntype = j["ntype"].get<std::string>();
        n.nattrs = attrs_from_json(j["attrs"]);
        g.nodes.push_back(std::move(n));
    });
    io::for_each_line(dir / "edges.jsonl", [&](size_t, const std::string& l) {
        if (l.empty()) return;
        json j = json::parse(l);
        EdgeRecord e;
        e.eid = j["eid"].get<std::string>();
        e.etype = j["etype"].get<std::string>();
        e.src = j["src"].get<uint32_t>();
        e.dst = j["dst"].get<uint32_t>();
        e.t = j["t"].get<int64_t>();
        e.eattrs = attrs_from_json(j["attrs"]);
        g.edges.push_back(std::move(e));
    });

    const std::string blob = io::read_text(dir / "csr.bin");
    size_t off = 0;
    g.out_adj = csr_from_blob(blob, off, g.nodes.size(), g.edges.size());
    g.in_adj = csr_from_blob(blob, off, g.nodes.size(), g.edges.size());

    for (const auto& n : g.nodes) g.type_vocab.emplace(n.ntype, 0);
    int32_t next = 0;
    for (auto& [t, id] : g.type_vocab) id = next++;
    return g;
}

}  // namespace provdistill
