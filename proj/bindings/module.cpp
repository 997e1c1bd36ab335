#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "provdistill/pipeline.hpp"

namespace py = pybind11;
using namespace provdistill;

namespace {

DistillConfig distill_config_from_kwargs(double r, const std::string& method, uint64_t seed,
                                         double rare_class_threshold, int iterations,
                                         double lr_feat, double lr_adj, int inner_steps,
                                         int encoder_width, int batch_per_class,
                                         int theta_refresh, double lr_theta) {
    DistillConfig cfg;
    cfg.r = r;
    cfg.method = method_from_string(method);
    cfg.seed = seed;
    cfg.rare_class_threshold = rare_class_threshold;
    cfg.iterations = iterations;
    cfg.lr_feat = lr_feat;
    cfg.lr_adj = lr_adj;
    cfg.inner_steps = inner_steps;
    cfg.encoder_width = encoder_width;
    cfg.batch_per_class = batch_per_class;
    cfg.theta_refresh = theta_refresh;
    cfg.lr_theta = lr_theta;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Provenance-graph distillation core";

    py::register_exception<Error>(m, "DomainError");

    py::class_<EntityRecord>(m, "EntityRecord")
        .def_readonly("entity_id", &EntityRecord::entity_id)
        .def_readonly("entity_type", &EntityRecord::entity_type)
        .def_readonly("attrs", &EntityRecord::attrs);

    py::class_<EventRecord>(m, "EventRecord")
        .def_readonly("event_id", &EventRecord::event_id)
        .def_readonly("subject_id", &EventRecord::subject_id)
        .def_readonly("object_id", &EventRecord::object_id)
        .def_readonly("timestamp_ns", &EventRecord::timestamp_ns)
        .def_readonly("operation", &EventRecord::operation);

    py::class_<IngestResult>(m, "IngestResult")
        .def_readonly("entities", &IngestResult::entities)
        .def_readonly("events", &IngestResult::events)
        .def_property_readonly("num_errors",
                               [](const IngestResult& r) { return r.errors.size(); })
        .def_property_readonly("errors", [](const IngestResult& r) {
            std::vector<std::pair<size_t, std::string>> out;
            for (const auto& e : r.errors) out.emplace_back(e.line_number, e.reason);
            return out;
        });

    m.def("parse_log_line", [](const std::string& line) -> py::object {
        const LogRecord rec = parse_log_line(line);
        if (std::holds_alternative<EntityRecord>(rec)) return py::cast(std::get<EntityRecord>(rec));
        return py::cast(std::get<EventRecord>(rec));
    });
    m.def("ingest_lines", &ingest_lines);
    m.def("ingest_file", &ingest_file);

    py::class_<ProvenanceGraph>(m, "ProvenanceGraph")
        .def_property_readonly("num_nodes", &ProvenanceGraph::num_nodes)
        .def_property_readonly("num_edges", &ProvenanceGraph::num_edges)
        .def_readonly("dropped_events", &ProvenanceGraph::dropped_events)
        .def("node_types",
             [](const ProvenanceGraph& g) {
                 std::vector<std::string> t;
                 for (const auto& n : g.nodes) t.push_back(n.ntype);
                 return t;
             })
        .def("node_ids", [](const ProvenanceGraph& g) {
            std::vector<std::string> t;
            for (const auto& n : g.nodes) t.push_back(n.nid);
            return t;
        });

    m.def(
        "build_graph",
        [](const IngestResult& r, const std::string& policy) {
            return build_graph(r, policy == "synthesize" ? DanglingPolicy::synthesize
                                                         : DanglingPolicy::drop);
        },
        py::arg("ingest"), py::arg("dangling_policy") = "drop");

    py::class_<LabelVector>(m, "LabelVector")
        .def_readonly("y", &LabelVector::y)
        .def_readonly("class_names", &LabelVector::class_names);
    m.def("node_labels", &node_labels);

    m.def(
        "build_sentence",
        [](const ProvenanceGraph& g, uint32_t i, size_t max_tokens) {
            return build_sentence(g, i, max_tokens).tokens;
        },
        py::arg("graph"), py::arg("node_index"), py::arg("max_tokens") = kDefaultMaxSentence);

    py::class_<EmbeddingModel>(m, "EmbeddingModel")
        .def_property_readonly("dim", &EmbeddingModel::dim)
        .def_readonly("epoch_loss", &EmbeddingModel::epoch_loss)
        .def_property_readonly("vocab_size",
                               [](const EmbeddingModel& m_) { return m_.vocab.size(); });

    m.def(
        "train_skipgram",
        [](const std::vector<std::vector<std::string>>& sentences, int dim, int window,
           int negatives, int epochs, double lr, uint64_t seed) {
            std::vector<NodeSentence> corpus;
            for (uint32_t i = 0; i < sentences.size(); ++i)
                corpus.push_back({i, sentences[i]});
            return train_skipgram(corpus, {dim, window, negatives, epochs, lr, seed});
        },
        py::arg("sentences"), py::arg("dim") = 32, py::arg("window") = 5, py::arg("negatives") = 5,
        py::arg("epochs") = 5, py::arg("lr") = 0.025, py::arg("seed") = 1);

    m.def("positional_encoding", &positional_encoding, py::arg("pos"), py::arg("dim"));
    m.def(
        "featurize_graph",
        [](const ProvenanceGraph& g, const EmbeddingModel& model, size_t max_tokens) {
            return featurize_graph(g, model, max_tokens);
        },
        py::arg("graph"), py::arg("model"), py::arg("max_tokens") = kDefaultMaxSentence);

    py::class_<GraphDataset>(m, "GraphDataset")
        .def_readonly("X", &GraphDataset::X)
        .def_readonly("y", &GraphDataset::y)
        .def_readonly("class_names", &GraphDataset::class_names)
        .def_readonly("class_counts", &GraphDataset::class_counts);
    m.def("make_dataset", &make_dataset, py::arg("graph"), py::arg("features"));

    py::class_<DistilledGraph>(m, "DistilledGraph")
        .def_readonly("Xp", &DistilledGraph::Xp)
        .def_readonly("Yp", &DistilledGraph::Yp)
        .def_readonly("class_names", &DistilledGraph::class_names)
        .def_readonly("removed_classes", &DistilledGraph::removed_classes)
        .def_readonly("origin", &DistilledGraph::origin)
        .def_readonly("loss_trace", &DistilledGraph::loss_trace)
        .def_property_readonly("num_nodes", &DistilledGraph::num_nodes)
        .def_property_readonly("num_edges", [](const DistilledGraph& d) { return d.Ap.nnz(); });

    m.def("select_rare_classes", &select_rare_classes, py::arg("class_counts"),
          py::arg("threshold"));
    m.def("class_budgets", &class_budgets, py::arg("class_counts"), py::arg("r"));
    m.def(
        "distill",
        [](const GraphDataset& t, double r, const std::string& method, uint64_t seed,
           double rare_class_threshold, int iterations, double lr_feat, double lr_adj,
           int inner_steps, int encoder_width, int batch_per_class, int theta_refresh,
           double lr_theta) {
            return distill(t, distill_config_from_kwargs(
                                  r, method, seed, rare_class_threshold, iterations, lr_feat,
                                  lr_adj, inner_steps, encoder_width, batch_per_class,
                                  theta_refresh, lr_theta));
        },
        py::arg("dataset"), py::arg("r") = 0.01, py::arg("method") = "random", py::arg("seed") = 0,
        py::arg("rare_class_threshold") = 0.01, py::arg("iterations") = 60,
        py::arg("lr_feat") = 0.03, py::arg("lr_adj") = 0.03, py::arg("inner_steps") = 1,
        py::arg("encoder_width") = 64, py::arg("batch_per_class") = 256,
        py::arg("theta_refresh") = 20, py::arg("lr_theta") = 0.005);

    py::class_<SageModel>(m, "SageModel")
        .def_property_readonly("in_dim", &SageModel::in_dim)
        .def_property_readonly("hidden", &SageModel::hidden)
        .def_property_readonly("classes", &SageModel::classes);

    m.def(
        "train_classifier",
        [](const GraphDataset& t, int hidden, int epochs, double lr, double weight_decay,
           uint64_t seed) {
            SageConfig cfg{hidden, epochs, lr, weight_decay, 0.9, seed};
            SageModel init = SageModel::init(static_cast<int>(t.X.cols()), hidden,
                                             static_cast<int>(t.class_names.size()), cfg);
            TrainResult res = sage_train(std::move(init), t.X, t.A, t.y, cfg);
            return py::make_tuple(res.model, res.loss_trace, res.wall_clock_s);
        },
        py::arg("dataset"), py::arg("hidden") = 64, py::arg("epochs") = 25, py::arg("lr") = 0.2,
        py::arg("weight_decay") = 0.0, py::arg("seed") = 0);
    m.def(
        "train_on_distilled",
        [](const DistilledGraph& d, int hidden, int epochs, double lr, double weight_decay,
           uint64_t seed) {
            SageConfig cfg{hidden, epochs, lr, weight_decay, 0.9, seed};
            SageModel init = SageModel::init(static_cast<int>(d.Xp.cols()), hidden,
                                             static_cast<int>(d.class_names.size()), cfg);
            TrainResult res = sage_train(std::move(init), d.Xp, d.Ap, d.Yp, cfg);
            return py::make_tuple(res.model, res.loss_trace, res.wall_clock_s);
        },
        py::arg("distilled"), py::arg("hidden") = 64, py::arg("epochs") = 25, py::arg("lr") = 0.2,
        py::arg("weight_decay") = 0.0, py::arg("seed") = 0);

    m.def("predict", [](const SageModel& model, const GraphDataset& t) {
        return sage_predict(model, t.X, t.A);
    });
    m.def(
        "detect_flags",
        [](const std::vector<int32_t>& predictions, const std::vector<std::string>& true_types,
           const std::vector<std::string>& model_classes,
           const std::vector<std::string>& removed_classes) {
            return detect(predictions, true_types, model_classes, removed_classes).flags();
        },
        py::arg("predictions"), py::arg("true_types"), py::arg("model_classes"),
        py::arg("removed_classes") = std::vector<std::string>{});

    py::class_<ConfusionCounts>(m, "ConfusionCounts")
        .def_readonly("tp", &ConfusionCounts::tp)
        .def_readonly("fp", &ConfusionCounts::fp)
        .def_readonly("fn", &ConfusionCounts::fn)
        .def_readonly("tn", &ConfusionCounts::tn);
    m.def("confusion", &confusion, py::arg("flags"), py::arg("truth"));
    m.def("metrics", [](const ConfusionCounts& c) {
        const MetricsBlock b = metrics(c);
        py::dict d;
        d["accuracy"] = b.accuracy ? py::cast(*b.accuracy) : py::none();
        d["precision"] = b.precision ? py::cast(*b.precision) : py::none();
        d["recall"] = b.recall ? py::cast(*b.recall) : py::none();
        d["f1"] = b.f1 ? py::cast(*b.f1) : py::none();
        return d;
    });

    m.def(
        "synth_generate",
        [](uint64_t n_processes, uint64_t n_files, uint64_t n_sockets, uint64_t benign_events,
           uint32_t attack_chains, uint32_t chain_length, uint64_t seed) {
            SynthConfig cfg;
            cfg.n_processes = n_processes;
            cfg.n_files = n_files;
            cfg.n_sockets = n_sockets;
            cfg.benign_events = benign_events;
            cfg.attack_chains = attack_chains;
            cfg.chain_length = chain_length;
            cfg.seed = seed;
            const SynthOutput out = generate(cfg);
            return py::make_tuple(out.lines,
                                  std::vector<std::string>(out.truth.malicious.begin(),
                                                           out.truth.malicious.end()),
                                  out.truth.boundary_ts);
        },
        py::arg("n_processes") = 100, py::arg("n_files") = 600, py::arg("n_sockets") = 300,
        py::arg("benign_events") = 5000, py::arg("attack_chains") = 0,
        py::arg("chain_length") = 3, py::arg("seed") = 0);
    m.def("synth_split", &split, py::arg("lines"), py::arg("boundary_ts"));

    m.def(
        "run_pipeline",
        [](const std::string& config_path, const std::string& workdir) {
            PipelineConfig cfg = load_pipeline_config(config_path);
            if (!workdir.empty()) cfg.workdir = workdir;
            run_pipeline(cfg);
            return (Paths{cfg.workdir}).comparison_csv().string();
        },
        py::arg("config_path"), py::arg("workdir") = "");

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
