"""Provenance-graph distillation for anomaly detection.

Thin re-export of the compiled core. The heavy lifting (parsing, graph
construction, embedding, distillation, classification) lives in C++; this
package exposes the main operations for scripting and experimentation.
"""

from ._core import (  # noqa: F401
    ConfusionCounts,
    DistilledGraph,
    DomainError,
    EmbeddingModel,
    EntityRecord,
    EventRecord,
    GraphDataset,
    IngestResult,
    LabelVector,
    ProvenanceGraph,
    SageModel,
    __version__,
    build_graph,
    build_sentence,
    class_budgets,
    confusion,
    detect_flags,
    distill,
    featurize_graph,
    ingest_file,
    ingest_lines,
    make_dataset,
    metrics,
    node_labels,
    parse_log_line,
    positional_encoding,
    predict,
    run_pipeline,
    select_rare_classes,
    synth_generate,
    synth_split,
    train_classifier,
    train_on_distilled,
    train_skipgram,
)
