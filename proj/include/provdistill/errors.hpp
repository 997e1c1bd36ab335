#pragma once

#include <stdexcept>
#include <string>

namespace provdistill {

// Every domain failure carries one of these codes so callers (and the CLI
// exit-code mapping) can react without parsing message text.
enum class Errc {
    malformed_line,
    missing_field,
    unknown_record_type,
    entity_conflict,
    empty_graph,
    empty_corpus,
    odd_dimension,
    shape_mismatch,
    non_finite_loss,
    single_class,
    all_classes_removed,
    empty_evaluation,
    invalid_config,
    boundary_out_of_range,
    not_implemented,
    missing_artifact,
    checksum_mismatch,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::malformed_line: return "MalformedLine";
    case Errc::missing_field: return "MissingField";
    case Errc::unknown_record_type: return "UnknownRecordType";
    case Errc::entity_conflict: return "EntityConflict";
    case Errc::empty_graph: return "EmptyGraph";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::odd_dimension: return "OddDimension";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::single_class: return "SingleClass";
    case Errc::all_classes_removed: return "AllClassesRemoved";
    case Errc::empty_evaluation: return "EmptyEvaluation";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::boundary_out_of_range: return "BoundaryOutOfRange";
    case Errc::not_implemented: return "NotImplemented";
    case Errc::missing_artifact: return "MissingArtifact";
    case Errc::checksum_mismatch: return "ChecksumMismatch";
    }
    return "Error";
}

}  // namespace provdistill
