#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "provdistill/errors.hpp"

namespace provdistill {

using AttrList = std::vector<std::pair<std::string, std::string>>;

// One declared system entity (process, file, socket, ...).
struct EntityRecord {
    std::string entity_id;
    std::string entity_type;
    AttrList attrs;

    bool operator==(const EntityRecord&) const = default;
};

// One audit event: subject acts on object at a timestamp.
struct EventRecord {
    std::string event_id;
    std::string subject_id;
    std::string object_id;
    int64_t timestamp_ns = 0;
    std::string operation;
    AttrList attrs;

    bool operator==(const EventRecord&) const = default;
};

using LogRecord = std::variant<EntityRecord, EventRecord>;

struct IngestError {
    size_t line_number = 0;  // 1-based
    Errc kind = Errc::malformed_line;
    std::string reason;

    bool operator==(const IngestError&) const = default;
};

struct IngestResult {
    std::vector<EntityRecord> entities;  // first-seen order
    std::vector<EventRecord> events;     // file order
    std::vector<IngestError> errors;
    size_t duplicate_entity_lines = 0;   // idempotent re-sends, for accounting

    std::unordered_map<std::string, size_t> entity_index;  // entity_id -> position

    const EntityRecord* find_entity(const std::string& id) const {
        auto it = entity_index.find(id);
        return it == entity_index.end() ? nullptr : &entities[it->second];
    }
};

// Parses one JSON-Lines record. Throws Error with code malformed_line,
// missing_field, or unknown_record_type.
LogRecord parse_log_line(std::string_view line);

// Incremental ingestion; per-line parse failures are collected, a
// conflicting duplicate entity_id aborts the run.
class IngestAccumulator {
public:
    void add_line(std::string_view line, size_t line_number);
    IngestResult finish() { return std::move(result_); }

private:
    IngestResult result_;
};

IngestResult ingest_lines(const std::vector<std::string>& lines);
IngestResult ingest_file(const std::filesystem::path& path);

std::string entity_to_json_line(const EntityRecord& e);
std::string event_to_json_line(const EventRecord& e);

// Writes entities.jsonl, events.jsonl, errors.jsonl into dir.
void save_ingest(const IngestResult& r, const std::filesystem::path& dir);
IngestResult load_ingest(const std::filesystem::path& dir);

}  // namespace provdistill
