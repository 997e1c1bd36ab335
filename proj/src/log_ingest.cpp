#include "provdistill/log_ingest.hpp"

#include <nlohmann/json.hpp>

#include "provdistill/io.hpp"

namespace provdistill {

using nlohmann::json;

namespace {

std::string require_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty())
        throw Error(Errc::missing_field, std::string("missing field: ") + field);
    return it->get<std::string>();
}

AttrList parse_attrs(const json& j) {
    AttrList attrs;
    auto it = j.find("attrs");
    if (it == j.end()) return attrs;
    if (!it->is_array()) throw Error(Errc::malformed_line, "attrs must be an array of [key, value] pairs");
    for (const auto& pair : *it) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
            throw Error(Errc::malformed_line, "attrs must be an array of [key, value] pairs");
        attrs.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
    return attrs;
}

}  // namespace

LogRecord parse_log_line(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(Errc::malformed_line, "not a JSON object");

    auto rt = j.find("record_type");
    if (rt == j.end() || !rt->is_string())
        throw Error(Errc::missing_field, "missing field: record_type");
    const std::string& kind = rt->get_ref<const std::string&>();

    if (kind == "entity") {
        EntityRecord e;
        e.entity_id = require_string(j, "entity_id");
        e.entity_type = require_string(j, "entity_type");
        e.attrs = parse_attrs(j);
        return e;
    }
    if (kind == "event") {
        EventRecord e;
        e.event_id = require_string(j, "event_id");
        e.subject_id = require_string(j, "subject");
        e.object_id = require_string(j, "object");
        auto ts = j.find("ts");
        if (ts == j.end() || !ts->is_number_integer())
            throw Error(Errc::missing_field, "missing field: ts");
        e.timestamp_ns = ts->get<int64_t>();
        if (e.timestamp_ns < 0)
            throw Error(Errc::malformed_line, "ts must be non-negative");
        e.operation = require_string(j, "op");
        e.attrs = parse_attrs(j);
        return e;
    }
    throw Error(Errc::unknown_record_type, "unknown record_type: " + kind);
}

void IngestAccumulator::add_line(std::string_view line, size_t line_number) {
    LogRecord rec;
    try {
        rec = parse_log_line(line);
    } catch (const Error& e) {
        result_.errors.push_back({line_number, e.code(), e.what()});
        return;
    }
    if (std::holds_alternative<EventRecord>(rec)) {
        result_.events.push_back(std::move(std::get<EventRecord>(rec)));
        return;
    }
    auto& entity = std::get<EntityRecord>(rec);
    auto it = result_.entity_index.find(entity.entity_id);
    if (it == result_.entity_index.end()) {
        result_.entity_index.emplace(entity.entity_id, result_.entities.size());
        result_.entities.push_back(std::move(entity));
    } else if (result_.entities[it->second] == entity) {
        ++result_.duplicate_entity_lines;  // idempotent re-send
    } else {
        throw Error(Errc::entity_conflict,
                    "conflicting records for entity_id '" + entity.entity_id + "' (line " +
                        std::to_string(line_number) + ")");
    }
}

IngestResult ingest_lines(const std::vector<std::string>& lines) {
    IngestAccumulator acc;
    for (size_t i = 0; i < lines.size(); ++i) acc.add_line(lines[i], i + 1);
    return acc.finish();
}

IngestResult ingest_file(const std::filesystem::path& path) {
    IngestAccumulator acc;
    io::for_each_line(path, [&](size_t n, const std::string& l) {
        if (!l.empty()) acc.add_line(l, n);
    });
    return acc.finish();
}

namespace {

json attrs_to_json(const AttrList& attrs) {
    json arr = json::array();
    for (const auto& [k, v] : attrs) arr.push_back(json::array({k, v}));
    return arr;
}

}  // namespace

std::string entity_to_json_line(const EntityRecord& e) {
    json j;
    j["record_type"] = "entity";
    j["entity_id"] = e.entity_id;
    j["entity_type"] = e.entity_type;
    j["attrs"] = attrs_to_json(e.attrs);
    return j.dump();
}

std::string event_to_json_line(const EventRecord& e) {
    json j;
    j["record_type"] = "event";
    j["event_id"] = e.event_id;
    j["subject"] = e.subject_id;
    j["object"] = e.object_id;
    j["ts"] = e.timestamp_ns;
    j["op"] = e.operation;
    j["attrs"] = attrs_to_json(e.attrs);
    return j.dump();
}

void save_ingest(const IngestResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string entities;
    for (const auto& e : r.entities) entities += entity_to_json_line(e) + "\n";
    io::write_text(dir / "entities.jsonl", entities);

    std::string events;
    for (const auto& e : r.events) events += event_to_json_line(e) + "\n";
    io::write_text(dir / "events.jsonl", events);

    std::string errors;
    for (const auto& err : r.errors) {
        json j;
        j["line"] = err.line_number;
        j["kind"] = errc_name(err.kind);
        j["reason"] = err.reason;
        errors += j.dump() + "\n";
    }
    io::write_text(dir / "errors.jsonl", errors);
}

IngestResult load_ingest(const std::filesystem::path& dir) {
    IngestAccumulator acc;
    size_t n = 0;
    io::for_each_line(dir / "entities.jsonl", [&](size_t, const std::string& l) {
        if (!l.empty()) acc.add_line(l, ++n);
    });
    io::for_each_line(dir / "events.jsonl", [&](size_t, const std::string& l) {
        if (!l.empty()) acc.add_line(l, ++n);
    });
    IngestResult r = acc.finish();
    io::for_each_line(dir / "errors.jsonl", [&](size_t, const std::string& l) {
        if (l.empty()) return;
        json j = json::parse(l);
        IngestError e;
        e.line_number = j["line"].get<size_t>();
        e.reason = j["reason"].get<std::string>();
        for (int k = 0; k <= static_cast<int>(Errc::checksum_mismatch); ++k)
            if (j["kind"].get<std::string>() == errc_name(static_cast<Errc>(k)))
                e.kind = static_cast<Errc>(k);
        r.errors.push_back(std::move(e));
    });
    return r;
}

}  // namespace provdistill
