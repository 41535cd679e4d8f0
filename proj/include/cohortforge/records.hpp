#pragma once

// Line-delimited record persistence. Records serialize to single-line JSON
// with alphabetically ordered keys, so files are byte-deterministic. Readers
// enforce the exact field set of the requested record kind, which makes
// feeding a file of the wrong kind a schema error rather than silent
// misreading. Writes go through a temp file and an atomic rename.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortforge/errors.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/records_types.hpp"
#include "cohortforge/trajectory.hpp"

namespace cohortforge {

namespace detail {

inline void expect_exact_fields(const nlohmann::json& j,
                                std::initializer_list<const char*> fields, const char* kind) {
    if (!j.is_object()) {
        throw SchemaError(std::string(kind) + " record must be a JSON object");
    }
    for (const char* field : fields) {
        if (!j.contains(field)) {
            throw SchemaError(std::string(kind) + " record missing field '" + field + "'");
        }
    }
    if (j.size() != fields.size()) {
        for (const auto& [key, value] : j.items()) {
            bool known = false;
            for (const char* field : fields) {
                if (key == field) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                throw SchemaError(std::string(kind) + " record has unexpected field '" + key +
                                  "'");
            }
        }
    }
}

} // namespace detail

// --- Persona ---------------------------------------------------------------

inline nlohmann::json to_json(const Persona& p) {
    return {{"patient_id", p.patient_id}, {"seed", p.seed}, {"assignments", p.assignments}};
}

inline void from_json_record(const nlohmann::json& j, Persona& p) {
    detail::expect_exact_fields(j, {"patient_id", "seed", "assignments"}, "persona");
    try {
        p.patient_id = j.at("patient_id").get<std::string>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.assignments = j.at("assignments").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("persona record field has wrong type: ") + e.what());
    }
}

// --- NoteSpec / VisitPlan ----------------------------------------------------

inline nlohmann::json to_json(const KeywordMention& m) {
    return {{"category", m.category}, {"keyword", m.keyword}};
}

inline void from_json_record(const nlohmann::json& j, KeywordMention& m) {
    detail::expect_exact_fields(j, {"category", "keyword"}, "keyword mention");
    try {
        m.category = j.at("category").get<std::string>();
        m.keyword = j.at("keyword").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("keyword mention field has wrong type: ") + e.what());
    }
}

inline nlohmann::json to_json(const NoteSpec& n) {
    nlohmann::json mentions = nlohmann::json::array();
    for (const auto& m : n.mentions) {
        mentions.push_back(to_json(m));
    }
    return {{"note_id", n.note_id},       {"patient_id", n.patient_id},
            {"year_before_dx", n.year_before_dx}, {"note_type", n.note_type},
            {"stage", n.stage},           {"mentions", std::move(mentions)}};
}

inline void from_json_record(const nlohmann::json& j, NoteSpec& n) {
    detail::expect_exact_fields(
        j, {"note_id", "patient_id", "year_before_dx", "note_type", "stage", "mentions"},
        "note spec");
    try {
        n.note_id = j.at("note_id").get<std::string>();
        n.patient_id = j.at("patient_id").get<std::string>();
        n.year_before_dx = j.at("year_before_dx").get<int>();
        n.note_type = j.at("note_type").get<std::string>();
        n.stage = j.at("stage").get<std::string>();
        n.mentions.clear();
        for (const auto& jm : j.at("mentions")) {
            KeywordMention m;
            from_json_record(jm, m);
            n.mentions.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("note spec field has wrong type: ") + e.what());
    }
}

inline nlohmann::json to_json(const VisitPlan& p) {
    nlohmann::json notes = nlohmann::json::array();
    for (const auto& n : p.notes) {
        notes.push_back(to_json(n));
    }
    return {{"patient_id", p.patient_id},
            {"seed", p.seed},
            {"assignments", p.assignments},
            {"notes", std::move(notes)}};
}

inline void from_json_record(const nlohmann::json& j, VisitPlan& p) {
    detail::expect_exact_fields(j, {"patient_id", "seed", "assignments", "notes"}, "visit plan");
    try {
        p.patient_id = j.at("patient_id").get<std::string>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.assignments = j.at("assignments").get<std::map<std::string, std::string>>();
        p.notes.clear();
        for (const auto& jn : j.at("notes")) {
            NoteSpec n;
            from_json_record(jn, n);
            p.notes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("visit plan field has wrong type: ") + e.what());
    }
}

// --- SyntheticNote -----------------------------------------------------------

inline nlohmann::json to_json(const SyntheticNote& n) {
    return {{"note_id", n.note_id},
            {"patient_id", n.patient_id},
            {"year_before_dx", n.year_before_dx},
            {"note_type", n.note_type},
            {"stage", n.stage},
            {"prompt_hash", n.prompt_hash},
            {"backend_id", n.backend_id},
            {"text", n.text}};
}

inline void from_json_record(const nlohmann::json& j, SyntheticNote& n) {
    detail::expect_exact_fields(j,
                                {"note_id", "patient_id", "year_before_dx", "note_type", "stage",
                                 "prompt_hash", "backend_id", "text"},
                                "synthetic note");
    try {
        n.note_id = j.at("note_id").get<std::string>();
        n.patient_id = j.at("patient_id").get<std::string>();
        n.year_before_dx = j.at("year_before_dx").get<int>();
        n.note_type = j.at("note_type").get<std::string>();
        n.stage = j.at("stage").get<std::string>();
        n.prompt_hash = j.at("prompt_hash").get<std::string>();
        n.backend_id = j.at("backend_id").get<std::string>();
        n.text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("synthetic note field has wrong type: ") + e.what());
    }
}

// --- LabeledSentence ----------------------------------------------------------

inline nlohmann::json to_json(const LabeledSentence& s) {
    return {{"sentence_id", s.sentence_id},
            {"note_id", s.note_id},
            {"patient_id", s.patient_id},
            {"year_before_dx", s.year_before_dx},
            {"sentence_text", s.sentence_text},
            {"labels", s.labels}};
}

inline void from_json_record(const nlohmann::json& j, LabeledSentence& s) {
    detail::expect_exact_fields(
        j, {"sentence_id", "note_id", "patient_id", "year_before_dx", "sentence_text", "labels"},
        "labeled sentence");
    try {
        s.sentence_id = j.at("sentence_id").get<std::string>();
        s.note_id = j.at("note_id").get<std::string>();
        s.patient_id = j.at("patient_id").get<std::string>();
        s.year_before_dx = j.at("year_before_dx").get<int>();
        s.sentence_text = j.at("sentence_text").get<std::string>();
        s.labels = j.at("labels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("labeled sentence field has wrong type: ") + e.what());
    }
}

// --- DatasetManifest ----------------------------------------------------------

inline nlohmann::json to_json(const DatasetManifest& m) {
    return {{"dataset_id", m.dataset_id},
            {"config_digest", m.config_digest},
            {"master_seed", m.master_seed},
            {"record_counts", m.record_counts},
            {"created_at", m.created_at},
            {"tool_version", m.tool_version},
            {"backend_id", m.backend_id},
            {"complete", m.complete}};
}

inline void from_json_record(const nlohmann::json& j, DatasetManifest& m) {
    detail::expect_exact_fields(j,
                                {"dataset_id", "config_digest", "master_seed", "record_counts",
                                 "created_at", "tool_version", "backend_id", "complete"},
                                "dataset manifest");
    try {
        m.dataset_id = j.at("dataset_id").get<std::string>();
        m.config_digest = j.at("config_digest").get<std::string>();
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.record_counts = j.at("record_counts").get<std::map<std::string, std::uint64_t>>();
        m.created_at = j.at("created_at").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.backend_id = j.at("backend_id").get<std::string>();
        m.complete = j.at("complete").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("dataset manifest field has wrong type: ") + e.what());
    }
}

// --- File I/O ------------------------------------------------------------------

// Writes arbitrary bytes atomically: temp file in the target directory, then
// rename over the destination.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    const auto parent = path.parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent);
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw UsageError("cannot write file: " + tmp.string());
        }
        out << contents;
        out.flush();
        if (!out) {
            throw UsageError("failed writing file: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

template <typename Record>
std::size_t write_records(const std::filesystem::path& path, const std::vector<Record>& records) {
    std::string buffer;
    for (const auto& record : records) {
        buffer += to_json(record).dump();
        buffer += '\n';
    }
    write_file_atomic(path, buffer);
    return records.size();
}

template <typename Record>
std::vector<Record> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open records file: " + path.string());
    }
    std::vector<Record> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) +
                             ": malformed record: " + e.what());
        }
        Record record;
        try {
            from_json_record(j, record);
        } catch (const SchemaError& e) {
            throw SchemaError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
        }
        records.push_back(std::move(record));
    }
    return records;
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    write_file_atomic(path, to_json(manifest).dump(2) + "\n");
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open manifest: " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": malformed manifest: " + e.what());
    }
    DatasetManifest manifest;
    from_json_record(j, manifest);
    return manifest;
}

} // namespace cohortforge
