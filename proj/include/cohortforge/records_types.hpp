#pragma once

// Plain record types persisted by the dataset store. Kept separate from the
// serialization code so stages can share the types without pulling in I/O.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cohortforge {

struct SyntheticNote {
    std::string note_id;
    std::string patient_id;
    int year_before_dx = 0;
    std::string note_type;
    std::string stage;
    std::string prompt_hash; // digest of the prompt that produced the text
    std::string backend_id;
    std::string text;

    bool operator==(const SyntheticNote&) const = default;
};

struct LabeledSentence {
    std::string sentence_id;
    std::string note_id;
    std::string patient_id;
    int year_before_dx = 0;
    std::string sentence_text;
    std::vector<std::string> labels; // empty = negative sentence

    bool operator==(const LabeledSentence&) const = default;
};

struct DatasetManifest {
    std::string dataset_id;
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::map<std::string, std::uint64_t> record_counts;
    std::string created_at; // ISO 8601 UTC
    std::string tool_version;
    std::string backend_id;
    bool complete = false;

    bool operator==(const DatasetManifest&) const = default;
};

} // namespace cohortforge
