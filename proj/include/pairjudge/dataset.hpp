#pragma once

#include "pairjudge/sample.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pairjudge {

// Datasets are UTF-8 line-delimited JSON, one record per line, with the
// fixed field names id / question / document / dialogue / reference_summary.
// Dialogue is an array of {"speaker": ..., "utterance": ...} objects.

nlohmann::ordered_json sample_to_json(const Sample& sample);

// Parses one record. Rejects missing, extra, or wrongly-typed fields for
// the given task kind. `where` is prepended to error messages.
Sample sample_from_json(const nlohmann::json& record, TaskKind task, const std::string& where);

// Loads every record in file order and validates each one against the task
// kind. Throws schema_error naming the line number on any malformed line.
// An empty file yields an empty set plus a warning in `warnings` (if given).
SampleSet load_dataset(const std::filesystem::path& path, TaskKind task,
                       std::vector<std::string>* warnings = nullptr);

// Writes the set back out in the same line-delimited format. A written set
// reloads to an identical sequence of samples.
void write_dataset(const SampleSet& set, const std::filesystem::path& path);

// Draws k samples without replacement, deterministically. The generator is
// std::mt19937_64 seeded with `seed`; the selection rule is a Fisher-Yates
// shuffle of the index array where the draw for position i (from n-1 down
// to 1) is `engine() % (i + 1)`, followed by taking the first k shuffled
// indices and re-sorting them ascending so the output preserves the
// original relative order. Throws error if k exceeds the set size.
SampleSet subsample(const SampleSet& set, std::size_t k, std::uint64_t seed);

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

} // namespace pairjudge
