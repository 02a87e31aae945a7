#include "pairjudge/dataset.hpp"

#include "pairjudge/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace pairjudge {

using nlohmann::json;
using nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

namespace {

const char* const kKnownFields[] = {"id", "question", "document", "dialogue",
                                    "reference_summary"};

std::string get_string_field(const json& record, const char* field, const std::string& where) {
    const auto it = record.find(field);
    if (it == record.end()) {
        throw schema_error(where + ": missing field '" + std::string(field) + "'");
    }
    if (!it->is_string()) {
        throw schema_error(where + ": field '" + std::string(field) + "' must be a string");
    }
    return it->get<std::string>();
}

void reject_field(const json& record, const char* field, TaskKind task, const std::string& where) {
    if (record.contains(field)) {
        throw schema_error(where + ": field '" + std::string(field) + "' not allowed for task " +
                           to_string(task));
    }
}

} // namespace

ordered_json sample_to_json(const Sample& sample) {
    ordered_json record;
    record["id"] = sample.id;
    switch (sample.task) {
    case TaskKind::QuestionSummarization:
        record["question"] = sample.question;
        break;
    case TaskKind::QueryBasedSummarization:
        record["question"] = sample.question;
        record["document"] = sample.document;
        break;
    case TaskKind::DialogSummarization: {
        ordered_json turns = ordered_json::array();
        for (const auto& turn : sample.dialogue) {
            turns.push_back({{"speaker", turn.speaker}, {"utterance", turn.utterance}});
        }
        record["dialogue"] = std::move(turns);
        break;
    }
    }
    if (sample.reference_summary) {
        record["reference_summary"] = *sample.reference_summary;
    }
    return record;
}

Sample sample_from_json(const json& record, TaskKind task, const std::string& where) {
    if (!record.is_object()) {
        throw schema_error(where + ": record is not a JSON object");
    }
    for (const auto& item : record.items()) {
        if (std::find_if(std::begin(kKnownFields), std::end(kKnownFields),
                         [&](const char* f) { return item.key() == f; }) ==
            std::end(kKnownFields)) {
            throw schema_error(where + ": extra field '" + item.key() + "'");
        }
    }

    Sample sample;
    sample.task = task;
    sample.id = get_string_field(record, "id", where);

    switch (task) {
    case TaskKind::QuestionSummarization:
        sample.question = get_string_field(record, "question", where);
        reject_field(record, "document", task, where);
        reject_field(record, "dialogue", task, where);
        break;
    case TaskKind::QueryBasedSummarization:
        sample.question = get_string_field(record, "question", where);
        sample.document = get_string_field(record, "document", where);
        reject_field(record, "dialogue", task, where);
        break;
    case TaskKind::DialogSummarization: {
        reject_field(record, "question", task, where);
        reject_field(record, "document", task, where);
        const auto it = record.find("dialogue");
        if (it == record.end()) {
            throw schema_error(where + ": missing field 'dialogue'");
        }
        if (!it->is_array()) {
            throw schema_error(where + ": field 'dialogue' must be an array of turns");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& turn = (*it)[i];
            const std::string turn_where = where + ", turn " + std::to_string(i);
            if (!turn.is_object()) {
                throw schema_error(turn_where + ": turn is not an object");
            }
            DialogueTurn parsed;
            parsed.speaker = get_string_field(turn, "speaker", turn_where);
            parsed.utterance = get_string_field(turn, "utterance", turn_where);
            for (const auto& item : turn.items()) {
                if (item.key() != "speaker" && item.key() != "utterance") {
                    throw schema_error(turn_where + ": extra field '" + item.key() + "'");
                }
            }
            sample.dialogue.push_back(std::move(parsed));
        }
        break;
    }
    }

    if (record.contains("reference_summary")) {
        sample.reference_summary = get_string_field(record, "reference_summary", where);
    }

    const auto violations = validate_sample(sample);
    if (!violations.empty()) {
        std::string message = where + ": invalid record:";
        for (const auto& v : violations) {
            message += " [" + v.to_string() + "]";
        }
        throw schema_error(message);
    }
    return sample;
}

SampleSet load_dataset(const std::filesystem::path& path, TaskKind task,
                       std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw schema_error("cannot open dataset file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();

    SampleSet set;
    set.dataset_name = path.stem().string();
    set.task = task;
    set.provenance.source_path = path.string();
    set.provenance.content_digest = sha256_hex(bytes);

    std::istringstream lines(bytes);
    std::string line;
    std::size_t line_number = 0;
    std::set<std::string> seen_ids;
    while (std::getline(lines, line)) {
        ++line_number;
        if (line.empty() ||
            std::all_of(line.begin(), line.end(),
                        [](unsigned char c) { return std::isspace(c) != 0; })) {
            continue;
        }
        const std::string where = path.filename().string() + " line " + std::to_string(line_number);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& ex) {
            throw schema_error(where + ": invalid JSON: " + ex.what());
        }
        Sample sample = sample_from_json(record, task, where);
        if (!seen_ids.insert(sample.id).second) {
            throw schema_error(where + ": duplicate id '" + sample.id + "'");
        }
        set.samples.push_back(std::move(sample));
    }

    if (set.samples.empty() && warnings) {
        warnings->push_back("dataset " + path.string() + " contains no records");
    }
    return set;
}

void write_dataset(const SampleSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw error("cannot write dataset file: " + path.string());
    }
    for (const auto& sample : set.samples) {
        out << sample_to_json(sample).dump() << '\n';
    }
    if (!out) {
        throw error("write failed: " + path.string());
    }
}

SampleSet subsample(const SampleSet& set, std::size_t k, std::uint64_t seed) {
    const std::size_t n = set.samples.size();
    if (k > n) {
        throw error("subsample: k=" + std::to_string(k) + " exceeds set size " +
                    std::to_string(n));
    }

    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    // Documented deterministic shuffle: mt19937_64, draws by engine() % (i+1).
    // std::shuffle is avoided because its draw sequence is not pinned by the
    // standard; this one is reproducible on every platform.
    std::mt19937_64 engine(seed);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(engine() % (i + 1));
        std::swap(indices[i], indices[j]);
    }

    indices.resize(k);
    std::sort(indices.begin(), indices.end());

    SampleSet out;
    out.dataset_name = set.dataset_name;
    out.task = set.task;
    out.provenance = set.provenance;
    out.samples.reserve(k);
    for (const std::size_t index : indices) {
        out.samples.push_back(set.samples[index]);
    }
    return out;
}

} // namespace pairjudge
