#include "pairjudge/journal.hpp"

#include "pairjudge/errors.hpp"

#include <sstream>

namespace pairjudge::journal {

Writer::Writer(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) {
        throw journal_error("cannot open journal for append: " + path.string());
    }
}

void Writer::append(const nlohmann::ordered_json& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) {
        throw journal_error("journal write failed");
    }
}

std::vector<nlohmann::json> read_all(const std::filesystem::path& path) {
    std::vector<nlohmann::json> records;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return records; // a journal that does not exist yet is empty
    }
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& ex) {
            throw journal_error(path.string() + " line " + std::to_string(line_number) +
                                ": invalid JSON: " + ex.what());
        }
    }
    return records;
}

} // namespace pairjudge::journal
