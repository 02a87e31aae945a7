#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <vector>

namespace pairjudge::journal {

// Append-only line-delimited JSON. Every append is a single line flushed
// immediately, so a crash loses at most in-flight work.
class Writer {
public:
    explicit Writer(const std::filesystem::path& path);

    void append(const nlohmann::ordered_json& record);

private:
    std::ofstream out_;
    std::mutex mutex_;
};

// Parses every line; throws journal_error naming the line number on bad JSON.
std::vector<nlohmann::json> read_all(const std::filesystem::path& path);

} // namespace pairjudge::journal
