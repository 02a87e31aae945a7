#include "pairjudge/cache.hpp"

#include "pairjudge/errors.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>

namespace pairjudge {

using nlohmann::json;
using nlohmann::ordered_json;

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
    std::filesystem::create_directories(directory_);
}

std::filesystem::path ResponseCache::entry_path(const std::string& digest) const {
    return directory_ / (digest + ".json");
}

std::optional<std::string> ResponseCache::lookup(const std::string& digest) const {
    std::ifstream in(entry_path(digest), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        const json entry = json::parse(buffer.str());
        return entry.at("response_text").get<std::string>();
    } catch (const json::exception& ex) {
        throw journal_error("corrupt cache entry " + entry_path(digest).string() + ": " +
                            ex.what());
    }
}

void ResponseCache::store(const std::string& digest, const std::string& canonical_request,
                          const std::string& backend_name, const std::string& response_text) {
    ordered_json entry;
    entry["request_digest"] = digest;
    entry["backend"] = backend_name;
    entry["canonical_request"] = canonical_request;
    entry["response_text"] = response_text;

    // Unique temp name per writer, then rename: concurrent writers of the
    // same key land whole files, last rename wins.
    static std::atomic<unsigned> counter{0};
    const auto temp = directory_ / (digest + ".tmp" + std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw error("cannot write cache entry: " + temp.string());
        }
        out << entry.dump(2) << '\n';
    }
    std::filesystem::rename(temp, entry_path(digest));
}

} // namespace pairjudge
