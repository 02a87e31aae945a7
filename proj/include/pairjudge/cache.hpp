#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace pairjudge {

// Content-addressed response cache: one JSON file per request digest,
// holding the canonical request and the response text. Writes go through a
// temp file plus rename, so concurrent writers of the same key are
// idempotent as long as they write identical content.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path directory);

    std::optional<std::string> lookup(const std::string& digest) const;
    void store(const std::string& digest, const std::string& canonical_request,
               const std::string& backend_name, const std::string& response_text);

    const std::filesystem::path& directory() const { return directory_; }

private:
    std::filesystem::path entry_path(const std::string& digest) const;

    std::filesystem::path directory_;
};

} // namespace pairjudge
