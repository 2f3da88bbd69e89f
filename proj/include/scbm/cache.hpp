#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace scbm {

using CacheKey = std::array<std::uint8_t, 32>;

// SHA-256 over
//   model_id 0x00 lexicon_version 0x00 affirm_signature 0x00 hex(SHA-256(prompt))
CacheKey make_cache_key(std::string_view model_id, std::string_view lexicon_version,
                        std::string_view affirm_signature, std::string_view rendered_prompt);

// Persistent relevance-score cache.
//
// Data file, append-only, little-endian:
//   header  16 bytes: "SCBMCACH" | u32 format version (1) | u32 record size (40)
//   record  40 bytes: key[32] | f64 score
// A later record for the same key wins. A torn trailing record is ignored
// and cut off on the next open.
//
// Index sidecar "<path>.idx", rewritten atomically on flush():
//   header  24 bytes: "SCBMIDX1" | u32 version (1) | u32 reserved (0) | u64 records covered
//   entry   40 bytes: key[32] | u64 record ordinal, sorted by key
// Records past the covered count are scanned on open, so a stale or missing
// index costs time but never correctness.
//
// Thread-safe. A single process should own a cache file for writing.
class ScoreCache {
public:
    // In-memory cache, nothing persisted.
    ScoreCache();
    // Opens or creates the cache at `path`.
    explicit ScoreCache(const std::string& path);
    ~ScoreCache();

    ScoreCache(ScoreCache&&) noexcept;
    ScoreCache& operator=(ScoreCache&&) noexcept;
    ScoreCache(const ScoreCache&) = delete;
    ScoreCache& operator=(const ScoreCache&) = delete;

    std::optional<double> get(const CacheKey& key) const;
    void put(const CacheKey& key, double score);

    // Flushes the data file and rewrites the index.
    void flush();

    std::size_t size() const;          // distinct keys
    std::size_t record_count() const;  // records in the data file
    bool persistent() const;

    static std::string index_path(const std::string& path) { return path + ".idx"; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace scbm
