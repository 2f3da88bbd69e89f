#include "scbm/cache.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "scbm/error.hpp"
#include "scbm/text.hpp"

namespace scbm {
namespace {

constexpr char kDataMagic[8] = {'S', 'C', 'B', 'M', 'C', 'A', 'C', 'H'};
constexpr char kIndexMagic[8] = {'S', 'C', 'B', 'M', 'I', 'D', 'X', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kRecordSize = 40;
constexpr std::size_t kIndexHeaderSize = 24;
constexpr std::size_t kIndexEntrySize = 40;

void put_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

struct KeyHash {
    std::size_t operator()(const CacheKey& k) const noexcept {
        std::uint64_t h = 0;
        std::memcpy(&h, k.data(), sizeof(h));
        return static_cast<std::size_t>(h);
    }
};

struct Entry {
    std::uint64_t ordinal;
    double score;
};

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f != nullptr) std::fclose(f);
    }
};

}  // namespace

CacheKey make_cache_key(std::string_view model_id, std::string_view lexicon_version,
                        std::string_view affirm_signature, std::string_view rendered_prompt) {
    std::string material;
    material.append(model_id);
    material.push_back('\0');
    material.append(lexicon_version);
    material.push_back('\0');
    material.append(affirm_signature);
    material.push_back('\0');
    material.append(text::sha256_hex(rendered_prompt));
    const auto digest = text::sha256(material);
    CacheKey key{};
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

struct ScoreCache::Impl {
    std::string path;
    std::unique_ptr<std::FILE, FileCloser> data;
    std::vector<std::pair<CacheKey, std::uint64_t>> index;  // sorted, from the sidecar
    std::unordered_map<CacheKey, Entry, KeyHash> overlay;   // records not in `index`
    std::uint64_t records = 0;
    std::size_t distinct = 0;
    mutable std::mutex mutex;

    void open(const std::string& p);
    std::uint64_t load_index(std::uint64_t available);
    void scan_tail(std::uint64_t from);
    std::optional<double> read_score(std::uint64_t ordinal) const;
    const std::pair<CacheKey, std::uint64_t>* find_indexed(const CacheKey& key) const;
    void write_index();
};

void ScoreCache::Impl::open(const std::string& p) {
    path = p;
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(path, ec)) {
        if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
            fs::create_directories(parent, ec);
        }
        std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
        if (!f) throw IoError("cannot create cache '" + path + "'");
        std::uint8_t header[kHeaderSize];
        std::memcpy(header, kDataMagic, 8);
        put_u32(header + 8, kFormatVersion);
        put_u32(header + 12, kRecordSize);
        if (std::fwrite(header, 1, kHeaderSize, f.get()) != kHeaderSize) {
            throw IoError("cannot write cache header '" + path + "'");
        }
    }

    const auto size = fs::file_size(path, ec);
    if (ec || size < kHeaderSize) throw IoError("cache '" + path + "' is truncated");
    const std::uint64_t complete = (size - kHeaderSize) / kRecordSize;
    if (kHeaderSize + complete * kRecordSize != size) {
        fs::resize_file(path, kHeaderSize + complete * kRecordSize, ec);
        if (ec) throw IoError("cannot trim torn record from '" + path + "'");
    }

    data.reset(std::fopen(path.c_str(), "r+b"));
    if (!data) throw IoError("cannot open cache '" + path + "'");
    std::uint8_t header[kHeaderSize];
    if (std::fread(header, 1, kHeaderSize, data.get()) != kHeaderSize ||
        std::memcmp(header, kDataMagic, 8) != 0) {
        throw IoError("'" + path + "' is not a score cache");
    }
    if (get_u32(header + 8) != kFormatVersion || get_u32(header + 12) != kRecordSize) {
        throw IoError("cache '" + path + "' has an unsupported format version");
    }
    records = complete;
    const std::uint64_t covered = load_index(records);
    scan_tail(covered);
}

std::uint64_t ScoreCache::Impl::load_index(std::uint64_t available) {
    index.clear();
    const std::string ipath = index_path(path);
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(ipath.c_str(), "rb"));
    if (!f) return 0;
    std::uint8_t header[kIndexHeaderSize];
    if (std::fread(header, 1, kIndexHeaderSize, f.get()) != kIndexHeaderSize ||
        std::memcmp(header, kIndexMagic, 8) != 0 || get_u32(header + 8) != kFormatVersion) {
        return 0;
    }
    const std::uint64_t covered = get_u64(header + 16);
    if (covered > available) return 0;

    std::vector<std::pair<CacheKey, std::uint64_t>> entries;
    std::uint8_t buf[kIndexEntrySize];
    while (std::fread(buf, 1, kIndexEntrySize, f.get()) == kIndexEntrySize) {
        std::pair<CacheKey, std::uint64_t> e;
        std::memcpy(e.first.data(), buf, 32);
        e.second = get_u64(buf + 32);
        if (e.second >= covered) return 0;
        entries.push_back(e);
    }
    if (!std::is_sorted(entries.begin(), entries.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
        return 0;
    }
    index = std::move(entries);
    distinct = index.size();
    return covered;
}

void ScoreCache::Impl::scan_tail(std::uint64_t from) {
    if (from >= records) return;
    if (std::fseek(data.get(), static_cast<long>(kHeaderSize + from * kRecordSize), SEEK_SET) != 0) {
        throw IoError("cannot seek in cache '" + path + "'");
    }
    std::uint8_t buf[kRecordSize];
    for (std::uint64_t ord = from; ord < records; ++ord) {
        if (std::fread(buf, 1, kRecordSize, data.get()) != kRecordSize) {
            throw IoError("cannot read cache '" + path + "'");
        }
        CacheKey key;
        std::memcpy(key.data(), buf, 32);
        const double score = std::bit_cast<double>(get_u64(buf + 32));
        const bool fresh = find_indexed(key) == nullptr && !overlay.contains(key);
        overlay[key] = Entry{ord, score};
        if (fresh) ++distinct;
    }
}

const std::pair<CacheKey, std::uint64_t>* ScoreCache::Impl::find_indexed(const CacheKey& key) const {
    const auto it = std::lower_bound(index.begin(), index.end(), key,
                                     [](const auto& e, const CacheKey& k) { return e.first < k; });
    if (it == index.end() || it->first != key) return nullptr;
    return &*it;
}

std::optional<double> ScoreCache::Impl::read_score(std::uint64_t ordinal) const {
    std::uint8_t buf[8];
    const long offset = static_cast<long>(kHeaderSize + ordinal * kRecordSize + 32);
    if (std::fseek(data.get(), offset, SEEK_SET) != 0 || std::fread(buf, 1, 8, data.get()) != 8) {
        throw IoError("cannot read cache '" + path + "'");
    }
    return std::bit_cast<double>(get_u64(buf));
}

void ScoreCache::Impl::write_index() {
    std::vector<std::pair<CacheKey, std::uint64_t>> merged;
    merged.reserve(index.size() + overlay.size());
    for (const auto& e : index) {
        if (!overlay.contains(e.first)) merged.push_back(e);
    }
    for (const auto& [key, entry] : overlay) merged.emplace_back(key, entry.ordinal);
    std::sort(merged.begin(), merged.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::string ipath = index_path(path);
    const std::string tmp = ipath + ".tmp";
    {
        std::unique_ptr<std::FILE, FileCloser> f(std::fopen(tmp.c_str(), "wb"));
        if (!f) throw IoError("cannot write cache index '" + tmp + "'");
        std::uint8_t header[kIndexHeaderSize];
        std::memcpy(header, kIndexMagic, 8);
        put_u32(header + 8, kFormatVersion);
        put_u32(header + 12, 0);
        put_u64(header + 16, records);
        bool ok = std::fwrite(header, 1, kIndexHeaderSize, f.get()) == kIndexHeaderSize;
        std::uint8_t buf[kIndexEntrySize];
        for (const auto& [key, ord] : merged) {
            std::memcpy(buf, key.data(), 32);
            put_u64(buf + 32, ord);
            ok = ok && std::fwrite(buf, 1, kIndexEntrySize, f.get()) == kIndexEntrySize;
        }
        ok = ok && std::fflush(f.get()) == 0;
        if (!ok) throw IoError("cannot write cache index '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, ipath, ec);
    if (ec) throw IoError("cannot replace cache index '" + ipath + "'");
}

ScoreCache::ScoreCache() : impl_(std::make_unique<Impl>()) {}

ScoreCache::ScoreCache(const std::string& path) : impl_(std::make_unique<Impl>()) {
    impl_->open(path);
}

ScoreCache::~ScoreCache() {
    if (impl_ && impl_->data) {
        try {
            flush();
        } catch (...) {
        }
    }
}

ScoreCache::ScoreCache(ScoreCache&&) noexcept = default;
ScoreCache& ScoreCache::operator=(ScoreCache&&) noexcept = default;

std::optional<double> ScoreCache::get(const CacheKey& key) const {
    std::lock_guard lock(impl_->mutex);
    if (const auto it = impl_->overlay.find(key); it != impl_->overlay.end()) return it->second.score;
    if (const auto* e = impl_->find_indexed(key)) return impl_->read_score(e->second);
    return std::nullopt;
}

void ScoreCache::put(const CacheKey& key, double score) {
    std::lock_guard lock(impl_->mutex);
    const bool fresh = impl_->find_indexed(key) == nullptr && !impl_->overlay.contains(key);
    std::uint64_t ordinal = impl_->records;
    if (impl_->data) {
        std::uint8_t buf[kRecordSize];
        std::memcpy(buf, key.data(), 32);
        put_u64(buf + 32, std::bit_cast<std::uint64_t>(score));
        if (std::fseek(impl_->data.get(), 0, SEEK_END) != 0 ||
            std::fwrite(buf, 1, kRecordSize, impl_->data.get()) != kRecordSize) {
            throw IoError("cannot append to cache '" + impl_->path + "'");
        }
    }
    ++impl_->records;
    impl_->overlay[key] = Entry{ordinal, score};
    if (fresh) ++impl_->distinct;
}

void ScoreCache::flush() {
    std::lock_guard lock(impl_->mutex);
    if (!impl_->data) return;
    if (std::fflush(impl_->data.get()) != 0) throw IoError("cannot flush cache '" + impl_->path + "'");
    impl_->write_index();
}

std::size_t ScoreCache::size() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->distinct;
}

std::size_t ScoreCache::record_count() const {
    std::lock_guard lock(impl_->mutex);
    return static_cast<std::size_t>(impl_->records);
}

bool ScoreCache::persistent() const { return impl_->data != nullptr; }

}  // namespace scbm
