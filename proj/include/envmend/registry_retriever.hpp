// envmend/registry_retriever.hpp - package release metadata retrieval
//
// Fetches a package's release history (live registry endpoint or an offline
// fixture directory with the same document shape), caches it on disk, filters
// it down to versions plausible for a target interpreter series, and formats
// the survivors as the comma-separated list used for prompting.
//
// Release ordering: ascending by upload timestamp when every release carries
// one, otherwise by package-version comparison (pre-releases before finals).
#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "envmend/core_types.hpp"
#include "envmend/errors.hpp"
#include "envmend/version.hpp"

#include "json.hpp"

namespace envmend {

// ---------------------------------------------------------------------------
// Release records
// ---------------------------------------------------------------------------

struct ReleaseRecord {
    std::string version;
    std::optional<int64_t> released_at;            // unix seconds, UTC
    std::optional<std::string> requires_interpreter;  // requires-python specifier text
    bool yanked = false;
};

struct VersionCatalog {
    std::string install_name;
    std::vector<ReleaseRecord> releases;  // ascending, no duplicate version strings
    int64_t fetched_at = 0;

    std::vector<std::string> version_strings() const {
        std::vector<std::string> out;
        out.reserve(releases.size());
        for (const auto& r : releases) out.push_back(r.version);
        return out;
    }
};

/// The time span during which an interpreter series was current.
struct InterpreterWindow {
    InterpreterVersion interpreter;
    int64_t window_start = 0;
    int64_t window_end = 0;
};

namespace detail {

inline int64_t utc_timestamp(int year, int month, int day, int hour = 0, int min = 0, int sec = 0) {
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    return static_cast<int64_t>(timegm(&tm));
}

/// Parses "2021-01-30T12:34:56[.ffffff][Z]" or a bare date.
inline std::optional<int64_t> parse_iso8601(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 3 ||
        std::sscanf(text.c_str(), "%d-%d-%d", &y, &mo, &d) == 3) {
        if (y < 1970 || mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
        return utc_timestamp(y, mo, d, h, mi, s);
    }
    return std::nullopt;
}

/// Registry-style name normalization: lowercase, runs of -_. become one dash.
inline std::string normalize_package_name(const std::string& name) {
    std::string out;
    bool dash = false;
    for (char c : name) {
        if (c == '-' || c == '_' || c == '.') {
            dash = true;
            continue;
        }
        if (dash && !out.empty()) out += '-';
        dash = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

inline bool valid_package_name(const std::string& name) {
    if (name.empty()) return false;
    auto ok_edge = [](char c) { return std::isalnum(static_cast<unsigned char>(c)); };
    if (!ok_edge(name.front()) || !ok_edge(name.back())) return false;
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
            return false;
    return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Interpreter release windows
// ---------------------------------------------------------------------------

/// First-release and end-of-support dates per supported series. The window
/// end is clamped to `now` for series still in support.
inline InterpreterWindow window_for(const InterpreterVersion& interp,
                                    std::optional<int64_t> now = std::nullopt) {
    using detail::utc_timestamp;
    struct Row {
        const char* series;
        int64_t start, eol;
    };
    static const Row rows[] = {
        {"2.7", utc_timestamp(2010, 7, 3), utc_timestamp(2020, 1, 1)},
        {"3.4", utc_timestamp(2014, 3, 16), utc_timestamp(2019, 3, 18)},
        {"3.5", utc_timestamp(2015, 9, 13), utc_timestamp(2020, 9, 30)},
        {"3.6", utc_timestamp(2016, 12, 23), utc_timestamp(2021, 12, 23)},
        {"3.7", utc_timestamp(2018, 6, 27), utc_timestamp(2023, 6, 27)},
        {"3.8", utc_timestamp(2019, 10, 14), utc_timestamp(2024, 10, 7)},
        {"3.9", utc_timestamp(2020, 10, 5), utc_timestamp(2025, 10, 31)},
        {"3.10", utc_timestamp(2021, 10, 4), utc_timestamp(2026, 10, 31)},
        {"3.11", utc_timestamp(2022, 10, 24), utc_timestamp(2027, 10, 31)},
        {"3.12", utc_timestamp(2023, 10, 2), utc_timestamp(2028, 10, 31)},
    };
    int64_t now_ts = now.value_or(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
    for (const Row& r : rows) {
        if (interp.series == r.series) {
            int64_t end = std::min(r.eol, now_ts);
            if (end <= r.start) end = r.eol;  // clock earlier than the series itself
            return InterpreterWindow{interp, r.start, end};
        }
    }
    throw UnsupportedInterpreterError(interp.series);
}

// ---------------------------------------------------------------------------
// Registry sources
// ---------------------------------------------------------------------------

class RegistrySource {
public:
    virtual ~RegistrySource() = default;
    /// Full metadata document for a package (the /pypi/<name>/json shape).
    virtual nlohmann::json fetch_document(const std::string& install_name) = 0;
};

/// Serves documents from an in-memory map (generated scenarios, tests).
class MemoryRegistrySource : public RegistrySource {
public:
    MemoryRegistrySource() = default;
    explicit MemoryRegistrySource(std::map<std::string, nlohmann::json> docs)
        : docs_(std::move(docs)) {}

    void put(const std::string& install_name, nlohmann::json doc) {
        docs_[detail::normalize_package_name(install_name)] = std::move(doc);
    }

    nlohmann::json fetch_document(const std::string& install_name) override {
        ++fetch_count_;
        auto it = docs_.find(detail::normalize_package_name(install_name));
        if (it == docs_.end()) throw UnknownPackageError(install_name);
        return it->second;
    }

    int fetch_count() const { return fetch_count_; }

private:
    std::map<std::string, nlohmann::json> docs_;
    int fetch_count_ = 0;
};

/// Reads per-package documents from a directory: <normalized-name>.json.
class FixtureRegistrySource : public RegistrySource {
public:
    explicit FixtureRegistrySource(std::filesystem::path dir) : dir_(std::move(dir)) {}

    nlohmann::json fetch_document(const std::string& install_name) override {
        auto path = dir_ / (detail::normalize_package_name(install_name) + ".json");
        std::ifstream in(path);
        if (!in) throw UnknownPackageError(install_name);
        auto doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded())
            throw RegistryUnavailableError("unreadable fixture document: " + path.string());
        return doc;
    }

private:
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Retriever
// ---------------------------------------------------------------------------

struct RetrieverOptions {
    std::optional<std::filesystem::path> cache_dir;  // unset disables the disk cache
    int64_t cache_ttl_seconds = 24 * 3600;
    std::function<int64_t()> now = [] {
        return std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
};

class RegistryRetriever {
public:
    RegistryRetriever(RegistrySource& source, RetrieverOptions options = {})
        : source_(&source), options_(std::move(options)) {}

    /// Full release history, oldest to newest. Cache first, then one registry
    /// request; concurrent fetches for the same name share a single flight.
    VersionCatalog fetch_catalog(const std::string& install_name) {
        if (!detail::valid_package_name(install_name)) throw UnknownPackageError(install_name);
        std::string norm = detail::normalize_package_name(install_name);

        if (auto cached = cache_load(norm)) return parse_document(install_name, cached->first, cached->second);

        std::promise<nlohmann::json> my_promise;
        std::shared_future<nlohmann::json> flight;
        bool leader = false;
        {
            std::lock_guard<std::mutex> lock(inflight_mutex_);
            auto it = inflight_.find(norm);
            if (it == inflight_.end()) {
                flight = my_promise.get_future().share();
                inflight_.emplace(norm, flight);
                leader = true;
            } else {
                flight = it->second;
            }
        }
        if (leader) {
            try {
                nlohmann::json doc = source_->fetch_document(install_name);
                cache_store(norm, doc);
                my_promise.set_value(std::move(doc));
            } catch (...) {
                my_promise.set_exception(std::current_exception());
            }
            std::lock_guard<std::mutex> lock(inflight_mutex_);
            inflight_.erase(norm);
        }
        return parse_document(install_name, options_.now(), flight.get());
    }

    /// Keeps releases inside the window that declare support for (or are
    /// silent about) the interpreter, dropping yanked ones. An empty result
    /// falls back to a one-release catalog holding the latest release.
    static VersionCatalog filter_for_interpreter(const VersionCatalog& catalog,
                                                 const InterpreterWindow& window) {
        VersionCatalog out{catalog.install_name, {}, catalog.fetched_at};
        for (const auto& r : catalog.releases) {
            if (r.yanked) continue;
            if (r.released_at &&
                (*r.released_at < window.window_start || *r.released_at > window.window_end))
                continue;
            if (r.requires_interpreter &&
                !series_satisfies(window.interpreter.series,
                                  Specifier::parse(*r.requires_interpreter)))
                continue;
            out.releases.push_back(r);
        }
        if (out.releases.empty() && !catalog.releases.empty()) {
            // latest non-yanked release, or the latest outright if all are yanked
            for (auto it = catalog.releases.rbegin(); it != catalog.releases.rend(); ++it) {
                if (!it->yanked) {
                    out.releases.push_back(*it);
                    break;
                }
            }
            if (out.releases.empty()) out.releases.push_back(catalog.releases.back());
        }
        return out;
    }

    /// Comma-separated version list, oldest to newest, no whitespace.
    static std::string to_prompt_text(const VersionCatalog& catalog) {
        if (catalog.releases.empty()) throw Error("cannot format an empty catalog");
        return join(catalog.version_strings(), ",");
    }

    /// Orders releases ascending and drops duplicate version strings.
    /// Exposed for fixture tooling; fetch_catalog applies it already.
    static void sort_releases(std::vector<ReleaseRecord>& releases) {
        bool all_dated = !releases.empty();
        for (const auto& r : releases)
            if (!r.released_at) all_dated = false;
        std::set<std::string> seen;
        std::vector<ReleaseRecord> dedup;
        for (auto& r : releases)
            if (seen.insert(r.version).second) dedup.push_back(std::move(r));
        releases = std::move(dedup);
        std::stable_sort(releases.begin(), releases.end(),
                         [all_dated](const ReleaseRecord& a, const ReleaseRecord& b) {
                             if (all_dated && *a.released_at != *b.released_at)
                                 return *a.released_at < *b.released_at;
                             return Version::parse(a.version) < Version::parse(b.version);
                         });
    }

private:
    VersionCatalog parse_document(const std::string& install_name, int64_t fetched_at,
                                  const nlohmann::json& doc) const {
        VersionCatalog catalog{install_name, {}, fetched_at};
        if (!doc.contains("releases") || !doc["releases"].is_object())
            throw RegistryUnavailableError("metadata document has no releases object: " + install_name);
        for (const auto& [version, files] : doc["releases"].items()) {
            ReleaseRecord rec{version, std::nullopt, std::nullopt, false};
            if (files.is_array() && !files.empty()) {
                bool all_yanked = true;
                for (const auto& f : files) {
                    if (!f.is_object()) continue;
                    if (!f.value("yanked", false)) all_yanked = false;
                    if (!rec.released_at) {
                        for (const char* key : {"upload_time_iso_8601", "upload_time"}) {
                            if (f.contains(key) && f[key].is_string()) {
                                if (auto ts = detail::parse_iso8601(f[key].get<std::string>())) {
                                    rec.released_at = ts;
                                    break;
                                }
                            }
                        }
                    } else {
                        for (const char* key : {"upload_time_iso_8601", "upload_time"}) {
                            if (f.contains(key) && f[key].is_string()) {
                                if (auto ts = detail::parse_iso8601(f[key].get<std::string>()))
                                    rec.released_at = std::min(*rec.released_at, *ts);
                            }
                        }
                    }
                    if (!rec.requires_interpreter && f.contains("requires_python") &&
                        f["requires_python"].is_string())
                        rec.requires_interpreter = f["requires_python"].get<std::string>();
                }
                rec.yanked = all_yanked;
            }
            catalog.releases.push_back(std::move(rec));
        }
        sort_releases(catalog.releases);
        return catalog;
    }

    std::optional<std::pair<int64_t, nlohmann::json>> cache_load(const std::string& norm) const {
        if (!options_.cache_dir) return std::nullopt;
        std::ifstream in(*options_.cache_dir / (norm + ".json"));
        if (!in) return std::nullopt;
        auto doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.contains("fetched_at") || !doc.contains("document"))
            return std::nullopt;
        int64_t fetched_at = doc["fetched_at"].get<int64_t>();
        if (options_.now() - fetched_at >= options_.cache_ttl_seconds) return std::nullopt;
        return std::make_pair(fetched_at, doc["document"]);
    }

    void cache_store(const std::string& norm, const nlohmann::json& document) const {
        if (!options_.cache_dir) return;
        std::error_code ec;
        std::filesystem::create_directories(*options_.cache_dir, ec);
        nlohmann::json wrapper = {{"fetched_at", options_.now()}, {"document", document}};
        auto final_path = *options_.cache_dir / (norm + ".json");
        auto tmp_path = *options_.cache_dir / (norm + ".json.tmp." + std::to_string(::getpid()));
        {
            std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
            if (!out) return;  // cache is best effort
            out << wrapper.dump();
        }
        std::filesystem::rename(tmp_path, final_path, ec);
        if (ec) std::filesystem::remove(tmp_path, ec);
    }

    RegistrySource* source_;
    RetrieverOptions options_;
    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<nlohmann::json>> inflight_;
};

}  // namespace envmend
