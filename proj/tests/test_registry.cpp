#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <thread>
#include <atomic>

#include "test_support.hpp"

using namespace envmend;

namespace {

nlohmann::json release_doc(const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
    // rows: (version, iso date or "", requires or "")
    nlohmann::json releases = nlohmann::json::object();
    for (const auto& [version, date, needs] : rows) {
        nlohmann::json file = {{"yanked", false}};
        if (!date.empty()) file["upload_time_iso_8601"] = date + "T00:00:00Z";
        if (!needs.empty()) file["requires_python"] = needs;
        releases[version] = nlohmann::json::array({file});
    }
    return {{"info", {{"name", "pkg"}}}, {"releases", releases}};
}

int64_t ts(int y, int m, int d) { return detail::utc_timestamp(y, m, d); }

}  // namespace

TEST_CASE("fetch_catalog sorts shuffled input ascending", "[registry]") {
    // deliberately shuffled dates; the brute-force oracle is an insertion of
    // (date, version) pairs
    std::vector<std::tuple<std::string, std::string, std::string>> rows = {
        {"2.0", "2019-05-01", ""}, {"1.0", "2017-01-01", ""}, {"1.5", "2018-03-03", ""},
        {"3.0", "2021-07-20", ""}, {"2.5", "2020-02-10", ""},
    };
    MemoryRegistrySource source;
    source.put("pkg", release_doc(rows));
    RegistryRetriever retriever(source);
    auto catalog = retriever.fetch_catalog("pkg");

    std::vector<std::pair<int64_t, std::string>> oracle;
    for (const auto& [v, d, r] : rows) {
        (void)r;
        int y, m, day;
        std::sscanf(d.c_str(), "%d-%d-%d", &y, &m, &day);
        oracle.emplace_back(ts(y, m, day), v);
    }
    std::sort(oracle.begin(), oracle.end());
    REQUIRE(catalog.releases.size() == oracle.size());
    for (size_t i = 0; i < oracle.size(); ++i)
        CHECK(catalog.releases[i].version == oracle[i].second);
}

TEST_CASE("fetch_catalog falls back to version order when dates are missing", "[registry]") {
    MemoryRegistrySource source;
    source.put("pkg", release_doc({{"2.0", "", ""}, {"10.0", "", ""}, {"1.0rc1", "", ""},
                                   {"1.0", "2020-01-01", ""}}));
    RegistryRetriever retriever(source);
    auto versions = retriever.fetch_catalog("pkg").version_strings();
    CHECK(versions == std::vector<std::string>{"1.0rc1", "1.0", "2.0", "10.0"});
}

TEST_CASE("fetch_catalog rejects unknown packages and bad names", "[registry]") {
    MemoryRegistrySource source;
    RegistryRetriever retriever(source);
    CHECK_THROWS_AS(retriever.fetch_catalog("thispackagedoesnotexist-xyz"), UnknownPackageError);
    CHECK_THROWS_AS(retriever.fetch_catalog("not a package!"), UnknownPackageError);
}

TEST_CASE("fixture registry source reads per-package documents", "[registry]") {
    FixtureRegistrySource source(testsup::fixtures_dir() / "worlds" / "listing" / "registry");
    RegistryRetriever retriever(source);
    auto catalog = retriever.fetch_catalog("keras");
    REQUIRE(catalog.releases.size() == 4);
    CHECK(catalog.releases.front().version == "1.0.0");
    CHECK(catalog.releases.back().version == "2.1.5");
    CHECK_THROWS_AS(retriever.fetch_catalog("nosuchpackage"), UnknownPackageError);
}

TEST_CASE("disk cache yields equal catalogs with a single registry request", "[registry]") {
    auto cache_dir = std::filesystem::temp_directory_path() /
                     ("envmend-cache-test-" + std::to_string(::getpid()));
    std::filesystem::remove_all(cache_dir);

    MemoryRegistrySource source;
    source.put("pkg", release_doc({{"1.0", "2020-01-01", ""}, {"1.1", "2020-06-01", ""}}));

    int64_t fake_now = 1'700'000'000;
    RetrieverOptions options;
    options.cache_dir = cache_dir;
    options.now = [&fake_now] { return fake_now; };

    {
        RegistryRetriever retriever(source, options);
        auto first = retriever.fetch_catalog("pkg");
        auto second = retriever.fetch_catalog("pkg");
        CHECK(first.version_strings() == second.version_strings());
        CHECK(source.fetch_count() == 1);
    }
    {
        // a fresh retriever still hits the disk entry
        RegistryRetriever retriever(source, options);
        retriever.fetch_catalog("pkg");
        CHECK(source.fetch_count() == 1);

        // expiring the TTL forces one new request
        fake_now += 24 * 3600 + 1;
        retriever.fetch_catalog("pkg");
        CHECK(source.fetch_count() == 2);
    }
    std::filesystem::remove_all(cache_dir);
}

TEST_CASE("filter keeps in-window, supported, non-yanked releases", "[registry]") {
    MemoryRegistrySource source;
    source.put("pkg", release_doc({{"0.5", "2015-06-01", ""},
                                   {"1.0", "2018-04-01", ""},
                                   {"2.0", "2023-01-01", ""}}));
    RegistryRetriever retriever(source);
    auto catalog = retriever.fetch_catalog("pkg");

    InterpreterWindow window{InterpreterVersion{"3.6"}, ts(2016, 12, 23), ts(2021, 12, 23)};
    auto filtered = RegistryRetriever::filter_for_interpreter(catalog, window);
    CHECK(filtered.version_strings() == std::vector<std::string>{"1.0"});
}

TEST_CASE("filter honours the declared interpreter support", "[registry]") {
    MemoryRegistrySource source;
    source.put("pkg", release_doc({{"1.0", "2019-01-01", ">=3.7"}, {"1.1", "2019-02-01", ">=3.5"}}));
    RegistryRetriever retriever(source);
    auto catalog = retriever.fetch_catalog("pkg");
    InterpreterWindow window{InterpreterVersion{"3.6"}, ts(2016, 12, 23), ts(2021, 12, 23)};
    auto filtered = RegistryRetriever::filter_for_interpreter(catalog, window);
    CHECK(filtered.version_strings() == std::vector<std::string>{"1.1"});
}

TEST_CASE("filter falls back to the latest release when nothing survives", "[registry]") {
    MemoryRegistrySource source;
    source.put("pkg", release_doc({{"1.0", "2023-01-01", ""}, {"2.0", "2023-06-01", ""}}));
    RegistryRetriever retriever(source);
    auto catalog = retriever.fetch_catalog("pkg");
    InterpreterWindow window{InterpreterVersion{"3.6"}, ts(2016, 12, 23), ts(2021, 12, 23)};
    auto filtered = RegistryRetriever::filter_for_interpreter(catalog, window);
    CHECK(filtered.version_strings() == std::vector<std::string>{"2.0"});
}

TEST_CASE("filter never returns an empty catalog", "[registry][property]") {
    std::mt19937 rng(99);
    MemoryRegistrySource source;
    RegistryRetriever retriever(source);
    for (int round = 0; round < 50; ++round) {
        std::vector<std::tuple<std::string, std::string, std::string>> rows;
        size_t n = 1 + rng() % 6;
        for (size_t i = 0; i < n; ++i) {
            int year = 2014 + static_cast<int>(rng() % 10);
            rows.emplace_back("0." + std::to_string(i),
                              std::to_string(year) + "-01-01",
                              rng() % 2 ? ">=3." + std::to_string(4 + rng() % 9) : "");
        }
        source.put("pkg" + std::to_string(round), release_doc(rows));
        auto catalog = retriever.fetch_catalog("pkg" + std::to_string(round));
        InterpreterWindow window{InterpreterVersion{"3.6"}, ts(2016, 12, 23), ts(2021, 12, 23)};
        auto filtered = RegistryRetriever::filter_for_interpreter(catalog, window);
        CHECK_FALSE(filtered.releases.empty());
        // subset rule (except the latest-release fallback)
        auto input_versions = catalog.version_strings();
        std::set<std::string> input(input_versions.begin(), input_versions.end());
        for (const auto& v : filtered.version_strings()) CHECK(input.count(v));
    }
}

TEST_CASE("to_prompt_text formats oldest to newest", "[registry]") {
    VersionCatalog catalog{"pkg",
                           {ReleaseRecord{"1.0", {}, {}, false}, ReleaseRecord{"1.1", {}, {}, false},
                            ReleaseRecord{"2.0", {}, {}, false}},
                           0};
    CHECK(RegistryRetriever::to_prompt_text(catalog) == "1.0,1.1,2.0");

    VersionCatalog single{"pkg", {ReleaseRecord{"2.4.4", {}, {}, false}}, 0};
    CHECK(RegistryRetriever::to_prompt_text(single) == "2.4.4");

    VersionCatalog empty{"pkg", {}, 0};
    CHECK_THROWS_AS(RegistryRetriever::to_prompt_text(empty), Error);
}

TEST_CASE("a hundred releases produce ninety-nine commas", "[registry]") {
    VersionCatalog catalog{"pkg", {}, 0};
    for (int i = 0; i < 100; ++i)
        catalog.releases.push_back(ReleaseRecord{"1." + std::to_string(i), {}, {}, false});
    auto text = RegistryRetriever::to_prompt_text(catalog);
    CHECK(std::count(text.begin(), text.end(), ',') == 99);
}

TEST_CASE("prompt text round-trips by splitting on commas", "[registry][property]") {
    std::mt19937 rng(4242);
    for (int round = 0; round < 25; ++round) {
        VersionCatalog catalog{"pkg", {}, 0};
        size_t n = 1 + rng() % 20;
        for (size_t i = 0; i < n; ++i)
            catalog.releases.push_back(
                ReleaseRecord{std::to_string(rng() % 10) + "." + std::to_string(i), {}, {}, false});
        auto parts = detail::split_csv(RegistryRetriever::to_prompt_text(catalog));
        CHECK(parts == catalog.version_strings());
    }
}

TEST_CASE("interpreter windows match the published series dates", "[registry]") {
    auto w36 = window_for(InterpreterVersion{"3.6"}, ts(2026, 1, 1));
    CHECK(w36.window_start == ts(2016, 12, 23));
    CHECK(w36.window_end == ts(2021, 12, 23));

    // a still-supported series clamps at "now"
    auto w312 = window_for(InterpreterVersion{"3.12"}, ts(2026, 1, 1));
    CHECK(w312.window_end == ts(2026, 1, 1));
    CHECK(w312.window_start < w312.window_end);

    CHECK_THROWS_AS(window_for(InterpreterVersion{"1.0"}), UnsupportedInterpreterError);
}

TEST_CASE("yanked releases are dropped by the filter", "[registry]") {
    nlohmann::json doc = {{"info", {{"name", "pkg"}}},
                          {"releases",
                           {{"1.0", nlohmann::json::array({{{"upload_time_iso_8601",
                                                             "2019-01-01T00:00:00Z"},
                                                            {"yanked", true}}})},
                            {"1.1", nlohmann::json::array({{{"upload_time_iso_8601",
                                                             "2019-02-01T00:00:00Z"},
                                                            {"yanked", false}}})}}}};
    MemoryRegistrySource source;
    source.put("pkg", doc);
    RegistryRetriever retriever(source);
    auto catalog = retriever.fetch_catalog("pkg");
    InterpreterWindow window{InterpreterVersion{"3.6"}, ts(2016, 12, 23), ts(2021, 12, 23)};
    auto filtered = RegistryRetriever::filter_for_interpreter(catalog, window);
    CHECK(filtered.version_strings() == std::vector<std::string>{"1.1"});
}

TEST_CASE("concurrent fetches for one package share a single flight", "[registry]") {
    struct SlowSource : RegistrySource {
        nlohmann::json fetch_document(const std::string&) override {
            ++count;
            std::this_thread::sleep_for(std::chrono::milliseconds(80));
            nlohmann::json releases = {{"1.0", nlohmann::json::array(
                {{{"upload_time_iso_8601", "2019-01-01T00:00:00Z"}, {"yanked", false}}})}};
            return {{"info", {{"name", "pkg"}}}, {"releases", releases}};
        }
        std::atomic<int> count{0};
    } source;

    RegistryRetriever retriever(source);  // no disk cache
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 6; ++t)
        threads.emplace_back([&] {
            auto catalog = retriever.fetch_catalog("pkg");
            if (catalog.releases.size() == 1) ++ok;
        });
    for (auto& t : threads) t.join();
    CHECK(ok == 6);
    CHECK(source.count == 1);
}
