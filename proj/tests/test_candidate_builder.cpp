#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <random>

#include "test_support.hpp"

using namespace envmend;

namespace {

std::vector<std::string> series_of(const std::vector<InterpreterVersion>& vs) {
    std::vector<std::string> out;
    for (const auto& v : vs) out.push_back(v.series);
    return out;
}

/// Independent enumerator: walk every supported series and keep the ones
/// within `radius` 3.x steps of the anchor, plus 2.7.
std::vector<std::string> oracle_expand(const std::string& predicted, int range) {
    const std::vector<std::string> py3 = {"3.4", "3.5", "3.6", "3.7", "3.8",
                                          "3.9", "3.10", "3.11", "3.12"};
    std::set<std::pair<int, int>> keep = {{2, 7}};
    std::string anchor = predicted == "2.7" ? "3.4" : predicted;
    int radius = predicted == "2.7" ? range - 1 : range;
    if (radius >= 0) {
        auto it = std::find(py3.begin(), py3.end(), anchor);
        int ci = static_cast<int>(it - py3.begin());
        for (int i = 0; i < static_cast<int>(py3.size()); ++i)
            if (std::abs(i - ci) <= radius)
                keep.insert({3, std::stoi(py3[static_cast<size_t>(i)].substr(2))});
    }
    std::vector<std::string> out;
    for (auto [maj, min] : keep) out.push_back(std::to_string(maj) + "." + std::to_string(min));
    return out;
}

int64_t mid_2019() { return detail::utc_timestamp(2019, 6, 1); }

nlohmann::json doc_for(const std::vector<std::string>& versions) {
    nlohmann::json releases = nlohmann::json::object();
    int month = 1;
    for (const auto& v : versions) {
        releases[v] = nlohmann::json::array(
            {{{"upload_time_iso_8601",
               "2018-" + std::string(month < 10 ? "0" : "") + std::to_string(month) + "-01T00:00:00Z"},
              {"yanked", false}}});
        ++month;
    }
    return {{"info", {{"name", "x"}}}, {"releases", releases}};
}

struct BuilderRig {
    DeterministicStubBackend backend;
    Gateway gateway{backend};
    MemoryRegistrySource source;
    RegistryRetriever retriever{source};
    CandidateBuilder builder{gateway, retriever, testsup::name_mapping(),
                             BuilderOptions{"testmodel", 0.7, {}, mid_2019()}};
};

struct QueueBackend : TextBackend {
    explicit QueueBackend(std::vector<std::string> replies) : replies(std::move(replies)) {}
    std::string generate(const GenerationRequest&) override {
        size_t i = std::min(cursor++, replies.size() - 1);
        return replies[i];
    }
    std::vector<std::string> replies;
    size_t cursor = 0;
};

}  // namespace

TEST_CASE("interpreter expansion matches the documented examples", "[builder]") {
    CHECK(series_of(expand_interpreters(InterpreterVersion{"3.5"}, 2)) ==
          std::vector<std::string>{"2.7", "3.4", "3.5", "3.6", "3.7"});
    CHECK(series_of(expand_interpreters(InterpreterVersion{"3.5"}, 0)) ==
          std::vector<std::string>{"2.7", "3.5"});
    CHECK(series_of(expand_interpreters(InterpreterVersion{"3.4"}, 1)) ==
          std::vector<std::string>{"2.7", "3.4", "3.5"});
    CHECK(series_of(expand_interpreters(InterpreterVersion{"3.12"}, 2)) ==
          std::vector<std::string>{"2.7", "3.10", "3.11", "3.12"});
    CHECK(series_of(expand_interpreters(InterpreterVersion{"2.7"}, 0)) ==
          std::vector<std::string>{"2.7"});
    CHECK(series_of(expand_interpreters(InterpreterVersion{"2.7"}, 2)) ==
          std::vector<std::string>{"2.7", "3.4", "3.5"});
    CHECK_THROWS_AS(expand_interpreters(InterpreterVersion{"9.9"}, 1), UnsupportedInterpreterError);
    CHECK_THROWS_AS(expand_interpreters(InterpreterVersion{"3.6"}, 4), Error);
}

TEST_CASE("interpreter expansion agrees with a brute-force enumerator", "[builder][property]") {
    std::mt19937 rng(7);
    const auto& supported = InterpreterVersion::supported();
    for (int round = 0; round < 200; ++round) {
        std::string predicted = supported[rng() % supported.size()];
        int range = static_cast<int>(rng() % 4);
        auto got = series_of(expand_interpreters(InterpreterVersion{predicted}, range));
        CHECK(got == oracle_expand(predicted, range));
        // shape invariants
        CHECK(got.size() <= static_cast<size_t>(2 * range + 2));
        CHECK(std::find(got.begin(), got.end(), predicted) != got.end());
        CHECK(std::find(got.begin(), got.end(), "2.7") != got.end());
        CHECK(std::set<std::string>(got.begin(), got.end()).size() == got.size());
    }
}

TEST_CASE("pin_versions pins every requirement from the catalogs", "[builder]") {
    BuilderRig rig;
    rig.source.put("keras", doc_for({"2.0.8", "2.0.9", "2.1.5"}));
    rig.source.put("tensorflow", doc_for({"2.2.0", "2.4.4", "2.5.0"}));

    AttemptHistory history;
    auto candidate = rig.builder.pin_versions(
        {ModuleRequirement{"keras", "keras", {}}, ModuleRequirement{"tensorflow", "tensorflow", {}}},
        InterpreterVersion{"3.6"}, history, /*rag=*/true);

    // the schedule picks the median of each three-version catalog
    CHECK(candidate.canonical_key() == "3.6|keras==2.0.9;tensorflow==2.4.4");
}

TEST_CASE("pin_versions with no requirements yields an interpreter-only candidate", "[builder]") {
    BuilderRig rig;
    AttemptHistory history;
    auto candidate = rig.builder.pin_versions({}, InterpreterVersion{"3.6"}, history, true);
    CHECK(candidate.pins.empty());
    CHECK(candidate.canonical_key() == "3.6|");
}

TEST_CASE("pin_versions avoids keys already in the history", "[builder]") {
    // a bare-mode backend that would regenerate the same candidate
    QueueBackend backend({R"({"version": "1.0"})", R"({"version": "1.0"})", R"({"version": "2.0"})"});
    Gateway gateway(backend);
    MemoryRegistrySource source;
    RegistryRetriever retriever(source);
    CandidateBuilder builder(gateway, retriever, NameMapping{});

    AttemptHistory history;
    history.record_candidate(EnvironmentCandidate::make(
        InterpreterVersion{"3.6"}, {ModuleRequirement{"m", "m", std::string("1.0")}}));

    auto candidate = builder.pin_versions({ModuleRequirement{"m", "m", {}}},
                                          InterpreterVersion{"3.6"}, history, /*rag=*/false);
    CHECK(candidate.canonical_key() == "3.6|m==2.0");
    CHECK_FALSE(history.contains(candidate.canonical_key()));
}

TEST_CASE("vary adds the module a ModuleNotFound names", "[builder]") {
    BuilderRig rig;
    rig.source.put("keras", doc_for({"2.0.9"}));
    rig.source.put("tensorflow", doc_for({"2.2.0", "2.4.4", "2.5.0"}));

    auto prev = EnvironmentCandidate::make(InterpreterVersion{"3.6"},
                                           {ModuleRequirement{"keras", "keras", std::string("2.0.9")}});
    AttemptHistory history;
    history.record_candidate(prev);

    TriageReport triage;
    triage.primary_class = ErrorClass::ModuleNotFound;
    triage.payload["module"] = "tensorflow";

    auto next = rig.builder.vary_after_failure(prev, triage, history, true);
    REQUIRE(next.pins.size() == 2);
    CHECK(next.find_pin("keras")->version == "2.0.9");  // untouched
    CHECK(next.find_pin("tensorflow") != nullptr);
    CHECK(next.interpreter.series == "3.6");
}

TEST_CASE("vary maps import names when adding a module", "[builder]") {
    BuilderRig rig;
    rig.source.put("scikit-learn", doc_for({"0.19.2", "0.20.4", "0.24.2"}));
    auto prev = EnvironmentCandidate::make(InterpreterVersion{"3.6"}, {});
    AttemptHistory history;
    history.record_candidate(prev);

    TriageReport triage;
    triage.primary_class = ErrorClass::ModuleNotFound;
    triage.payload["module"] = "sklearn";

    auto next = rig.builder.vary_after_failure(prev, triage, history, true);
    REQUIRE(next.pins.size() == 1);
    CHECK(next.pins[0].install_name == "scikit-learn");
    CHECK(next.pins[0].import_name == "sklearn");
}

TEST_CASE("vary re-pins away from a version the installer rejected", "[builder]") {
    BuilderRig rig;
    rig.source.put("numpy", doc_for({"1.16.0", "1.18.5", "1.19.5"}));

    auto prev = EnvironmentCandidate::make(InterpreterVersion{"3.6"},
                                           {ModuleRequirement{"numpy", "numpy", std::string("9.9.9")}});
    AttemptHistory history;
    history.record_candidate(prev);

    TriageReport triage;
    triage.primary_class = ErrorClass::VersionNotFound;
    triage.payload["module"] = "numpy";
    triage.payload["requested_version"] = "9.9.9";

    auto next = rig.builder.vary_after_failure(prev, triage, history, true);
    REQUIRE(next.pins.size() == 1);
    CHECK(*next.pins[0].version != "9.9.9");
    CHECK_FALSE(history.contains(next.canonical_key()));
}

TEST_CASE("vary re-pins only the first module a conflict names", "[builder]") {
    BuilderRig rig;
    rig.source.put("keras", doc_for({"2.0.8", "2.0.9", "2.4.0"}));
    rig.source.put("tensorflow", doc_for({"2.2.0", "2.4.4"}));

    auto prev = EnvironmentCandidate::make(
        InterpreterVersion{"3.6"}, {ModuleRequirement{"keras", "keras", std::string("2.0.9")},
                                    ModuleRequirement{"tensorflow", "tensorflow", std::string("2.4.4")}});
    AttemptHistory history;
    history.record_candidate(prev);

    TriageReport triage;
    triage.primary_class = ErrorClass::DependencyConflict;
    triage.payload["conflicting_modules"] = "keras,tensorflow";

    auto next = rig.builder.vary_after_failure(prev, triage, history, true);
    CHECK(*next.find_pin("tensorflow")->version == "2.4.4");  // unchanged
    CHECK(*next.find_pin("keras")->version != "2.0.9");
}

TEST_CASE("vary on SyntaxError moves to another interpreter, pins intact", "[builder]") {
    BuilderRig rig;
    auto prev = EnvironmentCandidate::make(InterpreterVersion{"3.6"},
                                           {ModuleRequirement{"m", "m", std::string("1.0")}});
    AttemptHistory history;
    history.record_candidate(prev);

    TriageReport triage;
    triage.primary_class = ErrorClass::SyntaxError;

    auto next = rig.builder.vary_after_failure(prev, triage, history, true);
    CHECK(next.interpreter.series != "3.6");
    REQUIRE(next.pins.size() == 1);
    CHECK(*next.pins[0].version == "1.0");
}

TEST_CASE("vary exhausts gracefully when no edit remains", "[builder]") {
    BuilderRig rig;
    rig.source.put("m", doc_for({"1.0"}));
    auto prev = EnvironmentCandidate::make(InterpreterVersion{"3.6"},
                                           {ModuleRequirement{"m", "m", std::string("1.0")}});
    AttemptHistory history;
    history.record_candidate(prev);

    TriageReport triage;
    triage.primary_class = ErrorClass::NonZeroCode;
    triage.payload["exit_code"] = "1";

    CHECK_THROWS_AS(rig.builder.vary_after_failure(prev, triage, history, true),
                    CandidateSpaceExhaustedError);
}

TEST_CASE("vary changes exactly one thing per edit", "[builder][property]") {
    std::mt19937 rng(2024);
    BuilderRig rig;
    rig.source.put("alpha", doc_for({"1.0", "1.1", "1.2", "1.3", "1.4", "1.5", "1.6"}));
    rig.source.put("beta", doc_for({"2.0", "2.1", "2.2", "2.3", "2.4", "2.5", "2.6"}));
    rig.source.put("gamma", doc_for({"3.0", "3.1", "3.2", "3.3", "3.4", "3.5", "3.6"}));

    AttemptHistory history;
    auto candidate = rig.builder.pin_versions(
        {ModuleRequirement{"alpha", "alpha", {}}, ModuleRequirement{"beta", "beta", {}}},
        InterpreterVersion{"3.6"}, history, true);
    history.record_candidate(candidate);

    std::set<std::string> keys_seen = {candidate.canonical_key()};
    for (int step = 0; step < 10; ++step) {
        TriageReport triage;
        switch (rng() % 4) {
            case 0:
                triage.primary_class = ErrorClass::ImportError;
                triage.payload["module"] = rng() % 2 ? "alpha" : "beta";
                break;
            case 1:
                triage.primary_class = ErrorClass::ModuleNotFound;
                triage.payload["module"] = "gamma";
                break;
            case 2:
                triage.primary_class = ErrorClass::AttributeError;
                triage.payload["module"] = "beta";
                triage.payload["attribute"] = "thing";
                break;
            default:
                triage.primary_class = ErrorClass::NonZeroCode;
                triage.payload["exit_code"] = "1";
                break;
        }
        EnvironmentCandidate next;
        try {
            next = rig.builder.vary_after_failure(candidate, triage, history, true);
        } catch (const CandidateSpaceExhaustedError&) {
            break;
        }

        // exactly one of {module set, one pin, interpreter} changed
        int changes = 0;
        if (next.interpreter.series != candidate.interpreter.series) ++changes;
        if (next.pins.size() != candidate.pins.size()) {
            ++changes;
            CHECK(next.pins.size() == candidate.pins.size() + 1);
        } else {
            int pin_changes = 0;
            for (const auto& pin : next.pins) {
                const auto* old = candidate.find_pin(pin.install_name);
                REQUIRE(old != nullptr);
                if (*old->version != *pin.version) ++pin_changes;
            }
            changes += pin_changes;
        }
        CHECK(changes == 1);

        // keys never repeat
        CHECK(keys_seen.insert(next.canonical_key()).second);
        history.record_candidate(next);
        candidate = next;
    }
}

TEST_CASE("candidates reject duplicate and unpinned modules", "[builder]") {
    CHECK_THROWS_AS(EnvironmentCandidate::make(
                        InterpreterVersion{"3.6"},
                        {ModuleRequirement{"m", "m", std::string("1.0")},
                         ModuleRequirement{"m", "m", std::string("2.0")}}),
                    Error);
    CHECK_THROWS_AS(
        EnvironmentCandidate::make(InterpreterVersion{"3.6"}, {ModuleRequirement{"m", "m", {}}}),
        Error);
}

TEST_CASE("canonical keys follow the documented layout", "[builder]") {
    auto cand = EnvironmentCandidate::make(
        InterpreterVersion{"3.6"},
        {ModuleRequirement{"tensorflow", "tensorflow", std::string("2.4.4")},
         ModuleRequirement{"keras", "keras", std::string("2.0.9")}});
    CHECK(cand.canonical_key() == "3.6|keras==2.0.9;tensorflow==2.4.4");
    CHECK(EnvironmentCandidate::make(InterpreterVersion{"2.7"}, {}).canonical_key() == "2.7|");
}
