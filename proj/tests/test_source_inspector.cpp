#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace envmend;

namespace {

std::vector<std::string> top_names(const std::vector<ImportMention>& mentions) {
    std::vector<std::string> out;
    for (const auto& m : mentions) out.push_back(m.top_level_name);
    return out;
}

}  // namespace

TEST_CASE("extract_imports finds plain imports", "[inspector]") {
    auto file = SourceFile::from_text("import sklearn\n");
    auto mentions = extract_imports(file);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].top_level_name == "sklearn");
    CHECK(mentions[0].line_number == 1);
    CHECK(mentions[0].raw_statement == "import sklearn");
}

TEST_CASE("extract_imports on an empty file", "[inspector]") {
    CHECK(extract_imports(SourceFile::from_text("")).empty());
}

TEST_CASE("extract_imports dedupes by top-level name and skips comments", "[inspector]") {
    auto file = SourceFile::from_text(
        "import numpy as np\n"
        "from numpy.linalg import svd\n"
        "# import fake\n"
        "x = np.eye(3)\n");
    CHECK(top_names(extract_imports(file)) == std::vector<std::string>{"numpy"});
}

TEST_CASE("extract_imports handles the statement zoo", "[inspector]") {
    auto file = SourceFile::from_text(
        "import a.b.c\n"
        "import d as x, e\n"
        "from f.g import h\n"
        "from . import local\n"
        "from .sibling import thing\n"
        "if True:\n"
        "    import indented\n"
        "s = \"import fake\"\n");
    CHECK(top_names(extract_imports(file)) ==
          std::vector<std::string>{"a", "d", "e", "f", "indented"});
}

TEST_CASE("extract_imports ignores docstring bodies", "[inspector]") {
    auto file = SourceFile::from_text(
        "\"\"\"Usage:\n"
        "import nothing\n"
        "\"\"\"\n"
        "import real\n"
        "'''\n"
        "import also_nothing\n"
        "'''\n");
    CHECK(top_names(extract_imports(file)) == std::vector<std::string>{"real"});
}

TEST_CASE("extract_imports is idempotent and duplicate-free", "[inspector]") {
    auto file = SourceFile::from_text(
        "import requests\nimport requests\nfrom requests import get\nimport flask\n");
    auto first = extract_imports(file);
    auto second = extract_imports(file);
    REQUIRE(first.size() == second.size());
    for (size_t i = 0; i < first.size(); ++i)
        CHECK(first[i].top_level_name == second[i].top_level_name);
    auto names = top_names(first);
    std::set<std::string> unique(names.begin(), names.end());
    CHECK(unique.size() == first.size());
}

TEST_CASE("filter_stdlib removes per-series standard library names", "[inspector]") {
    const auto& idx = testsup::stdlib_index();
    auto file = SourceFile::from_text("import os\nimport sys\nimport requests\n");
    auto mentions = extract_imports(file);
    auto left = filter_stdlib(mentions, InterpreterVersion{"3.6"}, idx);
    CHECK(top_names(left) == std::vector<std::string>{"requests"});
}

TEST_CASE("filter_stdlib knows the dataclasses backport era", "[inspector]") {
    const auto& idx = testsup::stdlib_index();
    auto mentions = extract_imports(SourceFile::from_text("import dataclasses\n"));
    CHECK(filter_stdlib(mentions, InterpreterVersion{"3.6"}, idx).size() == 1);
    CHECK(filter_stdlib(mentions, InterpreterVersion{"3.7"}, idx).empty());
}

TEST_CASE("filter_stdlib rejects unknown interpreter series", "[inspector]") {
    const auto& idx = testsup::stdlib_index();
    CHECK(filter_stdlib({}, InterpreterVersion{"3.6"}, idx).empty());
    CHECK_THROWS_AS(filter_stdlib({}, InterpreterVersion{"9.9"}, idx),
                    UnsupportedInterpreterError);
}

TEST_CASE("to_requirements applies the curated mapping", "[inspector]") {
    const auto& mapping = testsup::name_mapping();
    auto reqs = to_requirements(
        {ImportMention{"import sklearn", "sklearn", 1}, ImportMention{"import bs4", "bs4", 2},
         ImportMention{"import requests", "requests", 3}},
        mapping);
    REQUIRE(reqs.size() == 3);
    CHECK(reqs[0].install_name == "scikit-learn");
    CHECK(reqs[1].install_name == "beautifulsoup4");
    CHECK(reqs[2].install_name == "requests");
    for (const auto& r : reqs) CHECK_FALSE(r.version.has_value());
}

TEST_CASE("to_requirements never drops a mention", "[inspector]") {
    NameMapping mapping;
    std::vector<ImportMention> mentions;
    for (int i = 0; i < 37; ++i)
        mentions.push_back(ImportMention{"import m" + std::to_string(i), "m" + std::to_string(i),
                                         static_cast<size_t>(i + 1)});
    CHECK(to_requirements(mentions, mapping).size() == mentions.size());
}

TEST_CASE("name mapping seeds are present and case-sensitive", "[inspector]") {
    const auto& mapping = testsup::name_mapping();
    CHECK(mapping.lookup("sklearn") == "scikit-learn");
    CHECK(mapping.lookup("bs4") == "beautifulsoup4");
    CHECK(mapping.lookup("cv2") == "opencv-python");
    CHECK(mapping.lookup("PIL") == "pillow");
    CHECK(mapping.lookup("yaml") == "pyyaml");
    CHECK(mapping.lookup("Sklearn") == "Sklearn");   // unmapped names pass through
    CHECK(mapping.lookup("notmapped") == "notmapped");
}

TEST_CASE("the inspector carries no process or network machinery", "[inspector]") {
    // scanning source never executes it; the header must not even be able to
    std::ifstream in(testsup::repo_root() / "include" / "envmend" / "source_inspector.hpp");
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    CHECK(text.find("subprocess.hpp") == std::string::npos);
    CHECK(text.find("httplib") == std::string::npos);
    CHECK(text.find("popen") == std::string::npos);
    CHECK(text.find("fork") == std::string::npos);
    CHECK(text.find("system(") == std::string::npos);
}
