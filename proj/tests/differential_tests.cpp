#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/runtime.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace sysmel;

namespace {

std::vector<std::filesystem::path> corpusPrograms() {
    std::vector<std::filesystem::path> programs;
    for (const auto& entry : std::filesystem::directory_iterator(CORPUS_DIR))
        if (entry.path().extension() == ".sysmel")
            programs.push_back(entry.path());
    std::sort(programs.begin(), programs.end());
    return programs;
}

std::string readFile(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream contents;
    contents << in.rdbuf();
    return contents.str();
}

std::string runProgram(const std::string& source, const std::string& name,
                       ExecutionEngine engine, OptimizationConfig optimization = {}) {
    Runtime rt;
    rt.engine = engine;
    rt.optimization = optimization;
    std::ostringstream out;
    rt.output = &out;
    Analyzer analyzer(rt);
    analyzer.analyzeAndEvaluate(parseSource(rt, source, name), rt.globalEnvironment());
    return out.str();
}

} // namespace

TEST_CASE("the corpus holds at least thirty programs") {
    CHECK(corpusPrograms().size() >= 30);
}

TEST_CASE("every program behaves identically under every engine") {
    const ExecutionEngine engines[] = {ExecutionEngine::Bytecode, ExecutionEngine::Hir,
                                       ExecutionEngine::MirPreAlloc,
                                       ExecutionEngine::MirPostLayout};
    for (const auto& path : corpusPrograms()) {
        std::string name = path.filename().string();
        std::string source = readFile(path);
        std::string expected;
        try {
            expected = runProgram(source, name, ExecutionEngine::TreeWalk);
        } catch (const std::exception& error) {
            FAIL(name, ": tree-walk baseline failed: ", error.what());
            continue;
        }
        CHECK(!expected.empty());
        for (ExecutionEngine engine : engines) {
            try {
                CHECK_MESSAGE(runProgram(source, name, engine) == expected, name,
                              " diverged under engine ", int(engine));
            } catch (const std::exception& error) {
                FAIL(name, ": engine ", int(engine), " threw: ", error.what());
            }
        }
    }
}

TEST_CASE("disabling any optimization pass never changes behavior") {
    OptimizationConfig noConstprop;
    noConstprop.constantPropagation = false;
    OptimizationConfig noSimplify;
    noSimplify.simplifyControlFlow = false;
    OptimizationConfig noInline;
    noInline.inlineCalls = false;
    OptimizationConfig bare;
    bare.constantPropagation = false;
    bare.simplifyControlFlow = false;
    bare.inlineCalls = false;

    for (const auto& path : corpusPrograms()) {
        std::string name = path.filename().string();
        std::string source = readFile(path);
        std::string expected = runProgram(source, name, ExecutionEngine::TreeWalk);
        for (const OptimizationConfig& config : {noConstprop, noSimplify, noInline, bare}) {
            try {
                CHECK_MESSAGE(
                    runProgram(source, name, ExecutionEngine::Hir, config) == expected, name,
                    " diverged with a pass disabled");
            } catch (const std::exception& error) {
                FAIL(name, ": pass-toggled run threw: ", error.what());
            }
        }
        // The fully-stripped pipeline must also hold post-allocation.
        CHECK_MESSAGE(runProgram(source, name, ExecutionEngine::MirPostLayout, bare) == expected,
                      name, " diverged post-allocation with passes disabled");
    }
}
