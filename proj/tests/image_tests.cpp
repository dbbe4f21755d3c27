#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/function.hpp"
#include "sysmel/image.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/program_entity.hpp"
#include "sysmel/runtime.hpp"

#include <algorithm>
#include <sstream>

using namespace sysmel;

namespace {

const char* sampleProgram = "public class Pair\n"
                            "  superclass: Object; definition: {\n"
                            "    public field a => Int32.\n"
                            "    public method sum: (x: Int32) ::=> Int32 := a + x.\n"
                            "}.\n"
                            "function helper(x: Int32) => Int32 := Pair new a: x; sum: 2i32.\n"
                            "function deadFunction() => Int32 := 99i32.\n"
                            "function main() => Void := printLine(helper(3i32)).\n";

void run(Runtime& rt, const std::string& source) {
    Analyzer analyzer(rt);
    analyzer.analyzeAndEvaluate(parseSource(rt, source, "<test>"), rt.globalEnvironment());
}

FunctionEntityObject* namedFunction(Runtime& rt, const char* name) {
    for (auto& [sym, member] : rt.globalNamespace()->members)
        if (sym->text == name)
            if (auto* entity = member.as<FunctionEntityObject>())
                return entity;
    return nullptr;
}

/// Loads the program, runs main once (forcing analysis of every
/// reachable definition) and returns the main entity.
FunctionEntityObject* prepareProgram(Runtime& rt, std::string* output = nullptr) {
    std::ostringstream out;
    rt.output = &out;
    run(rt, sampleProgram);
    FunctionEntityObject* main = namedFunction(rt, "main");
    REQUIRE(main != nullptr);
    rt.call(ObjectValue::heap(main), {});
    if (output)
        *output = out.str();
    return main;
}

bool contains(const std::vector<ObjectValue>& entities, const Object* object) {
    return std::any_of(entities.begin(), entities.end(),
                       [&](const ObjectValue& v) { return v.object() == object; });
}

} // namespace

TEST_CASE("main-only tracing excludes a dead function") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    FunctionEntityObject* helper = namedFunction(rt, "helper");
    FunctionEntityObject* dead = namedFunction(rt, "deadFunction");
    REQUIRE(helper != nullptr);
    REQUIRE(dead != nullptr);

    std::vector<ObjectValue> mainRoots{ObjectValue::heap(main)};
    std::vector<ObjectValue> mainSet = traceEntities(rt, mainRoots);
    CHECK(contains(mainSet, main));
    CHECK(contains(mainSet, main->definition));
    // Call sites reference the callee's definition directly.
    CHECK(contains(mainSet, helper->definition));
    CHECK(!contains(mainSet, dead));
    CHECK(!contains(mainSet, dead->definition));

    std::vector<ObjectValue> allRoots{ObjectValue::heap(main),
                                      ObjectValue::heap(rt.globalNamespace())};
    std::vector<ObjectValue> allSet = traceEntities(rt, allRoots);
    CHECK(contains(allSet, dead));
    CHECK(contains(allSet, dead->definition));
    // Namespace tracing subsumes main-only tracing.
    for (const ObjectValue& entity : mainSet)
        CHECK(contains(allSet, entity.object()));
}

TEST_CASE("tracing a minimal function closes over its analyzed body") {
    Runtime rt;
    std::ostringstream out;
    rt.output = &out;
    run(rt, "function solo() => Int32 := 7i32.");
    FunctionEntityObject* solo = namedFunction(rt, "solo");
    REQUIRE(solo != nullptr);
    rt.call(ObjectValue::heap(solo), {});

    std::vector<ObjectValue> roots{ObjectValue::heap(solo)};
    std::vector<ObjectValue> set = traceEntities(rt, roots);
    CHECK(contains(set, solo));
    CHECK(contains(set, solo->definition));
    REQUIRE(solo->definition->analyzedBody != nullptr);
    CHECK(contains(set, solo->definition->analyzedBody));
    CHECK(contains(set, solo->name));
}

TEST_CASE("serialization is deterministic") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> roots{ObjectValue::heap(main)};
    CHECK(serializeImage(rt, roots) == serializeImage(rt, roots));
}

TEST_CASE("serialize-load-serialize is a byte-identical fixpoint") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> roots{ObjectValue::heap(main),
                                   ObjectValue::heap(rt.globalNamespace())};
    std::vector<uint8_t> first = serializeImage(rt, roots);

    Runtime rt2;
    LoadedImage loaded = loadImage(rt2, first);
    REQUIRE(loaded.roots.size() == 2);
    std::vector<uint8_t> second = serializeImage(rt2, loaded.roots);
    CHECK(first == second);
}

TEST_CASE("relocation entries mirror the reference fields") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> roots{ObjectValue::heap(main)};
    std::vector<uint8_t> image = serializeImage(rt, roots);

    auto u32At = [&](size_t pos) {
        return uint32_t(image[pos]) | uint32_t(image[pos + 1]) << 8 |
               uint32_t(image[pos + 2]) << 16 | uint32_t(image[pos + 3]) << 24;
    };
    uint32_t recordCount = u32At(8);
    uint32_t rootCount = u32At(12);
    uint32_t relocationCount = u32At(16);
    CHECK(recordCount > 0);
    CHECK(relocationCount > 0);

    // Walk the records to find each payload's position.
    std::vector<size_t> payloadStart(recordCount);
    std::vector<uint32_t> payloadSize(recordCount);
    size_t pos = 20;
    for (uint32_t i = 0; i < recordCount; ++i) {
        uint32_t size = u32At(pos + 4);
        payloadStart[i] = pos + 8;
        payloadSize[i] = size;
        pos += 8 + ((size + 3u) & ~3u);
    }
    // Every relocation's stored index field must equal its target, and
    // every target must be in range (closure soundness).
    for (uint32_t i = 0; i < relocationCount; ++i) {
        uint32_t record = u32At(pos);
        uint32_t offset = u32At(pos + 4);
        uint32_t target = u32At(pos + 8);
        REQUIRE(record < recordCount);
        REQUIRE(target < recordCount);
        REQUIRE(offset + 4 <= payloadSize[record]);
        CHECK(u32At(payloadStart[record] + offset) == target);
        pos += 12;
    }
    CHECK(pos + 4 * rootCount == image.size());
}

TEST_CASE("a reloaded main re-executes with identical output") {
    Runtime rt;
    std::string before;
    FunctionEntityObject* main = prepareProgram(rt, &before);
    CHECK(before == "5\n");
    std::vector<ObjectValue> roots{ObjectValue::heap(main)};
    std::vector<uint8_t> image = serializeImage(rt, roots);

    Runtime rt2;
    std::ostringstream out;
    rt2.output = &out;
    LoadedImage loaded = loadImage(rt2, image);
    REQUIRE(loaded.roots.size() == 1);
    rt2.call(loaded.roots[0], {});
    CHECK(out.str() == before);
}

TEST_CASE("main-only images are smaller than namespace images") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> mainRoots{ObjectValue::heap(main)};
    std::vector<ObjectValue> allRoots{ObjectValue::heap(main),
                                      ObjectValue::heap(rt.globalNamespace())};
    CHECK(serializeImage(rt, mainRoots).size() < serializeImage(rt, allRoots).size());
}

TEST_CASE("stripping analyzed bodies shrinks the image") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> roots{ObjectValue::heap(main)};
    CHECK(serializeImage(rt, roots, true).size() < serializeImage(rt, roots, false).size());
}

TEST_CASE("symbols are re-interned by text on load") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> roots{ObjectValue::heap(main)};
    std::vector<uint8_t> image = serializeImage(rt, roots);

    Runtime rt2;
    LoadedImage loaded = loadImage(rt2, image);
    auto* entity = loaded.roots[0].as<FunctionEntityObject>();
    REQUIRE(entity != nullptr);
    CHECK(entity->name == rt2.intern("main"));
}

TEST_CASE("malformed images are rejected with image errors") {
    Runtime rt;
    FunctionEntityObject* main = prepareProgram(rt);
    std::vector<ObjectValue> roots{ObjectValue::heap(main)};
    std::vector<uint8_t> image = serializeImage(rt, roots);

    SUBCASE("flipped magic byte") {
        image[0] ^= 0xFF;
        Runtime rt2;
        CHECK_THROWS_AS(loadImage(rt2, image), ImageError);
    }
    SUBCASE("unsupported version") {
        image[4] = 99;
        Runtime rt2;
        CHECK_THROWS_AS(loadImage(rt2, image), ImageError);
    }
    SUBCASE("truncated payload") {
        image.resize(image.size() / 2);
        Runtime rt2;
        CHECK_THROWS_AS(loadImage(rt2, image), ImageError);
    }
    SUBCASE("relocation out of range") {
        // Point every root index past the record count by raising the
        // record count field's complement: corrupt the first
        // relocation's target instead.
        uint32_t recordCount = uint32_t(image[8]) | uint32_t(image[9]) << 8 |
                               uint32_t(image[10]) << 16 | uint32_t(image[11]) << 24;
        size_t pos = 20;
        for (uint32_t i = 0; i < recordCount; ++i) {
            uint32_t size = uint32_t(image[pos + 4]) | uint32_t(image[pos + 5]) << 8 |
                            uint32_t(image[pos + 6]) << 16 | uint32_t(image[pos + 7]) << 24;
            pos += 8 + ((size + 3u) & ~3u);
        }
        // First relocation entry: record, offset, target.
        image[pos + 8] = 0xFF;
        image[pos + 9] = 0xFF;
        image[pos + 10] = 0xFF;
        image[pos + 11] = 0xFF;
        Runtime rt2;
        CHECK_THROWS_AS(loadImage(rt2, image), ImageError);
    }
}
