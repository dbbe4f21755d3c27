#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/function.hpp"
#include "sysmel/hir.hpp"
#include "sysmel/mir.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/runtime.hpp"

#include <sstream>

using namespace sysmel;

namespace {

ObjectValue run(Runtime& rt, const std::string& source) {
    Analyzer analyzer(rt);
    return analyzer.analyzeAndEvaluate(parseSource(rt, source, "<test>"),
                                       rt.globalEnvironment());
}

FunctionDefinitionObject* definitionOf(Runtime& rt, const std::string& source) {
    ObjectValue value = run(rt, source);
    if (auto* closure = value.as<ClosureObject>())
        return closure->definition;
    return value.as<FunctionDefinitionObject>();
}

/// Build + promote + lower, without the optional optimization passes.
MirFunction lowerLambda(Runtime& rt, const std::string& source) {
    auto* def = definitionOf(rt, source);
    REQUIRE(def != nullptr);
    HirFunction hir = *buildHir(rt, def);
    promoteAllocasToSsa(hir);
    REQUIRE(verifyHir(hir).empty());
    return lowerToMir(rt, hir);
}

size_t countOp(const MirFunction& fn, MirOp op) {
    size_t n = 0;
    for (const MirBlock& block : fn.blocks)
        for (const MirInstruction& ins : block.instructions)
            n += ins.op == op;
    return n;
}

size_t instructionCount(const MirFunction& fn) {
    size_t n = 0;
    for (const MirBlock& block : fn.blocks)
        n += block.instructions.size();
    return n;
}

ObjectValue int32(Runtime& rt, int v) {
    return rt.makePrimitiveInteger(v, rt.builtins.int32);
}

} // namespace

TEST_CASE("intrinsic add lowers to a single add tuple") {
    Runtime rt;
    MirFunction fn = lowerLambda(rt, "{:(Int32)x :(Int32)y :: Int32 | x + y}");
    CHECK(countOp(fn, MirOp::Add) == 1);
    CHECK(countOp(fn, MirOp::Return) == 1);
    std::vector<ObjectValue> args{int32(rt, 2), int32(rt, 3)};
    CHECK(rt.primitiveIntValue(emulateMir(rt, fn, nullptr, args), rt.builtins.int32) == 5);
}

TEST_CASE("phis become moves on the incoming edges") {
    Runtime rt;
    const char* source = "{:(Int32)x :: Int32 | if: x > 0i32 then: x + 1i32 else: x - 1i32}";
    auto* def = definitionOf(rt, source);
    HirFunction hir = *buildHir(rt, def);
    MirFunction fn = lowerToMir(rt, hir);
    CHECK(countOp(fn, MirOp::Mov) >= 2); // one per incoming edge (plus temps)

    for (int x : {5, -5}) {
        std::vector<ObjectValue> args{int32(rt, x)};
        ObjectValue hirValue = interpretHir(rt, hir, nullptr, args);
        ObjectValue mirValue = emulateMir(rt, fn, nullptr, args);
        CHECK(rt.printString(mirValue) == rt.printString(hirValue));
    }
}

TEST_CASE("escaped cells survive as frame slots") {
    Runtime rt;
    // The mutable cell is captured, so promotion must leave it in
    // memory and lowering gives it a frame address.
    MirFunction fn = lowerLambda(rt, "{:(Int32)seed :: Dynamic |\n"
                                     "  let n mutable := seed.\n"
                                     "  { | n := n + 1i32. n }\n"
                                     "}");
    CHECK(countOp(fn, MirOp::FrameAddr) == 1);
    CHECK(countOp(fn, MirOp::Store) >= 1);
    REQUIRE(fn.frameSlots.size() == 1);

    std::vector<ObjectValue> args{int32(rt, 10)};
    ObjectValue closure = emulateMir(rt, fn, nullptr, args);
    CHECK(rt.primitiveIntValue(rt.call(closure, {}), rt.builtins.int32) == 11);
    CHECK(rt.primitiveIntValue(rt.call(closure, {}), rt.builtins.int32) == 12);
}

TEST_CASE("single-use compares fuse with their branch") {
    Runtime rt;
    MirFunction fn =
        lowerLambda(rt, "{:(Int32)x :(Int32)y :: Int32 | if: x < y then: 1i32 else: 2i32}");
    size_t before = instructionCount(fn);
    size_t cmpBefore = countOp(fn, MirOp::CmpLt);
    REQUIRE(cmpBefore == 1);
    MirFunction unfused = fn;

    size_t fused = fuseCompareBranch(fn);
    CHECK(fused == 1);
    CHECK(countOp(fn, MirOp::BranchCmp) == fused);
    CHECK(countOp(fn, MirOp::CmpLt) == 0);
    CHECK(instructionCount(fn) == before - fused);

    for (auto [x, y] : {std::pair{1, 2}, std::pair{2, 1}}) {
        std::vector<ObjectValue> args{int32(rt, x), int32(rt, y)};
        CHECK(rt.printString(emulateMir(rt, fn, nullptr, args)) ==
              rt.printString(emulateMir(rt, unfused, nullptr, args)));
    }
}

TEST_CASE("compares with two uses stay unfused") {
    Runtime rt;
    MirFunction fn = lowerLambda(
        rt, "{:(Int32)x :(Int32)y :: Boolean | let c := x < y. if: c then: c else: false}");
    CHECK(fuseCompareBranch(fn) == 0);
    CHECK(countOp(fn, MirOp::BranchCmp) == 0);
}

TEST_CASE("fusing a loop guard saves one tuple per iteration") {
    Runtime rt;
    MirFunction fn = lowerLambda(rt, "{:(Int32)limit :: Int32 |\n"
                                     "  let m mutable := 1i32.\n"
                                     "  while: m < limit do: { m := m + 1i32 }.\n"
                                     "  m }");
    MirFunction unfused = fn;
    REQUIRE(fuseCompareBranch(fn) == 1);

    std::vector<ObjectValue> args{int32(rt, 11)};
    size_t unfusedCount = 0, fusedCount = 0;
    ObjectValue a = emulateMir(rt, unfused, nullptr, args, &unfusedCount);
    ObjectValue b = emulateMir(rt, fn, nullptr, args, &fusedCount);
    CHECK(rt.printString(a) == rt.printString(b));
    // The guard runs once per iteration plus the exit test: 11 times.
    CHECK(unfusedCount - fusedCount == 11);
}

TEST_CASE("few live values allocate without spills") {
    Runtime rt;
    MirFunction fn = lowerLambda(rt, "{:(Int32)x :(Int32)y :: Int32 | (x + y) * (x - y)}");
    size_t slotsBefore = fn.frameSlots.size();
    MirFunction allocated = allocateRegisters(fn);
    CHECK(allocated.frameSlots.size() == slotsBefore); // no spill slots added
    CHECK(checkAllocation(fn, allocated).empty());

    std::vector<ObjectValue> args{int32(rt, 7), int32(rt, 3)};
    CHECK(rt.printString(emulateMir(rt, allocated, nullptr, args)) ==
          rt.printString(emulateMir(rt, fn, nullptr, args)));
}

TEST_CASE("twenty simultaneously live values spill at least eight slots") {
    Runtime rt;
    std::string source = "{:(Int32)x :: Int32 |\n";
    for (int i = 1; i <= 20; ++i)
        source += "  let a" + std::to_string(i) + " := x + " + std::to_string(i) + "i32.\n";
    source += "  a1";
    for (int i = 2; i <= 20; ++i)
        source += " + a" + std::to_string(i);
    source += " }";
    MirFunction fn = lowerLambda(rt, source);
    MirFunction allocated = allocateRegisters(fn);
    CHECK(allocated.frameSlots.size() - fn.frameSlots.size() >= 8);
    CHECK(checkAllocation(fn, allocated).empty());

    std::vector<ObjectValue> args{int32(rt, 5)};
    ObjectValue result = emulateMir(rt, allocated, nullptr, args);
    CHECK(rt.primitiveIntValue(result, rt.builtins.int32) == 20 * 5 + 210);
    CHECK(rt.printString(result) == rt.printString(emulateMir(rt, fn, nullptr, args)));
}

TEST_CASE("frame layout packs aligned disjoint slots") {
    MirFunction two;
    two.frameSlots = {{0, 8, 8, 0}, {1, 8, 8, 0}};
    computeFrameLayout(two);
    CHECK(two.frameSlots[0].offset == 0);
    CHECK(two.frameSlots[1].offset == 8);
    CHECK(two.frame->totalSize == 16);

    MirFunction mixed;
    mixed.frameSlots = {{0, 1, 1, 0}, {1, 8, 8, 0}};
    computeFrameLayout(mixed);
    CHECK(mixed.frameSlots[0].offset == 0);
    CHECK(mixed.frameSlots[1].offset == 8);
    CHECK(mixed.frame->totalSize == 16);

    MirFunction empty;
    computeFrameLayout(empty);
    CHECK(empty.frame->totalSize == 0);
}

TEST_CASE("listing is deterministic and uses fused mnemonics") {
    Runtime rt;
    MirFunction fn =
        lowerLambda(rt, "{:(Int32)x :(Int32)y :: Int32 | if: x < y then: 1i32 else: 2i32}");
    fuseCompareBranch(fn);
    MirFunction allocated = allocateRegisters(fn);
    computeFrameLayout(allocated);
    std::string first = emitListing(rt, allocated);
    std::string second = emitListing(rt, allocated);
    CHECK(first == second);
    CHECK(first.find("blt ") != std::string::npos);
    CHECK(first.find("L0:") != std::string::npos);
    CHECK(first.find("; frame") != std::string::npos);
}

TEST_CASE("class-and-function program runs under both emulator stages") {
    const char* source = "public class SampleClass\n"
                         "  superclass: Object; definition: {\n"
                         "    public field first => Int32.\n"
                         "    public method add: (x: Int32) ::=> Int32 := first + x.\n"
                         "}.\n"
                         "function sampleFunction(x: Int32, y: Int32) => Int32\n"
                         "    := SampleClass new first: x; add: y.\n"
                         "printLine(sampleFunction(2i32, 3i32)).";
    for (ExecutionEngine engine :
         {ExecutionEngine::MirPreAlloc, ExecutionEngine::MirPostLayout}) {
        Runtime rt;
        rt.engine = engine;
        std::ostringstream out;
        rt.output = &out;
        run(rt, source);
        CHECK(out.str() == "5\n");
    }
}

TEST_CASE("division by zero reports a runtime error, not a crash") {
    Runtime rt;
    MirFunction fn = lowerLambda(rt, "{:(Int32)x :: Int32 | 10i32 // x}");
    std::vector<ObjectValue> args{int32(rt, 0)};
    CHECK_THROWS_AS(emulateMir(rt, fn, nullptr, args), EvaluationError);
}

TEST_CASE("emulation matches the upstream interpreter across stages") {
    struct Program {
        const char* source;
        int argument;
    };
    const Program programs[] = {
        {"{:(Int32)x :: Int32 | x * x - 1i32}", 9},
        {"{:(Int32)x :: Int32 | if: x > 3i32 then: x * 2i32 else: x negated}", 2},
        {"{:(Int32)x :: Int32 | let m mutable := x. while: m < 40i32 do: { m := m + 7i32 }. m}",
         5},
        {"{:(Int32)x :: Int32 | let a := x + 2i32. a * a}", 4},
    };
    for (const Program& program : programs) {
        Runtime rt;
        auto* def = definitionOf(rt, program.source);
        HirFunction hir = *buildHir(rt, def);
        promoteAllocasToSsa(hir);
        std::vector<ObjectValue> args{int32(rt, program.argument)};
        std::string expected = rt.printString(interpretHir(rt, hir, nullptr, args));

        MirFunction fn = lowerToMir(rt, hir);
        CHECK(rt.printString(emulateMir(rt, fn, nullptr, args)) == expected);
        fuseCompareBranch(fn);
        CHECK(rt.printString(emulateMir(rt, fn, nullptr, args)) == expected);
        MirFunction allocated = allocateRegisters(fn);
        CHECK(checkAllocation(fn, allocated).empty());
        CHECK(rt.printString(emulateMir(rt, allocated, nullptr, args)) == expected);
        computeFrameLayout(allocated);
        CHECK(rt.printString(emulateMir(rt, allocated, nullptr, args)) == expected);
    }
}
