#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/function.hpp"
#include "sysmel/hir.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/program_entity.hpp"
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
    if (auto* definition = value.as<FunctionDefinitionObject>())
        return definition;
    return nullptr;
}

FunctionDefinitionObject* namedFunction(Runtime& rt, const std::string& name) {
    auto* entity = rt.globalNamespace()->members.at(rt.intern(name)).as<FunctionEntityObject>();
    REQUIRE(entity != nullptr);
    return entity->definition;
}

size_t countOp(const HirFunction& fn, HirOp op) {
    size_t n = 0;
    for (const HirBlock& block : fn.blocks)
        for (const HirInstruction& ins : block.instructions)
            n += ins.op == op;
    return n;
}

size_t countCallsTo(const HirFunction& fn, FunctionDefinitionObject* callee) {
    size_t n = 0;
    for (const HirBlock& block : fn.blocks)
        for (const HirInstruction& ins : block.instructions) {
            if (ins.op != HirOp::Apply || !ins.knownCallee)
                continue;
            if (auto* entity = ins.constant.as<FunctionEntityObject>())
                n += entity->definition == callee;
            else if (auto* def = ins.constant.as<FunctionDefinitionObject>())
                n += def == callee;
        }
    return n;
}

} // namespace

TEST_CASE("straight-line body builds a single block") {
    Runtime rt;
    auto* def = definitionOf(rt, "{:(Int32)x :(Int32)y :: Int32 | x + y}");
    REQUIRE(def != nullptr);
    auto fn = buildHir(rt, def);
    CHECK(verifyHir(*fn).empty());
    REQUIRE(fn->blocks.size() == 1);
    CHECK(countOp(*fn, HirOp::Apply) == 1);
    CHECK(countOp(*fn, HirOp::Return) == 1);
    std::vector<ObjectValue> args{rt.makePrimitiveInteger(2, rt.builtins.int32),
                                  rt.makePrimitiveInteger(3, rt.builtins.int32)};
    CHECK(rt.primitiveIntValue(interpretHir(rt, *fn, nullptr, args), rt.builtins.int32) == 5);
}

TEST_CASE("if expressions build a diamond with one two-input phi") {
    Runtime rt;
    auto* def = definitionOf(rt, "{:(Int32)x :: Int32 | if: x > 0i32 then: 1i32 else: 2i32}");
    auto fn = buildHir(rt, def);
    CHECK(verifyHir(*fn).empty());
    CHECK(fn->blocks.size() == 4);
    REQUIRE(countOp(*fn, HirOp::Phi) == 1);
    for (const HirBlock& block : fn->blocks)
        for (const HirInstruction& ins : block.instructions)
            if (ins.op == HirOp::Phi)
                CHECK(ins.operands.size() == 2);

    // Interpretation follows the actual incoming edge.
    std::vector<ObjectValue> pos{rt.makePrimitiveInteger(5, rt.builtins.int32)};
    std::vector<ObjectValue> neg{rt.makePrimitiveInteger(-5, rt.builtins.int32)};
    CHECK(rt.primitiveIntValue(interpretHir(rt, *fn, nullptr, pos), rt.builtins.int32) == 1);
    CHECK(rt.primitiveIntValue(interpretHir(rt, *fn, nullptr, neg), rt.builtins.int32) == 2);
}

TEST_CASE("field reads become slot accesses feeding intrinsics") {
    Runtime rt;
    run(rt, "public class SampleClass\n"
            "  superclass: Object; definition: {\n"
            "    public field first => Int32.\n"
            "    public method add: (x: Int32) ::=> Int32 := first + x.\n"
            "}.\n");
    auto* cls = rt.globalEnvironment()->lookup(rt.intern("SampleClass"))->value.as<TypeObject>();
    const MethodEntry* add = lookupSelector(cls, rt.intern("add:"));
    REQUIRE(add != nullptr);
    auto* def = add->target.as<FunctionDefinitionObject>();
    REQUIRE(def != nullptr);
    auto fn = buildHir(rt, def);
    CHECK(verifyHir(*fn).empty());
    CHECK(countOp(*fn, HirOp::SlotGet) == 1);

    ObjectValue receiver = run(rt, "SampleClass new first: 2i32; yourself");
    std::vector<ObjectValue> args{receiver, rt.makePrimitiveInteger(3, rt.builtins.int32)};
    ObjectValue hirResult = interpretHir(rt, *fn, nullptr, args);
    ObjectValue treeResult = rt.call(add->target, args);
    CHECK(rt.primitiveIntValue(hirResult, rt.builtins.int32) == 5);
    CHECK(rt.printString(hirResult) == rt.printString(treeResult));
}

TEST_CASE("constant propagation folds pure applications of constants") {
    Runtime rt;
    // Literal arithmetic folds during analysis already; constants that
    // only appear after alloca promotion exercise the HIR pass itself.
    auto* def = definitionOf(rt, "{:: Int32 | let a mutable := 2i32. a := 3i32. a + a}");
    HirFunction fn = *buildHir(rt, def);
    REQUIRE(countOp(fn, HirOp::Apply) == 1);
    ObjectValue before = interpretHir(rt, fn, nullptr, {});
    promoteAllocasToSsa(fn);
    CHECK(constantPropagation(rt, fn));
    CHECK(verifyHir(fn).empty());
    CHECK(countOp(fn, HirOp::Apply) == 0);
    ObjectValue after = interpretHir(rt, fn, nullptr, {});
    CHECK(rt.printString(before) == rt.printString(after));
}

TEST_CASE("constant conditions straighten the diamond") {
    Runtime rt;
    auto* def = definitionOf(rt, "{:: Int32 | if: true then: 1i32 else: 2i32}");
    HirFunction fn = *buildHir(rt, def);
    size_t blocksBefore = fn.blocks.size();
    REQUIRE(blocksBefore == 4);
    ObjectValue before = interpretHir(rt, fn, nullptr, {});

    constantPropagation(rt, fn);
    CHECK(verifyHir(fn).empty());
    simplifyControlFlow(fn);
    CHECK(verifyHir(fn).empty());

    CHECK(blocksBefore - fn.blocks.size() >= 2); // else arm and merge collapse
    ObjectValue after = interpretHir(rt, fn, nullptr, {});
    CHECK(rt.printString(before) == rt.printString(after));
    CHECK(rt.primitiveIntValue(after, rt.builtins.int32) == 1);
}

TEST_CASE("promotion removes allocas from loop code") {
    Runtime rt;
    auto* def = definitionOf(rt, "{:(Int32)limit :: Int32 |\n"
                                 "  let m mutable := 1i32.\n"
                                 "  while: m < limit do: { m := m * 3i32 }.\n"
                                 "  m }");
    HirFunction fn = *buildHir(rt, def);
    CHECK(countOp(fn, HirOp::Alloca) == 1);
    std::vector<ObjectValue> args{rt.makePrimitiveInteger(100, rt.builtins.int32)};
    ObjectValue before = interpretHir(rt, fn, nullptr, args);

    CHECK(promoteAllocasToSsa(fn));
    CHECK(verifyHir(fn).empty());
    CHECK(countOp(fn, HirOp::Alloca) == 0);
    CHECK(countOp(fn, HirOp::Load) == 0);
    CHECK(countOp(fn, HirOp::Store) == 0);
    CHECK(countOp(fn, HirOp::Phi) >= 1); // loop-carried value

    ObjectValue after = interpretHir(rt, fn, nullptr, args);
    CHECK(rt.printString(before) == rt.printString(after));
    CHECK(rt.primitiveIntValue(after, rt.builtins.int32) == 243);
}

TEST_CASE("captured cells do not promote") {
    Runtime rt;
    auto* def = definitionOf(rt, "{:: Dynamic |\n"
                                 "  let n mutable := 0.\n"
                                 "  { | n := n + 1. n }\n"
                                 "}");
    HirFunction fn = *buildHir(rt, def);
    REQUIRE(countOp(fn, HirOp::Alloca) == 1);
    promoteAllocasToSsa(fn);
    CHECK(countOp(fn, HirOp::Alloca) == 1); // address escapes into the closure
    CHECK(verifyHir(fn).empty());
}

TEST_CASE("small known callees inline away") {
    Runtime rt;
    run(rt, "function sq(x: Int32) => Int32 := x * x.\n"
            "function callSq(y: Int32) => Int32 := sq(y) + 1i32.");
    auto* sq = namedFunction(rt, "sq");
    auto* caller = namedFunction(rt, "callSq");

    HirFunction fn = *buildHir(rt, caller);
    REQUIRE(countCallsTo(fn, sq) == 1);
    std::vector<ObjectValue> args{rt.makePrimitiveInteger(6, rt.builtins.int32)};
    ObjectValue before = interpretHir(rt, fn, nullptr, args);

    promoteAllocasToSsa(fn);
    CHECK(inlineCalls(rt, fn));
    CHECK(verifyHir(fn).empty());
    CHECK(countCallsTo(fn, sq) == 0);

    ObjectValue after = interpretHir(rt, fn, nullptr, args);
    CHECK(rt.printString(before) == rt.printString(after));
    CHECK(rt.primitiveIntValue(after, rt.builtins.int32) == 37);
}

TEST_CASE("direct recursion is refused by the inliner") {
    Runtime rt;
    run(rt, "function fact(n: Int32) => Int32\n"
            "  := if: n <= 1i32 then: 1i32 else: n * fact(n - 1i32).");
    auto* fact = namedFunction(rt, "fact");
    HirFunction fn = *buildHir(rt, fact);
    promoteAllocasToSsa(fn);
    CHECK(!inlineCalls(rt, fn));
    CHECK(countCallsTo(fn, fact) == 1);
    std::vector<ObjectValue> args{rt.makePrimitiveInteger(10, rt.builtins.int32)};
    CHECK(rt.primitiveIntValue(interpretHir(rt, fn, nullptr, args), rt.builtins.int32) ==
          3628800);
}

TEST_CASE("inline then fold turns a constant call into a constant") {
    Runtime rt;
    run(rt, "function sq2(x: Int32) => Int32 := x * x.\n"
            "function konst() => Int32 := sq2(4i32).");
    auto fn = optimizeHir(rt, namedFunction(rt, "konst"));
    CHECK(verifyHir(*fn).empty());
    CHECK(countOp(*fn, HirOp::Apply) == 0);
    CHECK(rt.primitiveIntValue(interpretHir(rt, *fn, nullptr, {}), rt.builtins.int32) == 16);
}

TEST_CASE("verifier rejects malformed functions") {
    Runtime rt;
    // Use before definition in one block.
    HirFunction useBeforeDef;
    useBeforeDef.entryBlockId = 0;
    useBeforeDef.nextBlockId = 1;
    useBeforeDef.nextValueId = 3;
    HirBlock block{0};
    block.instructions.push_back({HirOp::Return, 0, nullptr, {}, false, 0, {2}, {}});
    block.instructions.push_back(
        {HirOp::Constant, 2, rt.builtins.int32, rt.makeInteger(1), false, 0, {}, {}});
    useBeforeDef.blocks.push_back(block);
    auto violations = verifyHir(useBeforeDef);
    CHECK(!violations.empty());

    // Two terminators in one block.
    HirFunction twoTerms;
    twoTerms.entryBlockId = 0;
    twoTerms.nextBlockId = 1;
    twoTerms.nextValueId = 2;
    HirBlock tblock{0};
    tblock.instructions.push_back(
        {HirOp::Constant, 1, rt.builtins.int32, rt.makeInteger(1), false, 0, {}, {}});
    tblock.instructions.push_back({HirOp::Return, 0, nullptr, {}, false, 0, {1}, {}});
    tblock.instructions.push_back({HirOp::Return, 0, nullptr, {}, false, 0, {1}, {}});
    twoTerms.blocks.push_back(tblock);
    violations = verifyHir(twoTerms);
    CHECK(!violations.empty());
}

TEST_CASE("dump lists blocks and typed values") {
    Runtime rt;
    auto* def = definitionOf(rt, "{:(Int32)x :: Int32 | if: x > 0i32 then: 1i32 else: 2i32}");
    auto fn = buildHir(rt, def);
    std::string text = dumpHir(rt, *fn);
    CHECK(text.find("block0:") != std::string::npos);
    CHECK(text.find(" = ") != std::string::npos);
    CHECK(text.find(": Int32") != std::string::npos);
    CHECK(text.find("condBranch") != std::string::npos);
    CHECK(text.find("phi") != std::string::npos);
}

TEST_CASE("class-and-function program runs identically under the HIR engine") {
    const char* source = "public class SampleClass\n"
                         "  superclass: Object; definition: {\n"
                         "    public field first => Int32.\n"
                         "    public method add: (x: Int32) ::=> Int32 := first + x.\n"
                         "}.\n"
                         "function sampleFunction(x: Int32, y: Int32) => Int32\n"
                         "    := SampleClass new first: x; add: y.\n"
                         "printLine(sampleFunction(2i32, 3i32)).";
    Runtime treeRt;
    std::ostringstream treeOut;
    treeRt.output = &treeOut;
    run(treeRt, source);

    Runtime hirRt;
    hirRt.engine = ExecutionEngine::Hir;
    std::ostringstream hirOut;
    hirRt.output = &hirOut;
    run(hirRt, source);

    CHECK(treeOut.str() == "5\n");
    CHECK(hirOut.str() == treeOut.str());
}

TEST_CASE("every pass preserves interpretation on a program sweep") {
    struct Program {
        const char* source;
        int argument;
    };
    const Program programs[] = {
        {"{:(Int32)x :: Int32 | x + 1i32}", 10},
        {"{:(Int32)x :: Int32 | if: x > 3i32 then: x * 2i32 else: x negated}", 2},
        {"{:(Int32)x :: Int32 | if: x > 3i32 then: x * 2i32 else: x negated}", 9},
        {"{:(Int32)x :: Int32 | let m mutable := x. while: m < 50i32 do: { m := m + 7i32 }. m}",
         4},
        {"{:(Int32)x :: Int32 | let a := x + 2i32. let b := a * a. b - x}", 5},
        {"{:(Int32)x :: Int32 | (if: x = 0i32 then: 1i32 else: 0i32) + (2i32 * 3i32)}", 0},
    };
    for (const Program& program : programs) {
        Runtime rt;
        auto* def = definitionOf(rt, program.source);
        REQUIRE(def != nullptr);
        std::vector<ObjectValue> args{
            rt.makePrimitiveInteger(program.argument, rt.builtins.int32)};
        HirFunction fn = *buildHir(rt, def);
        std::string expected = rt.printString(interpretHir(rt, fn, nullptr, args));
        size_t sizeBefore;

        promoteAllocasToSsa(fn);
        CHECK(verifyHir(fn).empty());
        CHECK(rt.printString(interpretHir(rt, fn, nullptr, args)) == expected);

        sizeBefore = fn.instructionCount();
        constantPropagation(rt, fn);
        CHECK(verifyHir(fn).empty());
        CHECK(fn.instructionCount() <= sizeBefore); // monotone
        CHECK(rt.printString(interpretHir(rt, fn, nullptr, args)) == expected);

        sizeBefore = fn.instructionCount();
        simplifyControlFlow(fn);
        CHECK(verifyHir(fn).empty());
        CHECK(fn.instructionCount() <= sizeBefore); // monotone
        CHECK(rt.printString(interpretHir(rt, fn, nullptr, args)) == expected);

        inlineCalls(rt, fn);
        CHECK(verifyHir(fn).empty());
        CHECK(rt.printString(interpretHir(rt, fn, nullptr, args)) == expected);
    }
}
