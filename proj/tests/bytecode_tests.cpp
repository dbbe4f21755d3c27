#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/bytecode.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/function.hpp"
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

/// Evaluates a lambda expression and compiles its definition.
std::shared_ptr<BytecodeFunction> compileLambda(Runtime& rt, const std::string& source) {
    ObjectValue value = run(rt, source);
    FunctionDefinitionObject* definition = nullptr;
    if (auto* closure = value.as<ClosureObject>())
        definition = closure->definition;
    else
        definition = value.as<FunctionDefinitionObject>();
    REQUIRE(definition != nullptr);
    return compileToBytecode(rt, definition);
}

size_t countOpcode(const BytecodeFunction& fn, Opcode opcode) {
    size_t n = 0;
    for (const BcInstruction& ins : fn.instructions)
        if (ins.opcode == opcode)
            ++n;
    return n;
}

constexpr const char* listing2Source =
    "public class SampleClass\n"
    "  superclass: Object; definition: {\n"
    "    public field first => Int32.\n"
    "    public method add: (x: Int32) ::=> Int32\n"
    "        := first + x.\n"
    "}.\n"
    "function sampleFunction(x: Int32, y: Int32) => Int32\n"
    "    := SampleClass new first: x; add: y.\n";

} // namespace

TEST_CASE("two-argument add compiles to one intrinsic and one return") {
    Runtime rt;
    auto fn = compileLambda(rt, "{:(Int32)x :y :: Int32 | x + y}");
    CHECK(countOpcode(*fn, Opcode::Intrinsic) == 1);
    CHECK(countOpcode(*fn, Opcode::Return) == 1);
    CHECK(fn->argumentCount == 2);
    CHECK(verifyBytecode(*fn).empty());
}

TEST_CASE("constant function compiles to a literal load and a return") {
    Runtime rt;
    auto fn = compileLambda(rt, "{:: Int32 | 42i32}");
    REQUIRE(fn->instructions.size() == 2);
    CHECK(fn->instructions[0].opcode == Opcode::LoadLiteral);
    CHECK(fn->instructions[1].opcode == Opcode::Return);
    CHECK(rt.primitiveIntValue(executeBytecode(rt, *fn, nullptr, {}), rt.builtins.int32) == 42);
}

TEST_CASE("class-and-function program runs identically under bytecode") {
    Runtime treeRt;
    std::ostringstream treeOut;
    treeRt.output = &treeOut;
    run(treeRt, std::string(listing2Source) + "printLine(sampleFunction(2i32, 3i32)).");

    Runtime bcRt;
    bcRt.engine = ExecutionEngine::Bytecode;
    std::ostringstream bcOut;
    bcRt.output = &bcOut;
    run(bcRt, std::string(listing2Source) + "printLine(sampleFunction(2i32, 3i32)).");

    CHECK(treeOut.str() == "5\n");
    CHECK(bcOut.str() == treeOut.str());
}

TEST_CASE("closures capture values and mutable cells") {
    const char* adder = "function makeAdder(x: Int32) := {:(Int32)y :: Int32 | x + y}.\n"
                        "makeAdder(5i32)(2i32)";
    const char* counter = "function makeCounter() := {\n"
                          "  let n mutable := 0.\n"
                          "  { | n := n + 1. n }\n"
                          "}.\n"
                          "let c := makeCounter(). c(). c(). c()";

    Runtime treeRt;
    ObjectValue treeAdd = run(treeRt, adder);
    ObjectValue treeCount = run(treeRt, counter);

    Runtime bcRt;
    bcRt.engine = ExecutionEngine::Bytecode;
    CHECK(bcRt.integerValueOf(run(bcRt, adder)) == treeRt.integerValueOf(treeAdd));
    CHECK(bcRt.integerValueOf(run(bcRt, counter)) == treeRt.integerValueOf(treeCount));
}

TEST_CASE("recursive user functions run under bytecode") {
    Runtime rt;
    rt.engine = ExecutionEngine::Bytecode;
    ObjectValue v = run(rt, "function fact(n: Int32) => Int32\n"
                            "  := if: n <= 1i32 then: 1i32 else: n * fact(n - 1i32).\n"
                            "fact(10i32)");
    CHECK(rt.primitiveIntValue(v, rt.builtins.int32) == 3628800);
}

TEST_CASE("arity errors surface before any instruction runs") {
    Runtime rt;
    rt.engine = ExecutionEngine::Bytecode;
    std::ostringstream out;
    rt.output = &out;
    run(rt, "function shout(x) := printLine(x).");
    auto* entity =
        rt.globalNamespace()->members.at(rt.intern("shout")).as<FunctionEntityObject>();
    REQUIRE(entity != nullptr);
    std::vector<ObjectValue> two{rt.makeInteger(1), rt.makeInteger(2)};
    CHECK_THROWS_AS(rt.call(ObjectValue::heap(entity), two), EvaluationError);
    CHECK(out.str().empty()); // the body never started
}

TEST_CASE("verifier reports hand-built violations") {
    BytecodeFunction bad;
    bad.registerCount = 1;
    bad.instructions.emplace_back(Opcode::Move, 0, 5); // r5 does not exist
    auto violations = verifyBytecode(bad);
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("register out of range") != std::string::npos);

    BytecodeFunction noReturn;
    noReturn.registerCount = 1;
    noReturn.literals.push_back(ObjectValue());
    noReturn.instructions.emplace_back(Opcode::LoadLiteral, 0, 0);
    violations = verifyBytecode(noReturn);
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("Return") != std::string::npos);

    BytecodeFunction empty;
    violations = verifyBytecode(empty);
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("missing return") != std::string::npos);
}

TEST_CASE("disassembly lists one instruction per line") {
    Runtime rt;
    auto fn = compileLambda(rt, "{:: Int32 | 42i32}");
    std::string text = disassemble(*fn);
    CHECK(text.find("0: LoadLiteral") != std::string::npos);
    CHECK(text.find("1: Return") != std::string::npos);
}

TEST_CASE("tree-walk and bytecode agree on a differential set") {
    const char* programs[] = {
        "16rFF1F_F2F3",
        "let a := 2. let b := a + 1. a * b",
        "let m mutable := 1i32. while: m < 100i32 do: { m := m * 3i32 }. m",
        "function grow(limit: Int32) => Int32 := {\n"
        "  let m mutable := 1i32. while: m < limit do: { m := m * 3i32 }. m\n"
        "}. grow(100i32)",
        "function abs(x: Int32) => Int32 := if: x < 0i32 then: x negated else: x.\n"
        "abs(0i32 - 7i32) + abs(7i32)",
        "(Array new: 2sz) at: 0sz put: 10; at: 1sz put: 32; yourself. 42",
        "function fib(n: Int32) => Int32 := if: n < 2i32 then: n\n"
        "  else: fib(n - 1i32) + fib(n - 2i32). fib(12i32)",
        "let d := Dictionary new. d at: #k put: 9. d at: #k",
        "255u8 + 1u8. 127i8 + 1i8. (2 + 3) asUInt8",
    };
    for (const char* program : programs) {
        Runtime treeRt;
        Runtime bcRt;
        bcRt.engine = ExecutionEngine::Bytecode;
        ObjectValue treeValue = run(treeRt, program);
        ObjectValue bcValue = run(bcRt, program);
        CHECK(treeRt.printString(treeValue) == bcRt.printString(bcValue));
    }
}
