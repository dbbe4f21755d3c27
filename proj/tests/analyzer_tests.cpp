#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/runtime.hpp"

#include <random>
#include <sstream>

using namespace sysmel;

namespace {

ObjectValue run(Runtime& rt, const std::string& source) {
    Analyzer analyzer(rt);
    return analyzer.analyzeAndEvaluate(parseSource(rt, source, "<test>"),
                                       rt.globalEnvironment());
}

BigInt intOf(Runtime& rt, const ObjectValue& value) { return rt.integerValueOf(value); }

/// Analyzes (without evaluating) the single expression in `source`
/// against the global environment.
AstNode* analyzeExpr(Runtime& rt, const std::string& source, TypeObject* expected = nullptr) {
    SequenceNode* seq = parseSource(rt, source, "<test>");
    REQUIRE(seq->expressions.size() == 1);
    Analyzer analyzer(rt);
    AnalysisContext ctx;
    ctx.environment = rt.globalEnvironment();
    ctx.expectedType = expected;
    return analyzer.analyze(seq->expressions[0], ctx);
}

} // namespace

TEST_CASE("top level evaluates statements in order, value of the last") {
    Runtime rt;
    CHECK(intOf(rt, run(rt, "2 + 3 * 5")) == 25); // uniform left-to-right binary precedence
    CHECK(run(rt, "") == rt.voidValue);
    CHECK(run(rt, "nil") == rt.nilValue);
    CHECK(intOf(rt, run(rt, "let a := 2. let b := a + 1. a * b")) == 6);
}

TEST_CASE("class-and-function program prints 5") {
    Runtime rt;
    std::ostringstream out;
    rt.output = &out;
    ObjectValue result = run(rt,
                             "public class SampleClass\n"
                             "  superclass: Object; definition: {\n"
                             "    public field first => Int32.\n"
                             "    public method add: (x: Int32) ::=> Int32\n"
                             "        := first + x.\n"
                             "}.\n"
                             "function sampleFunction(x: Int32, y: Int32) => Int32\n"
                             "    := SampleClass new first: x; add: y.\n"
                             "printLine(sampleFunction(2i32, 3i32)).\n");
    CHECK(out.str() == "5\n");
    CHECK(result == rt.voidValue);
}

TEST_CASE("literal coercion against the expected type") {
    Runtime rt;
    AstNode* five = analyzeExpr(rt, "5", rt.builtins.int32);
    auto* lit = dynamic_cast<LiteralNode*>(five);
    REQUIRE(lit != nullptr);
    CHECK(lit->analyzedType == rt.builtins.int32);
    CHECK(rt.primitiveIntValue(lit->value, rt.builtins.int32) == 5);

    // Unrepresentable literals are a type mismatch, not silent wrap.
    run(rt, "function takes32(x: Int32) => Int32 := x.");
    CHECK_THROWS_AS(run(rt, "takes32(3000000000)"), SemanticError);
    try {
        run(rt, "takes32(3000000000)");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::TypeMismatch);
        CHECK(e.position.line > 0);
    }
}

TEST_CASE("identifier resolution errors carry kind and position") {
    Runtime rt;
    try {
        run(rt, "1 + 1.\nzork");
        FAIL("expected an unbound identifier error");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::UnboundIdentifier);
        CHECK(e.position.line == 2);
    }
}

TEST_CASE("lambdas, unary conversion suffix equivalence, closures") {
    Runtime rt;
    ObjectValue v = run(rt, "{:(Int32)x :y :: Int32 | x + y} (1i32, 3 i32)");
    CHECK(rt.typeOf(v) == rt.builtins.int32);
    CHECK(rt.primitiveIntValue(v, rt.builtins.int32) == 4);

    // `3 i32` is the message form of the literal suffix `3i32`.
    ObjectValue sent = run(rt, "3 i32");
    ObjectValue suffixed = run(rt, "3i32");
    CHECK(rt.typeOf(sent) == rt.typeOf(suffixed));
    CHECK(intOf(rt, sent) == intOf(rt, suffixed));

    CHECK(intOf(rt, run(rt, "function makeAdder(n) := {:x | x + n }. "
                            "let add5 := makeAdder(5). add5(3)")) == 8);

    // A captured mutable local is shared by reference across calls.
    CHECK(intOf(rt, run(rt, "function counter() := { let n mutable := 0. "
                            "{ | n := n + 1. n } }. "
                            "let c := counter(). c(). c(). c()")) == 3);
}

TEST_CASE("pure applications of literals fold to literals") {
    Runtime rt;
    run(rt, "pure function square(x) := x * x.");

    AstNode* folded = analyzeExpr(rt, "square(7)");
    auto* lit = dynamic_cast<LiteralNode*>(folded);
    REQUIRE(lit != nullptr);

    // Oracle: run the same function through the runtime call path.
    ObjectValue fn = rt.globalEnvironment()->lookup(rt.intern("square"))->value;
    ObjectValue arg = rt.makeInteger(BigInt(7));
    ObjectValue oracle = rt.call(fn, std::span<const ObjectValue>(&arg, 1));
    CHECK(intOf(rt, lit->value) == intOf(rt, oracle));

    // Randomized fold soundness.
    std::mt19937_64 rng(20260823);
    std::uniform_int_distribution<int64_t> dist(-1000000, 1000000);
    for (int i = 0; i < 50; ++i) {
        int64_t n = dist(rng);
        AstNode* node = analyzeExpr(rt, "square(" + std::to_string(n) + ")");
        auto* asLit = dynamic_cast<LiteralNode*>(node);
        REQUIRE(asLit != nullptr);
        CHECK(intOf(rt, asLit->value) == BigInt(n) * BigInt(n));
    }

    // Non-pure functions are not folded.
    run(rt, "function opaque(x) := x * x.");
    AstNode* kept = analyzeExpr(rt, "opaque(7)");
    CHECK(dynamic_cast<LiteralNode*>(kept) == nullptr);
    CHECK(kept->nodeKind == NodeKind::FunctionApplication);
}

TEST_CASE("static message sends rewrite to applications and fold") {
    Runtime rt;
    AstNode* negated = analyzeExpr(rt, "2 negated");
    auto* lit = dynamic_cast<LiteralNode*>(negated);
    REQUIRE(lit != nullptr);
    CHECK(intOf(rt, lit->value) == -2);
}

TEST_CASE("no-such-method on a statically typed receiver") {
    Runtime rt;
    try {
        run(rt, "let x := 2i32. x nonexistent");
        FAIL("expected no-such-method");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::NoSuchMethod);
    }
}

TEST_CASE("arity mismatch is an analysis-time error") {
    Runtime rt;
    run(rt, "function ident(x) := x.");
    try {
        run(rt, "ident(1, 2)");
        FAIL("expected arity mismatch");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::ArityMismatch);
    }
}

TEST_CASE("dynamic sends dispatch on the runtime type") {
    Runtime rt;
    run(rt, "function getAt(d) := d at: 0sz.");
    ObjectValue v = run(rt, "getAt((Array new: 1sz) at: 0sz put: 42; yourself)");
    CHECK(intOf(rt, v) == 42);

    CHECK_THROWS_AS(run(rt, "function poke(d) := d zork. poke(1)"), EvaluationError);
    try {
        run(rt, "poke(2)");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("does not understand") != std::string::npos);
    }
}

TEST_CASE("cascades send every message to the same receiver") {
    Runtime rt;
    ObjectValue v = run(rt, "(Array new: 3sz) at: 0sz put: 1; at: 1sz put: 2; yourself");
    auto* array = v.as<SlotTupleObject>();
    REQUIRE(array != nullptr);
    REQUIRE(array->slots.size() == 3);
    CHECK(intOf(rt, array->slots[0]) == 1);
    CHECK(intOf(rt, array->slots[1]) == 2);
    CHECK(array->slots[2] == rt.nilValue);
}

TEST_CASE("quote yields first-class nodes; round-trips structurally") {
    Runtime rt;
    ObjectValue v = run(rt, "`'a");
    auto* ident = v.as<IdentifierNode>();
    REQUIRE(ident != nullptr);
    CHECK(ident->name->text == "a");

    ObjectValue quoted = run(rt, "`'(a + b)");
    auto* node = quoted.as<AstNode>();
    REQUIRE(node != nullptr);
    SequenceNode* reference = parseSource(rt, "a + b", "<oracle>");
    CHECK(structurallyEqual(reference->expressions[0], node));
}

TEST_CASE("quasi-quote holes insert evaluated nodes") {
    Runtime rt;
    ObjectValue v = run(rt, "let u := `'negated. ``(3 `,u)");
    auto* send = v.as<MessageSendNode>();
    REQUIRE(send != nullptr);
    CHECK(!send->isAnalyzed());

    // Hand-built oracle: 3 sent the computed selector node.
    auto* three = rt.make<LiteralNode>();
    three->value = rt.makeInteger(BigInt(3));
    auto* selector = rt.make<IdentifierNode>();
    selector->name = rt.intern("negated");
    auto* oracle = rt.make<MessageSendNode>();
    oracle->receiver = three;
    oracle->selector = selector;
    CHECK(structurallyEqual(oracle, send));

    // The constructed node is a valid program fragment.
    Analyzer analyzer(rt);
    ObjectValue evaluated = analyzer.analyzeAndEvaluate(send, rt.globalEnvironment());
    CHECK(intOf(rt, evaluated) == -3);
}

TEST_CASE("unquote outside a quasi-quote is a macro error") {
    Runtime rt;
    try {
        run(rt, "`,x");
        FAIL("expected macro error");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::MacroError);
    }
}

TEST_CASE("macro functions expand with unanalyzed nodes, then fold") {
    Runtime rt;
    ObjectValue v = run(rt, "macro function twice(x) := ``(`,x + `,x). twice(2 + 3)");
    CHECK(intOf(rt, v) == 10);

    // Expansion folds: analyzing `twice(4)` yields a literal 8.
    AstNode* folded = analyzeExpr(rt, "twice(4)");
    auto* lit = dynamic_cast<LiteralNode*>(folded);
    REQUIRE(lit != nullptr);
    CHECK(intOf(rt, lit->value) == 8);
}

TEST_CASE("macro expansion depth is bounded") {
    Runtime rt;
    run(rt, "macro function loop() := ``(loop()).");
    try {
        run(rt, "loop()");
        FAIL("expected depth limit");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::MacroError);
        CHECK(std::string(e.what()).find("depth") != std::string::npos);
    }
    // The guard unwinds: the runtime stays usable.
    CHECK(intOf(rt, run(rt, "1 + 1")) == 2);
}

TEST_CASE("let macros and control flow macros") {
    Runtime rt;
    CHECK(intOf(rt, run(rt, "let: #x with: 2. x + 1")) == 3);
    ObjectValue typed = run(rt, "let: #y type: Int32 with: 7. y");
    CHECK(rt.typeOf(typed) == rt.builtins.int32);

    CHECK(intOf(rt, run(rt, "if: 3 < 4 then: 10 else: 20")) == 10);
    CHECK(run(rt, "if: false then: 10") == rt.nilValue);

    // Only the taken branch of a top-level if is analyzed.
    CHECK(intOf(rt, run(rt, "if: true then: 42 else: zork")) == 42);

    int64_t expected = 0;
    for (int i = 0; i < 10; ++i)
        expected += i;
    CHECK(intOf(rt, run(rt, "let i mutable := 0. let acc mutable := 0. "
                            "while: i < 10 do: { acc := acc + i. i := i + 1 }. acc")) ==
          expected);
}

TEST_CASE("boolean short-circuit macros") {
    Runtime rt;
    CHECK(rt.booleanValue(run(rt, "true and: (3 < 4)")));
    CHECK(!rt.booleanValue(run(rt, "false and: zork"))); // rhs never analyzed
    CHECK(rt.booleanValue(run(rt, "true or: zork")));
    CHECK(!rt.booleanValue(run(rt, "false or: false")));
}

TEST_CASE("analysis is idempotent") {
    Runtime rt;
    run(rt, "function inc(x) := x + 1.");
    Analyzer analyzer(rt);
    AnalysisContext ctx;
    ctx.environment = rt.globalEnvironment();
    SequenceNode* seq = parseSource(rt, "inc(41)", "<test>");
    AstNode* once = analyzer.analyze(seq->expressions[0], ctx);
    AstNode* twice = analyzer.analyze(once, ctx);
    CHECK(once == twice);
    CHECK(structurallyEqual(once, twice));
}

TEST_CASE("eager definitions analyze at definition time, lazy at first call") {
    Runtime rt;
    run(rt, "eager function eagerOne(x) := x + 1. function lazyOne(x) := x + 1.");
    auto& members = rt.globalNamespace()->members;
    auto* eager = members.at(rt.intern("eagerOne")).as<FunctionEntityObject>();
    auto* lazy = members.at(rt.intern("lazyOne")).as<FunctionEntityObject>();
    REQUIRE(eager != nullptr);
    REQUIRE(lazy != nullptr);
    CHECK(eager->definition->analyzedBody != nullptr);
    CHECK(lazy->definition->analyzedBody == nullptr);
    CHECK(intOf(rt, run(rt, "lazyOne(1)")) == 2);
    CHECK(lazy->definition->analyzedBody != nullptr);
    // Both paths produce structurally identical analyzed bodies.
    CHECK(structurallyEqual(eager->definition->analyzedBody, lazy->definition->analyzedBody));
}

TEST_CASE("recursive functions work through the environment binding") {
    Runtime rt;
    ObjectValue v = run(rt, "function fact(n) := if: n <= 1 then: 1 else: n * fact(n - 1). "
                            "fact(10)");
    CHECK(intOf(rt, v) == 3628800);
}

TEST_CASE("radix literals evaluate per their base") {
    Runtime rt;
    CHECK(intOf(rt, run(rt, "16rFF1F_F2F3")) == BigInt("4280283891"));
}
