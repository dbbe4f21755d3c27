#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/runtime.hpp"

using namespace sysmel;

namespace {

ObjectValue run(Runtime& rt, const std::string& source) {
    Analyzer analyzer(rt);
    return analyzer.analyzeAndEvaluate(parseSource(rt, source, "<test>"),
                                       rt.globalEnvironment());
}

AstNode* analyzeExpr(Runtime& rt, const std::string& source) {
    SequenceNode* seq = parseSource(rt, source, "<test>");
    REQUIRE(seq->expressions.size() == 1);
    Analyzer analyzer(rt);
    AnalysisContext ctx;
    ctx.environment = rt.globalEnvironment();
    return analyzer.analyze(seq->expressions[0], ctx);
}

} // namespace

TEST_CASE("selector lookup walks the supertype chain, first hit wins") {
    Runtime rt;
    const MethodEntry* add = lookupSelector(rt.builtins.int32, rt.intern("+"));
    REQUIRE(add != nullptr);
    CHECK(add->staticDispatch);
    CHECK(add->pure);
    CHECK(!add->isMacro);

    CHECK(lookupSelector(rt.builtins.int32, rt.intern("nonexistent")) == nullptr);

    // Monotonicity: a miss on the type equals the supertype's result.
    TypeObject* sub = rt.makeType("LookupSub", rt.builtins.int32, TypeKind::SlotClass);
    SymbolObject* yourself = rt.intern("yourself");
    CHECK(lookupSelector(sub, yourself) == lookupSelector(rt.builtins.int32, yourself));
    CHECK(lookupSelector(sub, rt.intern("+")) ==
          lookupSelector(rt.builtins.int32, rt.intern("+")));
}

TEST_CASE("reference types are memoized and answer only := and address") {
    Runtime rt;
    TypeObject* refInt = rt.makeReferenceType(rt.builtins.int32);
    CHECK(refInt == rt.makeReferenceType(rt.builtins.int32));
    CHECK(refInt->typeKind == TypeKind::ReferenceTo);
    CHECK(refInt->baseType == rt.builtins.int32);

    CHECK(refInt->methodDictionary.size() == 2);
    CHECK(refInt->methodDictionary.count(rt.intern(":=")) == 1);
    CHECK(refInt->methodDictionary.count(rt.intern("address")) == 1);
    CHECK(lookupSelector(refInt, rt.intern("+")) == nullptr);

    CHECK_THROWS_AS(rt.makeReferenceType(refInt), EvaluationError);
}

TEST_CASE("pointer types are memoized and answer _") {
    Runtime rt;
    TypeObject* ptrInt = rt.makePointerType(rt.builtins.int32);
    CHECK(ptrInt == rt.makePointerType(rt.builtins.int32));
    CHECK(ptrInt->methodDictionary.count(rt.intern("_")) == 1);
    CHECK(lookupSelector(ptrInt, rt.intern("+")) == nullptr);
}

TEST_CASE("reference store, auto-load, and pointer round trip") {
    Runtime rt;
    // Mutable-counter oracle for store/load semantics.
    CHECK(rt.integerValueOf(run(rt, "let n mutable := 0. n := n + 1. n := n + 1. n")) == 2);

    // The store expression's value is the stored value.
    CHECK(rt.integerValueOf(run(rt, "let m mutable := 1. m := 5")) == 5);

    // & and * equivalents: address / _
    ObjectValue v = run(rt, "let x mutable := 1i32. let p := x address. p _ := 7i32. x");
    CHECK(rt.primitiveIntValue(v, rt.builtins.int32) == 7);

    // The pointer's type is the memoized derived type.
    ObjectValue p = run(rt, "let w mutable := 1i32. w address");
    CHECK(rt.typeOf(p) == rt.makePointerType(rt.builtins.int32));
}

TEST_CASE("derived type constructors fold to memoized literal types") {
    Runtime rt;
    AstNode* node = analyzeExpr(rt, "Int32 pointer");
    auto* lit = dynamic_cast<LiteralNode*>(node);
    REQUIRE(lit != nullptr);
    CHECK(lit->value.as<TypeObject>() == rt.makePointerType(rt.builtins.int32));

    AstNode* refNode = analyzeExpr(rt, "Int32 ref");
    auto* refLit = dynamic_cast<LiteralNode*>(refNode);
    REQUIRE(refLit != nullptr);
    CHECK(refLit->value.as<TypeObject>() == rt.makeReferenceType(rt.builtins.int32));

    // Folding is idempotent.
    Analyzer analyzer(rt);
    AnalysisContext ctx;
    ctx.environment = rt.globalEnvironment();
    CHECK(analyzer.analyze(node, ctx) == node);

    // Reference-to-reference is rejected at analysis time.
    CHECK_THROWS_AS(analyzeExpr(rt, "Int32 ref ref"), SemanticError);
}

TEST_CASE("fixed-width integer arithmetic wraps two's complement") {
    Runtime rt;
    // Oracle: (255 + 1) mod 2^8 == 0.
    ObjectValue wrapped = run(rt, "255u8 + 1u8");
    CHECK(rt.typeOf(wrapped) == rt.builtins.uint8);
    CHECK(rt.integerValueOf(wrapped) == ((255 + 1) % 256));

    // Signed wrap: 127i8 + 1i8 → -128.
    ObjectValue signedWrap = run(rt, "127i8 + 1i8");
    CHECK(rt.primitiveIntValue(signedWrap, rt.builtins.int8) == -128);

    ObjectValue conv = run(rt, "(2 + 3) asUInt8");
    CHECK(rt.typeOf(conv) == rt.builtins.uint8);
    CHECK(rt.integerValueOf(conv) == 5);
}

TEST_CASE("primitive integer operation coverage") {
    Runtime rt;
    CHECK(rt.primitiveIntValue(run(rt, "7i32 // 2i32"), rt.builtins.int32) == 3);
    CHECK(rt.primitiveIntValue(run(rt, "7i32 \\\\ 2i32"), rt.builtins.int32) == 1);
    CHECK(rt.primitiveIntValue(run(rt, "0i32 - 7i32 // 2i32"), rt.builtins.int32) == -3);
    CHECK(rt.primitiveIntValue(run(rt, "12i32 bitAnd: 10i32"), rt.builtins.int32) == (12 & 10));
    CHECK(rt.primitiveIntValue(run(rt, "12i32 bitOr: 10i32"), rt.builtins.int32) == (12 | 10));
    CHECK(rt.primitiveIntValue(run(rt, "12i32 bitXor: 10i32"), rt.builtins.int32) == (12 ^ 10));
    CHECK(rt.primitiveIntValue(run(rt, "1i32 << 4i32"), rt.builtins.int32) == 16);
    CHECK(rt.primitiveIntValue(run(rt, "32i32 >> 2i32"), rt.builtins.int32) == 8);
    CHECK(rt.primitiveIntValue(run(rt, "5i32 negated"), rt.builtins.int32) == -5);
    CHECK(rt.booleanValue(run(rt, "3i32 < 4i32")));
    CHECK(rt.booleanValue(run(rt, "4i32 >= 4i32")));
    CHECK(rt.booleanValue(run(rt, "3i32 ~= 4i32")));
    CHECK(!rt.booleanValue(run(rt, "3i32 = 4i32")));
    CHECK(rt.primitiveIntValue(run(rt, "3i32 asInt64"), rt.builtins.int64) == 3);
    double f = rt.floatValue(run(rt, "3i32 asFloat64"));
    CHECK(f == 3.0);
}

TEST_CASE("intrinsic purity makes folding deterministic") {
    Runtime rt;
    AstNode* a = analyzeExpr(rt, "6i32 * 7i32");
    AstNode* b = analyzeExpr(rt, "6i32 * 7i32");
    auto* litA = dynamic_cast<LiteralNode*>(a);
    auto* litB = dynamic_cast<LiteralNode*>(b);
    REQUIRE(litA != nullptr);
    REQUIRE(litB != nullptr);
    CHECK(rt.integerValueOf(litA->value) == rt.integerValueOf(litB->value));
    CHECK(rt.integerValueOf(litA->value) == 42);
}

TEST_CASE("dynamic type accepts any send; misses surface at runtime") {
    Runtime rt;
    run(rt, "function sendZork(d) := d zork.");
    // Analysis accepts the dynamic send...
    CHECK_NOTHROW(run(rt, "let probe := sendZork."));
    // ...and the failure is a runtime does-not-understand.
    CHECK_THROWS_AS(run(rt, "sendZork(3)"), EvaluationError);
}

TEST_CASE("size type is unsigned 64-bit") {
    Runtime rt;
    CHECK(rt.builtins.size->bits == 64);
    CHECK(!rt.builtins.size->isSigned);
    ObjectValue sz = run(rt, "16sz");
    CHECK(rt.typeOf(sz) == rt.builtins.size);
}
