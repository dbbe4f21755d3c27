#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/errors.hpp"
#include "sysmel/primitive_encoding.hpp"
#include "sysmel/runtime.hpp"

using namespace sysmel;

TEST_CASE("symbol interning is idempotent and injective") {
    Runtime rt;
    SymbolObject* a = rt.intern("with:with:");
    SymbolObject* b = rt.intern("with:with:");
    CHECK(a == b);
    CHECK(a->internedId == b->internedId);

    SymbolObject* empty = rt.intern("");
    CHECK(empty != nullptr);
    CHECK(empty->text.empty());

    SymbolObject* plus = rt.intern("+");
    CHECK(plus != a);
    CHECK(plus->internedId != a->internedId);
}

TEST_CASE("makeObject: byte payloads, slot payloads and kind mismatch") {
    Runtime rt;
    ObjectValue hi = rt.makeObject(rt.builtins.string, std::vector<uint8_t>{'H', 'i'});
    REQUIRE(hi.isHeap());
    CHECK(hi.object()->payloadSize() == 2);
    CHECK(hi.object()->objectKind() == ObjectKind::ByteTuple);

    // A class with one slot yields a slot tuple initialized to nil.
    TypeObject* sample = rt.makeType("TestSample", rt.builtins.object, TypeKind::SlotClass);
    sample->slotLayout.push_back({rt.intern("first"), rt.builtins.int32, 0, true});
    ObjectValue instance = rt.makeObject(sample, size_t(1));
    auto* slots = instance.as<SlotTupleObject>();
    REQUIRE(slots != nullptr);
    REQUIRE(slots->slots.size() == 1);
    CHECK(slots->slots[0] == rt.nilValue);

    CHECK_THROWS_AS(rt.makeObject(sample, std::vector<uint8_t>{1}), EvaluationError);
    CHECK_THROWS_AS(rt.makeObject(rt.builtins.string, size_t(2)), EvaluationError);
}

TEST_CASE("identity hashes are distinct across allocations and stable") {
    Runtime rt;
    ObjectValue a = rt.makeObject(rt.builtins.array, size_t(0));
    ObjectValue b = rt.makeObject(rt.builtins.array, size_t(0));
    CHECK(a.object()->identityHash != b.object()->identityHash);
    uint32_t sampled = a.object()->identityHash;
    rt.makeObject(rt.builtins.array, size_t(3));
    CHECK(a.object()->identityHash == sampled);
}

TEST_CASE("environment lookup: shadowing and absence") {
    Runtime rt;
    auto* outer = rt.make<EnvironmentObject>();
    outer->bindValue(rt.intern("x"), rt.makeInteger(1), rt.builtins.integer);
    auto* inner = rt.make<EnvironmentObject>();
    inner->parent = outer;
    inner->bindValue(rt.intern("x"), rt.makeInteger(2), rt.builtins.integer);

    const Binding* binding = inner->lookup(rt.intern("x"));
    REQUIRE(binding != nullptr);
    CHECK(rt.integerValueOf(binding->value) == 2);
    CHECK(outer->lookup(rt.intern("q")) == nullptr);
}

TEST_CASE("global environment preloads the builtin names") {
    Runtime rt;
    EnvironmentObject* global = rt.globalEnvironment();
    for (const char* name :
         {"Int8", "Int16", "Int32", "Int64", "UInt8", "UInt16", "UInt32", "UInt64", "Size",
          "Float32", "Float64", "String", "Symbol", "Array", "Type", "Boolean", "ASTNode",
          "LiteralNode", "IdentifierNode", "MessageSendNode", "SequenceNode", "LambdaNode"}) {
        CAPTURE(name);
        const Binding* binding = global->lookup(rt.intern(name));
        REQUIRE(binding != nullptr);
        CHECK(binding->value.isA<TypeObject>());
    }
    const Binding* trueBinding = global->lookup(rt.intern("true"));
    REQUIRE(trueBinding != nullptr);
    CHECK(trueBinding->value == rt.trueValue);
    CHECK(rt.typeOf(trueBinding->value) == rt.builtins.booleanTrue);
    CHECK(global->lookup(rt.intern("nil"))->value == rt.nilValue);
    CHECK(global->lookup(rt.intern("void"))->value == rt.voidValue);
}

TEST_CASE("the four singletons are distinct slot tuples of distinct types") {
    Runtime rt;
    const ObjectValue values[] = {rt.nilValue, rt.trueValue, rt.falseValue, rt.voidValue};
    for (int i = 0; i < 4; ++i) {
        REQUIRE(values[i].isHeap());
        CHECK(values[i].object()->objectKind() == ObjectKind::SlotTuple);
        for (int j = i + 1; j < 4; ++j) {
            CHECK(values[i] != values[j]);
            CHECK(rt.typeOf(values[i]) != rt.typeOf(values[j]));
        }
    }
}

TEST_CASE("small integer immediates cover the signed 61-bit range") {
    Runtime rt;
    BigInt maxImmediate = (BigInt(1) << 60) - 1;
    BigInt minImmediate = -(BigInt(1) << 60);
    CHECK(rt.makeInteger(maxImmediate).isSmallInt());
    CHECK(rt.makeInteger(minImmediate).isSmallInt());
    ObjectValue boxedHigh = rt.makeInteger(maxImmediate + 1);
    ObjectValue boxedLow = rt.makeInteger(minImmediate - 1);
    CHECK(!boxedHigh.isSmallInt());
    CHECK(!boxedLow.isSmallInt());
    CHECK(rt.integerValueOf(boxedHigh) == maxImmediate + 1);
    CHECK(rt.integerValueOf(boxedLow) == minImmediate - 1);
}

TEST_CASE("primitive encoding: two's-complement wrap against arithmetic oracle") {
    // Oracle: int8_t arithmetic done by the host.
    for (int v : {0, 1, 127, 128, 200, 255, 256, -1, -128, -129, 1000, -1000}) {
        CAPTURE(v);
        BigInt wrapped = wrapToWidth(BigInt(v), 8, true);
        CHECK(wrapped == BigInt(int8_t(v)));
        BigInt unsignedWrapped = wrapToWidth(BigInt(v), 8, false);
        CHECK(unsignedWrapped == BigInt(uint8_t(v)));
    }
    // Round-trip through the little-endian byte encoding.
    for (int64_t v : {int64_t(0), int64_t(1), int64_t(-1), int64_t(0x7fffffffffffffff),
                      int64_t(-0x123456789abcdef0)}) {
        auto bytes = encodeIntegerLE(BigInt(v), 64);
        CHECK(decodeIntegerLE(bytes, true) == BigInt(v));
    }
}

TEST_CASE("primitive-typed values unbox to their numeric value") {
    Runtime rt;
    ObjectValue v = rt.makePrimitiveInteger(BigInt(300), rt.builtins.uint8);
    CHECK(rt.integerValueOf(v) == 44); // 300 mod 256
    CHECK(rt.typeOf(v) == rt.builtins.uint8);

    ObjectValue f = rt.makeFloat(2.5, rt.builtins.float32);
    CHECK(rt.floatValue(f) == doctest::Approx(2.5));
    CHECK(rt.printString(v) == "44");
}

TEST_CASE("print strings of common values") {
    Runtime rt;
    CHECK(rt.printString(rt.makeInteger(5)) == "5");
    CHECK(rt.printString(rt.nilValue) == "nil");
    CHECK(rt.printString(rt.trueValue) == "true");
    CHECK(rt.printString(rt.makeString("Hi")) == "Hi");
    CHECK(rt.printString(ObjectValue::heap(rt.intern("sym"))) == "#sym");
    CHECK(rt.printString(ObjectValue::heap(rt.builtins.int32)) == "Int32");
}

TEST_CASE("reference and pointer derived types") {
    Runtime rt;
    TypeObject* ref = rt.makeReferenceType(rt.builtins.int32);
    CHECK(ref->typeKind == TypeKind::ReferenceTo);
    CHECK(ref->baseType == rt.builtins.int32);
    // Memoized: the same derived type object comes back.
    CHECK(rt.makeReferenceType(rt.builtins.int32) == ref);
    // References respond only to := and address.
    CHECK(lookupMethod(ref, rt.intern(":=")) != nullptr);
    CHECK(lookupMethod(ref, rt.intern("address")) != nullptr);
    CHECK(lookupMethod(ref, rt.intern("+")) == nullptr);
    CHECK(lookupMethod(ref, rt.intern("printString")) == nullptr);
    // Reference-to-reference is rejected.
    CHECK_THROWS_AS(rt.makeReferenceType(ref), EvaluationError);

    TypeObject* ptr = rt.makePointerType(rt.builtins.int32);
    CHECK(lookupMethod(ptr, rt.intern("_")) != nullptr);
    CHECK(lookupMethod(ptr, rt.intern(":=")) == nullptr);
}

TEST_CASE("cells expose load and store through locations") {
    Runtime rt;
    TypeObject* ref = rt.makeReferenceType(rt.builtins.integer);
    LocationObject* cell = rt.makeCell(rt.makeInteger(7), ref);
    CHECK(rt.integerValueOf(cell->location.load()) == 7);
    cell->location.store(rt.makeInteger(9));
    CHECK(rt.integerValueOf(cell->location.load()) == 9);
}
