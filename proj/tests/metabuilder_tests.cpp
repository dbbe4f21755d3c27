#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/program_entity.hpp"
#include "sysmel/runtime.hpp"

using namespace sysmel;

namespace {

ObjectValue run(Runtime& rt, const std::string& source) {
    Analyzer analyzer(rt);
    return analyzer.analyzeAndEvaluate(parseSource(rt, source, "<test>"),
                                       rt.globalEnvironment());
}

constexpr const char* sampleClassSource =
    "public class SampleClass\n"
    "  superclass: Object; definition: {\n"
    "    public field first => Int32.\n"
    "    public method add: (x: Int32) ::=> Int32\n"
    "        := first + x.\n"
    "}.\n";

} // namespace

TEST_CASE("class builder produces slot layout, methods and accessors") {
    Runtime rt;
    run(rt, sampleClassSource);

    const Binding* binding = rt.globalEnvironment()->lookup(rt.intern("SampleClass"));
    REQUIRE(binding != nullptr);
    auto* cls = binding->value.as<TypeObject>();
    REQUIRE(cls != nullptr);
    CHECK(cls->supertype == rt.builtins.object);

    REQUIRE(cls->slotLayout.size() == 1);
    CHECK(cls->slotLayout[0].name->text == "first");
    CHECK(cls->slotLayout[0].type == rt.builtins.int32);
    CHECK(cls->slotLayout[0].index == 0);

    // Declared method plus synthesized accessors.
    const MethodEntry* add = lookupSelector(cls, rt.intern("add:"));
    REQUIRE(add != nullptr);
    CHECK(!add->staticDispatch); // overridable in subclasses
    CHECK(lookupSelector(cls, rt.intern("first")) != nullptr);
    CHECK(lookupSelector(cls, rt.intern("first:")) != nullptr);

    // Accessors round-trip a value through the slot.
    ObjectValue v = run(rt, "let s := SampleClass new. s first: 9i32. s first");
    CHECK(rt.primitiveIntValue(v, rt.builtins.int32) == 9);
}

TEST_CASE("builder-defined class matches a manually assembled one") {
    Runtime rt;
    run(rt, sampleClassSource);
    auto* built = rt.globalEnvironment()->lookup(rt.intern("SampleClass"))->value.as<TypeObject>();

    // Manual assembly through the type-system primitives.
    TypeObject* manual = rt.makeType("ManualSample", rt.builtins.object, TypeKind::SlotClass);
    manual->slotLayout.push_back({rt.intern("first"), rt.builtins.int32, 0, true});

    // Identical instance layout: same slot count, same nil initialization.
    ObjectValue builtInstance = rt.makeObject(built, built->slotLayout.size());
    ObjectValue manualInstance = rt.makeObject(manual, manual->slotLayout.size());
    auto* builtSlots = builtInstance.as<SlotTupleObject>();
    auto* manualSlots = manualInstance.as<SlotTupleObject>();
    REQUIRE(builtSlots != nullptr);
    REQUIRE(manualSlots != nullptr);
    CHECK(builtSlots->slots.size() == manualSlots->slots.size());
    CHECK(builtSlots->slots[0] == rt.nilValue);
    CHECK(manualSlots->slots[0] == rt.nilValue);

    // Identical lookup behavior on inherited selectors.
    SymbolObject* yourself = rt.intern("yourself");
    CHECK(lookupSelector(built, yourself) == lookupSelector(manual, yourself));

    // The builder's accessor writes the same slot a direct store would.
    ObjectValue viaAccessor = run(rt, "let a := SampleClass new. a first: 3i32. a");
    builtSlots = viaAccessor.as<SlotTupleObject>();
    REQUIRE(builtSlots != nullptr);
    CHECK(rt.primitiveIntValue(builtSlots->slots[0], rt.builtins.int32) == 3);
}

TEST_CASE("function builder registers arity and result type") {
    Runtime rt;
    run(rt, "function addBoth(x: Int32, y: Int32) => Int32 := x + y.");
    auto* entity =
        rt.globalNamespace()->members.at(rt.intern("addBoth")).as<FunctionEntityObject>();
    REQUIRE(entity != nullptr);
    CHECK(entity->definition->parameters.size() == 2);
    CHECK(entity->definition->parameters[0].type == rt.builtins.int32);
    CHECK(entity->definition->resultType == rt.builtins.int32);
    CHECK(!entity->isPublic);
    CHECK(rt.primitiveIntValue(run(rt, "addBoth(20i32, 22i32)"), rt.builtins.int32) == 42);
}

TEST_CASE("entities are reachable from the global namespace") {
    Runtime rt;
    run(rt, sampleClassSource);
    run(rt, "public function fortyTwo() => Int32 := 42i32.");

    auto& members = rt.globalNamespace()->members;
    auto* classEntity = members.at(rt.intern("SampleClass")).as<ClassEntityObject>();
    REQUIRE(classEntity != nullptr);
    CHECK(classEntity->isPublic);
    CHECK(classEntity->classType ==
          rt.globalEnvironment()->lookup(rt.intern("SampleClass"))->value.as<TypeObject>());

    auto* fnEntity = members.at(rt.intern("fortyTwo")).as<FunctionEntityObject>();
    REQUIRE(fnEntity != nullptr);
    CHECK(fnEntity->isPublic);
    CHECK(fnEntity->definition != nullptr);
}

TEST_CASE("methods on builder classes dispatch dynamically") {
    Runtime rt;
    run(rt, "class Base superclass: Object; definition: {\n"
            "  public method val ::=> Int32 := 1i32.\n"
            "}.\n"
            "class Derived superclass: Base; definition: {\n"
            "  public method val ::=> Int32 := 2i32.\n"
            "}.\n"
            "function getVal(b: Base) => Int32 := b val.");
    CHECK(rt.primitiveIntValue(run(rt, "getVal(Base new)"), rt.builtins.int32) == 1);
    CHECK(rt.primitiveIntValue(run(rt, "getVal(Derived new)"), rt.builtins.int32) == 2);
}

TEST_CASE("subclass slot layouts extend the superclass layout") {
    Runtime rt;
    run(rt, "class Point2 superclass: Object; definition: {\n"
            "  public field x => Int32.\n"
            "  public field y => Int32.\n"
            "}.\n"
            "class Point3 superclass: Point2; definition: {\n"
            "  public field z => Int32.\n"
            "}.");
    auto* p3 = rt.globalEnvironment()->lookup(rt.intern("Point3"))->value.as<TypeObject>();
    REQUIRE(p3 != nullptr);
    REQUIRE(p3->slotLayout.size() == 3);
    CHECK(p3->slotLayout[2].name->text == "z");
    CHECK(p3->slotLayout[2].index == 2);

    // Inherited accessors address the right slots on the subclass.
    ObjectValue v = run(rt, "let p := Point3 new. p x: 1i32. p y: 2i32. p z: 3i32. "
                            "p x + p y + p z");
    CHECK(rt.primitiveIntValue(v, rt.builtins.int32) == 6);
}

TEST_CASE("duplicate fields are rejected") {
    Runtime rt;
    try {
        run(rt, "class Dup superclass: Object; definition: {\n"
                "  public field a => Int32.\n"
                "  public field a => Int32.\n"
                "}.");
        FAIL("expected duplicate-field error");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::MacroError);
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
}

TEST_CASE("messages after a builder finishes are errors") {
    Runtime rt;
    try {
        run(rt, "class Late superclass: Object; definition: {}; superclass: Object.");
        FAIL("expected send-after-finish error");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::MacroError);
        CHECK(e.position.line == 1);
    }
}

TEST_CASE("builder chains require a literal builder receiver") {
    Runtime rt;
    // Inside a function body, a builder stored in a local is read back
    // through a non-literal reference node, so analysis must refuse it.
    try {
        run(rt, "function mk() := { let b := class. b Thing }. mk()");
        FAIL("expected literal-receiver diagnostic");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::MacroError);
        CHECK(std::string(e.what()).find("literal builder") != std::string::npos);
    }
}

TEST_CASE("declarations appear only in legal scopes") {
    Runtime rt;
    // field outside a class definition block
    CHECK_THROWS_AS(run(rt, "field stray => Int32"), SemanticError);
    // class definition inside a function body (surfaces when the lazy
    // body is analyzed at the first call)
    CHECK_THROWS_AS(
        run(rt, "function bad() := class Inner superclass: Object; definition: {}. bad()"),
        SemanticError);
    // unknown superclass
    try {
        run(rt, "class Orphan superclass: Zork; definition: {}.");
        FAIL("expected unbound superclass error");
    } catch (const SemanticError& e) {
        CHECK(e.kind == SemanticError::Kind::UnboundIdentifier);
    }
    // incomplete declarations
    CHECK_THROWS_AS(run(rt, "let nameOnly"), SemanticError);
    CHECK_THROWS_AS(run(rt, "public"), SemanticError);
    CHECK_THROWS_AS(run(rt, "function headless(x: Int32) => Int32"), SemanticError);
}

TEST_CASE("let builder forms: plain, typed, mutable") {
    Runtime rt;
    CHECK(rt.integerValueOf(run(rt, "let a := 41. a + 1")) == 42);
    ObjectValue typed = run(rt, "let t type: Int32 := 7. t");
    CHECK(rt.typeOf(typed) == rt.builtins.int32);
    CHECK(rt.integerValueOf(run(rt, "let m mutable := 1. m := m + 9. m")) == 10);
}

TEST_CASE("macro and pure modifiers reach function definitions") {
    Runtime rt;
    ObjectValue v = run(rt, "macro function double(x) := ``(`,x + `,x). double(3 * 4)");
    CHECK(rt.integerValueOf(v) == 24);

    run(rt, "pure function triple(x) := x * 3.");
    auto* entity =
        rt.globalNamespace()->members.at(rt.intern("triple")).as<FunctionEntityObject>();
    REQUIRE(entity != nullptr);
    CHECK(entity->definition->isPure());
}
