#include "sysmel/runtime.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/primitive_encoding.hpp"

#include <iostream>
#include <sstream>

namespace sysmel {

void installIntrinsics(Runtime& rt);           // intrinsics.cpp
void installNativeMacros(Runtime& rt);         // analyzer.cpp
void installMetabuilderFactories(Runtime& rt); // metabuilder.cpp

ActivationDepthGuard::ActivationDepthGuard(Runtime& rt) : runtime(rt) {
    if (++runtime.activationDepth > Runtime::maxActivationDepth) {
        --runtime.activationDepth;
        throw EvaluationError("call stack depth limit exceeded");
    }
}
ActivationDepthGuard::~ActivationDepthGuard() { --runtime.activationDepth; }

Runtime::Runtime() {
    setupBuiltins();
    for (const auto& [name, value] : builtinsByName_)
        baselineBuiltins_.insert(name);
}

Runtime::~Runtime() = default;

std::ostream& Runtime::out() { return output ? *output : std::cout; }

SymbolObject* Runtime::intern(const std::string& text) {
    auto it = symbols_.find(text);
    if (it != symbols_.end())
        return it->second;
    auto* sym = make<SymbolObject>();
    sym->text = text;
    sym->internedId = nextSymbolId_++;
    sym->type = builtins.symbol; // null during early setup, patched below
    symbols_[text] = sym;
    return sym;
}

TypeObject* Runtime::makeType(const std::string& name, TypeObject* supertype, TypeKind kind) {
    auto* type = make<TypeObject>();
    type->name = intern(name);
    type->supertype = supertype;
    type->typeKind = kind;
    type->type = builtins.type;
    registerBuiltin(name, ObjectValue::heap(type));
    return type;
}

ObjectValue Runtime::makeObject(TypeObject* type, std::vector<uint8_t> bytes) {
    bool wantsBytes = type->instancesAreBytes || type->typeKind == TypeKind::PrimitiveInteger ||
                      type->typeKind == TypeKind::PrimitiveFloat;
    if (!wantsBytes)
        throw EvaluationError("type " + type->name->text + " does not have byte instances");
    auto* obj = make<ByteTupleObject>();
    obj->type = type;
    obj->bytes = std::move(bytes);
    return ObjectValue::heap(obj);
}

ObjectValue Runtime::makeObject(TypeObject* type, size_t slotCount) {
    return makeObject(type, std::vector<ObjectValue>(slotCount, nilValue));
}

ObjectValue Runtime::makeObject(TypeObject* type, std::vector<ObjectValue> slots) {
    bool wantsBytes = type->instancesAreBytes || type->typeKind == TypeKind::PrimitiveInteger ||
                      type->typeKind == TypeKind::PrimitiveFloat;
    if (wantsBytes)
        throw EvaluationError("type " + type->name->text + " has byte instances, not slots");
    auto* obj = make<SlotTupleObject>();
    obj->type = type;
    obj->slots = std::move(slots);
    return ObjectValue::heap(obj);
}

ObjectValue Runtime::makeString(const std::string& text) {
    auto* obj = make<ByteTupleObject>();
    obj->type = builtins.string;
    obj->bytes.assign(text.begin(), text.end());
    return ObjectValue::heap(obj);
}

ObjectValue Runtime::makeInteger(const BigInt& value) {
    if (ObjectValue::fitsSmallInt(value))
        return ObjectValue::smallInt(value.convert_to<int64_t>());
    auto* obj = make<BigIntObject>();
    obj->type = builtins.integer;
    obj->value = value;
    return ObjectValue::heap(obj);
}

ObjectValue Runtime::makeFloat(double value, TypeObject* type) {
    auto* obj = make<ByteTupleObject>();
    obj->type = type;
    obj->bytes = encodeFloatLE(value, type->bits);
    return ObjectValue::heap(obj);
}

ObjectValue Runtime::makePrimitiveInteger(const BigInt& value, TypeObject* type) {
    auto* obj = make<ByteTupleObject>();
    obj->type = type;
    obj->bytes = encodeIntegerLE(wrapToWidth(value, type->bits, type->isSigned), type->bits);
    return ObjectValue::heap(obj);
}

ObjectValue Runtime::makeBoolean(bool value) { return value ? trueValue : falseValue; }

LocationObject* Runtime::makeCell(ObjectValue initial, TypeObject* refType) {
    auto* cell = make<SlotTupleObject>();
    cell->type = builtins.cell;
    cell->slots.push_back(initial);
    auto* loc = make<LocationObject>();
    loc->type = refType;
    loc->location = {cell, 0};
    return loc;
}

TypeObject* Runtime::typeOf(const ObjectValue& value) {
    switch (value.kind()) {
    case ObjectValue::Kind::SmallInt:
        return builtins.integer;
    case ObjectValue::Kind::Char:
        return builtins.character;
    case ObjectValue::Kind::Heap: {
        Object* o = value.object();
        if (!o)
            return builtins.undefinedObject;
        return o->type ? o->type : builtins.dynamic;
    }
    }
    return builtins.dynamic;
}

BigInt Runtime::integerValueOf(const ObjectValue& value) const {
    if (value.isSmallInt())
        return BigInt(value.smallIntValue());
    if (value.isChar())
        return BigInt(uint32_t(value.charValue()));
    if (auto* big = value.as<BigIntObject>())
        return big->value;
    if (auto* bytes = value.as<ByteTupleObject>()) {
        TypeObject* t = bytes->type;
        if (t && t->typeKind == TypeKind::PrimitiveInteger)
            return decodeIntegerLE(bytes->bytes, t->isSigned);
    }
    throw EvaluationError("value is not an integer");
}

int64_t Runtime::primitiveIntValue(const ObjectValue& value, TypeObject* type) const {
    (void)type;
    return integerValueOf(value).convert_to<int64_t>();
}

double Runtime::floatValue(const ObjectValue& value) const {
    if (auto* bytes = value.as<ByteTupleObject>()) {
        TypeObject* t = bytes->type;
        if (t && t->typeKind == TypeKind::PrimitiveFloat)
            return decodeFloatLE(bytes->bytes);
    }
    if (value.isSmallInt())
        return double(value.smallIntValue());
    if (auto* big = value.as<BigIntObject>())
        return big->value.convert_to<double>();
    throw EvaluationError("value is not a float");
}

bool Runtime::booleanValue(const ObjectValue& value) const {
    if (value == trueValue)
        return true;
    if (value == falseValue)
        return false;
    throw EvaluationError("value is not a boolean");
}

bool Runtime::isPrimitiveIntegerType(const TypeObject* t) const {
    return t && t->typeKind == TypeKind::PrimitiveInteger;
}
bool Runtime::isPrimitiveFloatType(const TypeObject* t) const {
    return t && t->typeKind == TypeKind::PrimitiveFloat;
}
bool Runtime::isNumericPrimitive(const TypeObject* t) const {
    return isPrimitiveIntegerType(t) || isPrimitiveFloatType(t);
}

std::string Runtime::printString(const ObjectValue& value) {
    if (value.isSmallInt())
        return std::to_string(value.smallIntValue());
    if (value.isChar())
        return std::string(1, char(value.charValue()));
    Object* o = value.object();
    if (!o)
        return "nil";
    if (value == nilValue)
        return "nil";
    if (value == trueValue)
        return "true";
    if (value == falseValue)
        return "false";
    if (value == voidValue)
        return "void";
    if (auto* big = dynamic_cast<BigIntObject*>(o))
        return big->value.str();
    if (auto* sym = dynamic_cast<SymbolObject*>(o))
        return "#" + sym->text;
    if (auto* type = dynamic_cast<TypeObject*>(o)) {
        if (type->typeKind == TypeKind::ReferenceTo && type->baseType && type->baseType->name)
            return type->baseType->name->text + " ref";
        if (type->typeKind == TypeKind::PointerTo && type->baseType && type->baseType->name)
            return type->baseType->name->text + " pointer";
        return type->name ? type->name->text : "a Type";
    }
    if (auto* bytes = dynamic_cast<ByteTupleObject*>(o)) {
        TypeObject* t = bytes->type;
        if (t && t->typeKind == TypeKind::PrimitiveInteger)
            return decodeIntegerLE(bytes->bytes, t->isSigned).str();
        if (t && t->typeKind == TypeKind::PrimitiveFloat) {
            std::ostringstream out;
            out.precision(17);
            out << decodeFloatLE(bytes->bytes);
            return out.str();
        }
        if (t == builtins.byteArray) {
            std::string result = "#[";
            for (size_t i = 0; i < bytes->bytes.size(); ++i) {
                if (i)
                    result += " ";
                result += std::to_string(bytes->bytes[i]);
            }
            return result + "]";
        }
        return bytes->asString();
    }
    if (auto* node = dynamic_cast<AstNode*>(o))
        return std::string("node:") + nodeKindName(node->nodeKind);
    if (auto* closure = dynamic_cast<ClosureObject*>(o)) {
        (void)closure;
        return "a Closure";
    }
    if (auto* def = dynamic_cast<FunctionDefinitionObject*>(o))
        return def->name ? "function " + def->name->text : "a Function";
    if (auto* fn = dynamic_cast<IntrinsicFunctionObject*>(o))
        return "intrinsic " + (fn->name ? fn->name->text : std::string("?"));
    if (auto* ns = dynamic_cast<NamespaceObject*>(o))
        return ns->name ? "namespace " + ns->name->text : "a Namespace";
    if (auto* loc = dynamic_cast<LocationObject*>(o)) {
        TypeObject* t = loc->type;
        bool isPointer = t && t->typeKind == TypeKind::PointerTo;
        return isPointer ? "a Pointer" : "a Reference";
    }
    if (auto* tuple = dynamic_cast<SlotTupleObject*>(o)) {
        TypeObject* t = tuple->type;
        if (t == builtins.array || t == builtins.tuple) {
            const char* separator = t == builtins.tuple ? ", " : " ";
            std::string result = "(";
            for (size_t i = 0; i < tuple->slots.size(); ++i) {
                if (i)
                    result += separator;
                result += printString(tuple->slots[i]);
            }
            return result + ")";
        }
        if (t == builtins.dictionary) {
            std::string result = "#{";
            for (size_t i = 0; i + 1 < tuple->slots.size(); i += 2) {
                if (i)
                    result += ". ";
                result += printString(tuple->slots[i]) + ": " + printString(tuple->slots[i + 1]);
            }
            return result + "}";
        }
        if (t && t->name) {
            const std::string& n = t->name->text;
            bool vowel = !n.empty() && std::string("AEIOU").find(n[0]) != std::string::npos;
            return (vowel ? "an " : "a ") + n;
        }
    }
    return "an Object";
}

TypeObject* Runtime::makeReferenceType(TypeObject* base) {
    if (base->typeKind == TypeKind::ReferenceTo)
        throw EvaluationError("cannot form a reference to a reference type");
    if (base->referenceTypeMemo)
        return base->referenceTypeMemo;
    auto* type = make<TypeObject>();
    type->name = intern((base->name ? base->name->text : std::string("?")) + " ref");
    type->typeKind = TypeKind::ReferenceTo;
    type->baseType = base;
    type->type = builtins.type;
    // References respond to almost nothing: just store and address-of.
    MethodEntry store;
    store.selector = intern(":=");
    store.target = builtinNamed("refStore");
    type->methodDictionary[store.selector] = store;
    MethodEntry address;
    address.selector = intern("address");
    address.target = builtinNamed("refAddress");
    type->methodDictionary[address.selector] = address;
    base->referenceTypeMemo = type;
    return type;
}

TypeObject* Runtime::makePointerType(TypeObject* base) {
    if (base->pointerTypeMemo)
        return base->pointerTypeMemo;
    auto* type = make<TypeObject>();
    type->name = intern((base->name ? base->name->text : std::string("?")) + " pointer");
    type->typeKind = TypeKind::PointerTo;
    type->baseType = base;
    type->type = builtins.type;
    MethodEntry deref;
    deref.selector = intern("_");
    deref.target = builtinNamed("pointerDeref");
    type->methodDictionary[deref.selector] = deref;
    base->pointerTypeMemo = type;
    return type;
}

TypeObject* Runtime::astNodeClassFor(NodeKind kind) {
    auto it = builtins.astNodeClasses.find(int(kind));
    return it != builtins.astNodeClasses.end() ? it->second : builtins.astNode;
}

IntrinsicFunctionObject* Runtime::intrinsicNamed(const std::string& name) {
    auto it = intrinsics_.find(name);
    return it != intrinsics_.end() ? it->second : nullptr;
}

void Runtime::registerIntrinsic(IntrinsicFunctionObject* fn) {
    intrinsics_[fn->name->text] = fn;
    builtinsByName_[fn->name->text] = ObjectValue::heap(fn);
}

ObjectValue Runtime::builtinNamed(const std::string& name) {
    auto it = builtinsByName_.find(name);
    if (it == builtinsByName_.end())
        throw EvaluationError("unknown builtin: " + name);
    return it->second;
}

void Runtime::registerBuiltin(const std::string& name, ObjectValue value) {
    builtinsByName_[name] = value;
}

void Runtime::setupBuiltins() {
    // The class Type is an instance of itself.
    builtins.type = make<TypeObject>();
    builtins.type->typeKind = TypeKind::TypeOfTypes;
    builtins.type->type = builtins.type;

    builtins.object = makeType("Object", nullptr, TypeKind::SlotClass);
    builtins.type->name = intern("Type");
    builtins.type->supertype = builtins.object;
    registerBuiltin("Type", ObjectValue::heap(builtins.type));

    builtins.dynamic = makeType("Dynamic", nullptr, TypeKind::Dynamic);
    builtins.undefinedObject = makeType("UndefinedObject", builtins.object, TypeKind::Singleton);
    builtins.voidType = makeType("Void", builtins.object, TypeKind::Singleton);
    builtins.boolean = makeType("Boolean", builtins.object, TypeKind::SlotClass);
    builtins.booleanTrue = makeType("True", builtins.boolean, TypeKind::Singleton);
    builtins.booleanFalse = makeType("False", builtins.boolean, TypeKind::Singleton);
    builtins.integer = makeType("Integer", builtins.object, TypeKind::SlotClass);
    builtins.integer->instancesAreBytes = true;
    builtins.character = makeType("Character", builtins.object, TypeKind::SlotClass);

    auto makeInt = [&](const char* name, int bits, bool isSigned) {
        TypeObject* t = makeType(name, builtins.object, TypeKind::PrimitiveInteger);
        t->bits = bits;
        t->isSigned = isSigned;
        t->isFinal = true;
        return t;
    };
    builtins.int8 = makeInt("Int8", 8, true);
    builtins.int16 = makeInt("Int16", 16, true);
    builtins.int32 = makeInt("Int32", 32, true);
    builtins.int64 = makeInt("Int64", 64, true);
    builtins.uint8 = makeInt("UInt8", 8, false);
    builtins.uint16 = makeInt("UInt16", 16, false);
    builtins.uint32 = makeInt("UInt32", 32, false);
    builtins.uint64 = makeInt("UInt64", 64, false);
    builtins.size = makeInt("Size", 64, false);

    builtins.float32 = makeType("Float32", builtins.object, TypeKind::PrimitiveFloat);
    builtins.float32->bits = 32;
    builtins.float32->isFinal = true;
    builtins.float64 = makeType("Float64", builtins.object, TypeKind::PrimitiveFloat);
    builtins.float64->bits = 64;
    builtins.float64->isFinal = true;

    builtins.string = makeType("String", builtins.object, TypeKind::SlotClass);
    builtins.string->instancesAreBytes = true;
    builtins.symbol = makeType("Symbol", builtins.string, TypeKind::SlotClass);
    builtins.symbol->instancesAreBytes = true;
    builtins.array = makeType("Array", builtins.object, TypeKind::SlotClass);
    builtins.byteArray = makeType("ByteArray", builtins.object, TypeKind::SlotClass);
    builtins.byteArray->instancesAreBytes = true;
    builtins.tuple = makeType("Tuple", builtins.object, TypeKind::SlotClass);
    builtins.dictionary = makeType("Dictionary", builtins.object, TypeKind::SlotClass);
    builtins.cell = makeType("Cell", builtins.object, TypeKind::SlotClass);
    builtins.functionDefinition = makeType("FunctionDefinition", builtins.object, TypeKind::SlotClass);
    builtins.closure = makeType("Closure", builtins.object, TypeKind::SlotClass);
    builtins.intrinsicFunction = makeType("IntrinsicFunction", builtins.object, TypeKind::SlotClass);
    builtins.environmentType = makeType("Environment", builtins.object, TypeKind::SlotClass);
    builtins.namespaceType = makeType("Namespace", builtins.object, TypeKind::SlotClass);
    builtins.classEntity = makeType("ClassEntity", builtins.object, TypeKind::SlotClass);
    builtins.functionEntity = makeType("FunctionEntity", builtins.object, TypeKind::SlotClass);
    builtins.metabuilder = makeType("Metabuilder", builtins.object, TypeKind::SlotClass);
    builtins.metabuilder->delegatesSendsToInstance = true;

    // Symbols interned before the Symbol type existed.
    for (auto& [text, sym] : symbols_)
        sym->type = builtins.symbol;

    builtins.astNode = makeType("ASTNode", builtins.object, TypeKind::AstNodeClass);
    auto nodeClass = [&](NodeKind kind, const char* name) {
        TypeObject* t = makeType(name, builtins.astNode, TypeKind::AstNodeClass);
        builtins.astNodeClasses[int(kind)] = t;
    };
    nodeClass(NodeKind::Literal, "LiteralNode");
    nodeClass(NodeKind::Identifier, "IdentifierNode");
    nodeClass(NodeKind::MessageSend, "MessageSendNode");
    nodeClass(NodeKind::FunctionApplication, "FunctionApplicationNode");
    nodeClass(NodeKind::Cascade, "CascadeNode");
    nodeClass(NodeKind::Sequence, "SequenceNode");
    nodeClass(NodeKind::Lambda, "LambdaNode");
    nodeClass(NodeKind::Tuple, "TupleNode");
    nodeClass(NodeKind::MakeDictionary, "MakeDictionaryNode");
    nodeClass(NodeKind::MakeByteArray, "MakeByteArrayNode");
    nodeClass(NodeKind::LiteralArray, "LiteralArrayNode");
    nodeClass(NodeKind::Quote, "QuoteNode");
    nodeClass(NodeKind::QuasiQuote, "QuasiQuoteNode");
    nodeClass(NodeKind::QuasiUnquote, "QuasiUnquoteNode");
    nodeClass(NodeKind::Splice, "SpliceNode");
    nodeClass(NodeKind::ArgumentReference, "ArgumentReferenceNode");
    nodeClass(NodeKind::CaptureReference, "CaptureReferenceNode");
    nodeClass(NodeKind::LocalReference, "LocalReferenceNode");
    nodeClass(NodeKind::LocalDefinition, "LocalDefinitionNode");
    nodeClass(NodeKind::MakeClosure, "MakeClosureNode");
    nodeClass(NodeKind::If, "IfNode");
    nodeClass(NodeKind::While, "WhileNode");
    nodeClass(NodeKind::BuildNode, "BuildNodeNode");
    nodeClass(NodeKind::TemplateHole, "TemplateHoleNode");

    // Singleton values.
    auto makeSingleton = [&](TypeObject* type, const char* builtinName) {
        auto* obj = make<SlotTupleObject>();
        obj->type = type;
        ObjectValue v = ObjectValue::heap(obj);
        registerBuiltin(builtinName, v);
        return v;
    };
    nilValue = makeSingleton(builtins.undefinedObject, "nil");
    trueValue = makeSingleton(builtins.booleanTrue, "true");
    falseValue = makeSingleton(builtins.booleanFalse, "false");
    voidValue = makeSingleton(builtins.voidType, "void");

    globalEnvironment_ = make<EnvironmentObject>();
    globalEnvironment_->type = builtins.environmentType;
    globalNamespace_ = make<NamespaceObject>();
    globalNamespace_->type = builtins.namespaceType;
    globalNamespace_->name = intern("global");

    // Preload the global environment.
    auto bindType = [&](TypeObject* t) {
        globalEnvironment_->bindValue(t->name, ObjectValue::heap(t), builtins.type);
    };
    for (auto& [name, value] : builtinsByName_) {
        if (auto* t = value.as<TypeObject>())
            bindType(t);
    }
    globalEnvironment_->bindValue(intern("LiteralInteger"), ObjectValue::heap(builtins.integer),
                                  builtins.type);
    globalEnvironment_->bindValue(intern("nil"), nilValue, builtins.undefinedObject);
    globalEnvironment_->bindValue(intern("true"), trueValue, builtins.booleanTrue);
    globalEnvironment_->bindValue(intern("false"), falseValue, builtins.booleanFalse);
    globalEnvironment_->bindValue(intern("void"), voidValue, builtins.voidType);

    installIntrinsics(*this);
    installNativeMacros(*this);
    installMetabuilderFactories(*this);
}

} // namespace sysmel
