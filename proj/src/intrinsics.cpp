#include "sysmel/errors.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/primitive_encoding.hpp"
#include "sysmel/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sysmel {

AstNode* instantiateTemplate(Runtime& rt, const AstNode* templateNode,
                             std::span<const ObjectValue> holeValues); // quasiquote.cpp

namespace {

IntrinsicFunctionObject* defineIntrinsic(Runtime& rt, const std::string& name, IntrinsicKind kind,
                                         bool pure, std::vector<TypeObject*> argumentTypes,
                                         TypeObject* resultType,
                                         std::function<ObjectValue(Runtime&, std::span<const ObjectValue>)> handler,
                                         bool variadic = false) {
    auto* fn = rt.make<IntrinsicFunctionObject>();
    fn->type = rt.builtins.intrinsicFunction;
    fn->name = rt.intern(name);
    fn->intrinsicKind = kind;
    fn->pure = pure;
    fn->argumentTypes = std::move(argumentTypes);
    fn->resultType = resultType;
    fn->variadic = variadic;
    fn->handler = std::move(handler);
    rt.registerIntrinsic(fn);
    return fn;
}

void installMethod(Runtime& rt, TypeObject* type, const std::string& selector,
                   IntrinsicFunctionObject* fn) {
    MethodEntry entry;
    entry.selector = rt.intern(selector);
    entry.target = ObjectValue::heap(fn);
    entry.pure = fn->pure;
    type->methodDictionary[entry.selector] = entry;
}

IntrinsicFunctionObject* defineMethod(Runtime& rt, TypeObject* type, const std::string& selector,
                                      IntrinsicKind kind, bool pure,
                                      std::vector<TypeObject*> argumentTypes, TypeObject* resultType,
                                      std::function<ObjectValue(Runtime&, std::span<const ObjectValue>)> handler) {
    auto* fn = defineIntrinsic(rt, type->name->text + "::" + selector, kind, pure,
                               std::move(argumentTypes), resultType, std::move(handler));
    installMethod(rt, type, selector, fn);
    return fn;
}

bool isFloatValue(Runtime& rt, const ObjectValue& v) {
    return rt.isPrimitiveFloatType(rt.typeOf(v));
}

double numericAsDouble(Runtime& rt, const ObjectValue& v) {
    if (isFloatValue(rt, v))
        return rt.floatValue(v);
    return rt.integerValueOf(v).convert_to<double>();
}

BigInt numericAsInteger(Runtime& rt, const ObjectValue& v) {
    if (isFloatValue(rt, v)) {
        double d = std::trunc(rt.floatValue(v));
        if (!std::isfinite(d))
            throw EvaluationError("cannot convert a non-finite float to an integer");
        // Round-trippable through the 64-bit range is enough here;
        // larger magnitudes go through the decimal representation.
        if (d >= -9.0e18 && d <= 9.0e18)
            return BigInt(int64_t(d));
        std::ostringstream text;
        text.precision(0);
        text << std::fixed << d;
        return BigInt(text.str());
    }
    return rt.integerValueOf(v);
}

/// Arithmetic right shift as floor division by a power of two.
BigInt arithmeticShiftRight(const BigInt& v, unsigned count) {
    BigInt divisor = BigInt(1) << count;
    BigInt q = v / divisor;
    if (v < 0 && q * divisor != v)
        --q;
    return q;
}

constexpr unsigned maxBigShift = 1u << 20; // keeps arbitrary-precision shifts bounded

BigInt applyIntegerOp(IntrinsicKind kind, const BigInt& a, const BigInt& b, int bits,
                      bool isSigned) {
    switch (kind) {
    case IntrinsicKind::Add: return a + b;
    case IntrinsicKind::Sub: return a - b;
    case IntrinsicKind::Mul: return a * b;
    case IntrinsicKind::Div:
        if (b == 0)
            throw EvaluationError("division by zero");
        return a / b; // truncated toward zero
    case IntrinsicKind::Rem:
        if (b == 0)
            throw EvaluationError("remainder by zero");
        return a % b;
    case IntrinsicKind::BitAnd:
    case IntrinsicKind::BitOr:
    case IntrinsicKind::BitXor: {
        // Operate on the raw two's-complement bit patterns.
        BigInt absA = a < 0 ? BigInt(-a) : BigInt(a + 1);
        BigInt absB = b < 0 ? BigInt(-b) : BigInt(b + 1);
        int width = bits ? bits
                         : int(std::max(boost::multiprecision::msb(absA),
                                        boost::multiprecision::msb(absB)) + 2);
        BigInt ua = wrapToWidth(a, width, false);
        BigInt ub = wrapToWidth(b, width, false);
        BigInt r = kind == IntrinsicKind::BitAnd ? BigInt(ua & ub)
                 : kind == IntrinsicKind::BitOr  ? BigInt(ua | ub)
                                                 : BigInt(ua ^ ub);
        return wrapToWidth(r, width, isSigned || bits == 0);
    }
    case IntrinsicKind::ShiftLeft: {
        if (b < 0)
            throw EvaluationError("negative shift count");
        if (bits && b >= bits)
            return 0;
        if (!bits && b > maxBigShift)
            throw EvaluationError("shift count too large");
        return a << b.convert_to<unsigned>();
    }
    case IntrinsicKind::ShiftRight: {
        if (b < 0)
            throw EvaluationError("negative shift count");
        if (bits && b >= bits)
            return (isSigned && a < 0) ? BigInt(-1) : BigInt(0);
        return arithmeticShiftRight(a, b.convert_to<unsigned>());
    }
    default:
        throw EvaluationError("unexpected integer operation");
    }
}

bool applyComparison(IntrinsicKind kind, int cmp) {
    switch (kind) {
    case IntrinsicKind::CmpLt: return cmp < 0;
    case IntrinsicKind::CmpLe: return cmp <= 0;
    case IntrinsicKind::CmpGt: return cmp > 0;
    case IntrinsicKind::CmpGe: return cmp >= 0;
    case IntrinsicKind::CmpEq: return cmp == 0;
    case IntrinsicKind::CmpNe: return cmp != 0;
    default:
        throw EvaluationError("unexpected comparison operation");
    }
}

struct OpSpec {
    const char* selector;
    IntrinsicKind kind;
};

constexpr OpSpec integerBinaryOps[] = {
    {"+", IntrinsicKind::Add},        {"-", IntrinsicKind::Sub},
    {"*", IntrinsicKind::Mul},        {"//", IntrinsicKind::Div},
    {"\\\\", IntrinsicKind::Rem},     {"bitAnd:", IntrinsicKind::BitAnd},
    {"bitOr:", IntrinsicKind::BitOr}, {"bitXor:", IntrinsicKind::BitXor},
    {"&", IntrinsicKind::BitAnd},     {"|", IntrinsicKind::BitOr},
    {"<<", IntrinsicKind::ShiftLeft}, {">>", IntrinsicKind::ShiftRight},
};

constexpr OpSpec comparisonOps[] = {
    {"<", IntrinsicKind::CmpLt},  {"<=", IntrinsicKind::CmpLe}, {">", IntrinsicKind::CmpGt},
    {">=", IntrinsicKind::CmpGe}, {"=", IntrinsicKind::CmpEq},  {"~=", IntrinsicKind::CmpNe},
};

struct ConversionSpec {
    const char* longName;
    const char* shortName;
    TypeObject* Runtime::Builtins::* target;
};

constexpr ConversionSpec conversionSpecs[] = {
    {"asInt8", "i8", &Runtime::Builtins::int8},
    {"asInt16", "i16", &Runtime::Builtins::int16},
    {"asInt32", "i32", &Runtime::Builtins::int32},
    {"asInt64", "i64", &Runtime::Builtins::int64},
    {"asUInt8", "u8", &Runtime::Builtins::uint8},
    {"asUInt16", "u16", &Runtime::Builtins::uint16},
    {"asUInt32", "u32", &Runtime::Builtins::uint32},
    {"asUInt64", "u64", &Runtime::Builtins::uint64},
    {"asSize", "sz", &Runtime::Builtins::size},
    {"asFloat32", "f32", &Runtime::Builtins::float32},
    {"asFloat64", "f64", &Runtime::Builtins::float64},
};

ObjectValue boxInteger(Runtime& rt, const BigInt& value, TypeObject* type) {
    if (type == rt.builtins.integer)
        return rt.makeInteger(value);
    return rt.makePrimitiveInteger(value, type);
}

void installConversions(Runtime& rt, TypeObject* sourceType) {
    for (const auto& spec : conversionSpecs) {
        TypeObject* target = rt.builtins.*spec.target;
        auto handler = [target](Runtime& rt, std::span<const ObjectValue> args) {
            if (rt.isPrimitiveFloatType(target))
                return rt.makeFloat(numericAsDouble(rt, args[0]), target);
            return boxInteger(rt, numericAsInteger(rt, args[0]), target);
        };
        auto* fn = defineIntrinsic(rt, sourceType->name->text + "::" + spec.longName,
                                   IntrinsicKind::Convert, true, {sourceType}, target, handler);
        installMethod(rt, sourceType, spec.longName, fn);
        installMethod(rt, sourceType, spec.shortName, fn);
    }
    // Conversion back into the arbitrary-precision literal type.
    auto* fn = defineIntrinsic(rt, sourceType->name->text + "::asInteger", IntrinsicKind::Convert,
                               true, {sourceType}, rt.builtins.integer,
                               [](Runtime& rt, std::span<const ObjectValue> args) {
                                   return rt.makeInteger(numericAsInteger(rt, args[0]));
                               });
    installMethod(rt, sourceType, "asInteger", fn);
}

void installIntegerArithmetic(Runtime& rt, TypeObject* type) {
    for (const auto& op : integerBinaryOps) {
        IntrinsicKind kind = op.kind;
        auto handler = [type, kind](Runtime& rt, std::span<const ObjectValue> args) {
            BigInt a = rt.integerValueOf(args[0]);
            BigInt b = rt.integerValueOf(args[1]);
            BigInt r = applyIntegerOp(kind, a, b, type->bits, type->isSigned);
            return boxInteger(rt, r, type);
        };
        defineMethod(rt, type, op.selector, kind, true, {type, type}, type, handler);
    }
    for (const auto& op : comparisonOps) {
        IntrinsicKind kind = op.kind;
        auto handler = [kind](Runtime& rt, std::span<const ObjectValue> args) {
            BigInt a = rt.integerValueOf(args[0]);
            BigInt b = rt.integerValueOf(args[1]);
            return rt.makeBoolean(applyComparison(kind, a < b ? -1 : a > b ? 1 : 0));
        };
        defineMethod(rt, type, op.selector, kind, true, {type, type}, rt.builtins.boolean, handler);
    }
    defineMethod(rt, type, "negated", IntrinsicKind::Negate, true, {type}, type,
                 [type](Runtime& rt, std::span<const ObjectValue> args) {
                     return boxInteger(rt, -rt.integerValueOf(args[0]), type);
                 });
    installConversions(rt, type);
}

void installFloatArithmetic(Runtime& rt, TypeObject* type) {
    constexpr OpSpec floatBinaryOps[] = {
        {"+", IntrinsicKind::Add},
        {"-", IntrinsicKind::Sub},
        {"*", IntrinsicKind::Mul},
        {"/", IntrinsicKind::FDiv},
    };
    for (const auto& op : floatBinaryOps) {
        IntrinsicKind kind = op.kind;
        auto handler = [type, kind](Runtime& rt, std::span<const ObjectValue> args) {
            double a = numericAsDouble(rt, args[0]);
            double b = numericAsDouble(rt, args[1]);
            double r = kind == IntrinsicKind::Add ? a + b
                     : kind == IntrinsicKind::Sub ? a - b
                     : kind == IntrinsicKind::Mul ? a * b
                                                  : a / b;
            return rt.makeFloat(r, type);
        };
        defineMethod(rt, type, op.selector, kind, true, {type, type}, type, handler);
    }
    for (const auto& op : comparisonOps) {
        IntrinsicKind kind = op.kind;
        auto handler = [kind](Runtime& rt, std::span<const ObjectValue> args) {
            double a = numericAsDouble(rt, args[0]);
            double b = numericAsDouble(rt, args[1]);
            return rt.makeBoolean(applyComparison(kind, a < b ? -1 : a > b ? 1 : 0));
        };
        defineMethod(rt, type, op.selector, kind, true, {type, type}, rt.builtins.boolean, handler);
    }
    defineMethod(rt, type, "negated", IntrinsicKind::Negate, true, {type}, type,
                 [type](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeFloat(-numericAsDouble(rt, args[0]), type);
                 });
    defineMethod(rt, type, "sqrt", IntrinsicKind::Native, true, {type}, type,
                 [type](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeFloat(std::sqrt(numericAsDouble(rt, args[0])), type);
                 });
    installConversions(rt, type);
}

std::string stringTextOf(Runtime& rt, const ObjectValue& v) {
    if (auto* sym = v.as<SymbolObject>())
        return sym->text;
    if (auto* bytes = v.as<ByteTupleObject>()) {
        TypeObject* t = bytes->type;
        if (t && t->isKindOf(rt.builtins.string))
            return bytes->asString();
    }
    throw EvaluationError("value is not a string");
}

size_t checkedIndex(Runtime& rt, const ObjectValue& indexValue, size_t size) {
    BigInt index = rt.integerValueOf(indexValue);
    if (index < 0 || index >= size)
        throw EvaluationError("index " + index.str() + " out of bounds (size " +
                              std::to_string(size) + ")");
    return index.convert_to<size_t>();
}

SlotTupleObject* slotTupleArgument(const ObjectValue& v, const char* what) {
    auto* obj = v.as<SlotTupleObject>();
    if (!obj)
        throw EvaluationError(std::string("receiver is not ") + what);
    return obj;
}

void installObjectMethods(Runtime& rt) {
    TypeObject* object = rt.builtins.object;
    TypeObject* dynamic = rt.builtins.dynamic;
    TypeObject* boolean = rt.builtins.boolean;

    defineMethod(rt, object, "yourself", IntrinsicKind::Native, true, {dynamic}, dynamic,
                 [](Runtime&, std::span<const ObjectValue> args) { return args[0]; });
    defineMethod(rt, object, "printString", IntrinsicKind::Native, false, {dynamic},
                 rt.builtins.string, [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeString(rt.printString(args[0]));
                 });
    auto identityEq = [](Runtime& rt, std::span<const ObjectValue> args) {
        return rt.makeBoolean(args[0] == args[1]);
    };
    auto identityNe = [](Runtime& rt, std::span<const ObjectValue> args) {
        return rt.makeBoolean(args[0] != args[1]);
    };
    defineMethod(rt, object, "==", IntrinsicKind::IdentityEq, true, {dynamic, dynamic}, boolean,
                 identityEq);
    defineMethod(rt, object, "~~", IntrinsicKind::IdentityNe, true, {dynamic, dynamic}, boolean,
                 identityNe);
    // Default value equality is identity; value types override it.
    defineMethod(rt, object, "=", IntrinsicKind::IdentityEq, true, {dynamic, dynamic}, boolean,
                 identityEq);
    defineMethod(rt, object, "~=", IntrinsicKind::IdentityNe, true, {dynamic, dynamic}, boolean,
                 identityNe);
    defineMethod(rt, object, "isNil", IntrinsicKind::Native, true, {dynamic}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(args[0] == rt.nilValue);
                 });
    defineMethod(rt, object, "notNil", IntrinsicKind::Native, true, {dynamic}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(args[0] != rt.nilValue);
                 });
    defineMethod(rt, object, "class", IntrinsicKind::Native, false, {dynamic}, rt.builtins.type,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return ObjectValue::heap(rt.typeOf(args[0]));
                 });
    defineMethod(rt, object, "identityHash", IntrinsicKind::Native, false, {dynamic},
                 rt.builtins.integer, [](Runtime& rt, std::span<const ObjectValue> args) {
                     Object* o = args[0].object();
                     return rt.makeInteger(o ? BigInt(o->identityHash)
                                             : BigInt(args[0].smallIntValue()));
                 });
}

void installBooleanMethods(Runtime& rt) {
    TypeObject* boolean = rt.builtins.boolean;
    defineMethod(rt, boolean, "not", IntrinsicKind::Not, true, {boolean}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(!rt.booleanValue(args[0]));
                 });
    defineMethod(rt, boolean, "&", IntrinsicKind::BitAnd, true, {boolean, boolean}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(rt.booleanValue(args[0]) && rt.booleanValue(args[1]));
                 });
    defineMethod(rt, boolean, "|", IntrinsicKind::BitOr, true, {boolean, boolean}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(rt.booleanValue(args[0]) || rt.booleanValue(args[1]));
                 });
}

void installStringMethods(Runtime& rt) {
    TypeObject* string = rt.builtins.string;
    TypeObject* boolean = rt.builtins.boolean;
    defineMethod(rt, string, "size", IntrinsicKind::Native, true, {string}, rt.builtins.size,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makePrimitiveInteger(BigInt(stringTextOf(rt, args[0]).size()),
                                                    rt.builtins.size);
                 });
    defineMethod(rt, string, ",", IntrinsicKind::Native, true, {string, string}, string,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeString(stringTextOf(rt, args[0]) + stringTextOf(rt, args[1]));
                 });
    defineMethod(rt, string, "=", IntrinsicKind::Native, true, {string, string}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(stringTextOf(rt, args[0]) == stringTextOf(rt, args[1]));
                 });
    defineMethod(rt, string, "~=", IntrinsicKind::Native, true, {string, string}, boolean,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeBoolean(stringTextOf(rt, args[0]) != stringTextOf(rt, args[1]));
                 });
    defineMethod(rt, string, "at:", IntrinsicKind::Native, true, {string, rt.builtins.size},
                 rt.builtins.character, [](Runtime& rt, std::span<const ObjectValue> args) {
                     std::string text = stringTextOf(rt, args[0]);
                     size_t i = checkedIndex(rt, args[1], text.size());
                     return ObjectValue::character(char32_t(uint8_t(text[i])));
                 });
    defineMethod(rt, string, "asSymbol", IntrinsicKind::Native, true, {string}, rt.builtins.symbol,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return ObjectValue::heap(rt.intern(stringTextOf(rt, args[0])));
                 });
    defineMethod(rt, rt.builtins.symbol, "asString", IntrinsicKind::Native, true,
                 {rt.builtins.symbol}, string,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeString(stringTextOf(rt, args[0]));
                 });
}

void installCharacterMethods(Runtime& rt) {
    defineMethod(rt, rt.builtins.character, "asInteger", IntrinsicKind::Convert, true,
                 {rt.builtins.character}, rt.builtins.integer,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeInteger(BigInt(uint32_t(args[0].charValue())));
                 });
    defineMethod(rt, rt.builtins.character, "value", IntrinsicKind::Convert, true,
                 {rt.builtins.character}, rt.builtins.integer,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makeInteger(BigInt(uint32_t(args[0].charValue())));
                 });
}

ObjectValue instantiateType(Runtime& rt, TypeObject* type, size_t slotCount) {
    if (type->typeKind == TypeKind::Singleton || type->typeKind == TypeKind::TypeOfTypes ||
        type->typeKind == TypeKind::Dynamic)
        throw EvaluationError("cannot instantiate type " + type->name->text);
    if (type->instancesAreBytes || type->typeKind == TypeKind::PrimitiveInteger ||
        type->typeKind == TypeKind::PrimitiveFloat)
        return rt.makeObject(type, std::vector<uint8_t>(slotCount, 0));
    return rt.makeObject(type, slotCount);
}

void installTypeMethods(Runtime& rt) {
    TypeObject* type = rt.builtins.type;
    TypeObject* dynamic = rt.builtins.dynamic;

    auto receiverType = [](std::span<const ObjectValue> args) {
        auto* t = args[0].as<TypeObject>();
        if (!t)
            throw EvaluationError("receiver is not a type");
        return t;
    };

    defineMethod(rt, type, "new", IntrinsicKind::Native, false, {type}, dynamic,
                 [receiverType](Runtime& rt, std::span<const ObjectValue> args) {
                     TypeObject* t = receiverType(args);
                     return instantiateType(rt, t, t->slotLayout.size());
                 });
    defineMethod(rt, type, "new:", IntrinsicKind::Native, false, {type, dynamic}, dynamic,
                 [receiverType](Runtime& rt, std::span<const ObjectValue> args) {
                     TypeObject* t = receiverType(args);
                     BigInt n = rt.integerValueOf(args[1]);
                     if (n < 0)
                         throw EvaluationError("negative instance size");
                     return instantiateType(rt, t, n.convert_to<size_t>());
                 });
    for (size_t arity = 1; arity <= 4; ++arity) {
        std::string selector;
        std::vector<TypeObject*> argTypes{type};
        for (size_t i = 0; i < arity; ++i) {
            selector += "with:";
            argTypes.push_back(dynamic);
        }
        defineMethod(rt, type, selector, IntrinsicKind::Native, false, argTypes, dynamic,
                     [receiverType](Runtime& rt, std::span<const ObjectValue> args) {
                         TypeObject* t = receiverType(args);
                         std::vector<ObjectValue> slots(args.begin() + 1, args.end());
                         if (t->instancesAreBytes)
                             throw EvaluationError("with: requires a slot-based type");
                         return rt.makeObject(t, std::move(slots));
                     });
    }
    defineMethod(rt, type, "ref", IntrinsicKind::Native, true, {type}, type,
                 [receiverType](Runtime& rt, std::span<const ObjectValue> args) {
                     return ObjectValue::heap(rt.makeReferenceType(receiverType(args)));
                 });
    defineMethod(rt, type, "pointer", IntrinsicKind::Native, true, {type}, type,
                 [receiverType](Runtime& rt, std::span<const ObjectValue> args) {
                     return ObjectValue::heap(rt.makePointerType(receiverType(args)));
                 });
    defineMethod(rt, type, "name", IntrinsicKind::Native, true, {type}, rt.builtins.symbol,
                 [receiverType](Runtime&, std::span<const ObjectValue> args) {
                     return ObjectValue::heap(receiverType(args)->name);
                 });
    defineMethod(rt, type, "supertype", IntrinsicKind::Native, true, {type}, type,
                 [receiverType](Runtime& rt, std::span<const ObjectValue> args) {
                     TypeObject* super = receiverType(args)->supertype;
                     return super ? ObjectValue::heap(super) : rt.nilValue;
                 });
}

void installCollectionMethods(Runtime& rt) {
    TypeObject* dynamic = rt.builtins.dynamic;
    TypeObject* sizeType = rt.builtins.size;

    auto installIndexed = [&](TypeObject* collection, const char* what) {
        defineMethod(rt, collection, "at:", IntrinsicKind::Native, false, {collection, sizeType},
                     dynamic, [what](Runtime& rt, std::span<const ObjectValue> args) {
                         auto* obj = slotTupleArgument(args[0], what);
                         return obj->slots[checkedIndex(rt, args[1], obj->slots.size())];
                     });
        defineMethod(rt, collection, "size", IntrinsicKind::Native, false, {collection}, sizeType,
                     [what](Runtime& rt, std::span<const ObjectValue> args) {
                         auto* obj = slotTupleArgument(args[0], what);
                         return rt.makePrimitiveInteger(BigInt(obj->slots.size()),
                                                        rt.builtins.size);
                     });
    };
    installIndexed(rt.builtins.array, "an array");
    installIndexed(rt.builtins.tuple, "a tuple");

    defineMethod(rt, rt.builtins.array, "at:put:", IntrinsicKind::Native, false,
                 {rt.builtins.array, sizeType, dynamic}, dynamic,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* obj = slotTupleArgument(args[0], "an array");
                     obj->slots[checkedIndex(rt, args[1], obj->slots.size())] = args[2];
                     return args[2];
                 });

    TypeObject* byteArray = rt.builtins.byteArray;
    auto byteTupleArgument = [](const ObjectValue& v) {
        auto* obj = v.as<ByteTupleObject>();
        if (!obj)
            throw EvaluationError("receiver is not a byte array");
        return obj;
    };
    defineMethod(rt, byteArray, "at:", IntrinsicKind::Native, false, {byteArray, sizeType},
                 rt.builtins.uint8, [byteTupleArgument](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* obj = byteTupleArgument(args[0]);
                     size_t i = checkedIndex(rt, args[1], obj->bytes.size());
                     return rt.makePrimitiveInteger(BigInt(obj->bytes[i]), rt.builtins.uint8);
                 });
    defineMethod(rt, byteArray, "at:put:", IntrinsicKind::Native, false,
                 {byteArray, sizeType, dynamic}, dynamic,
                 [byteTupleArgument](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* obj = byteTupleArgument(args[0]);
                     size_t i = checkedIndex(rt, args[1], obj->bytes.size());
                     obj->bytes[i] = uint8_t(rt.integerValueOf(args[2]).convert_to<uint64_t>() & 0xff);
                     return args[2];
                 });
    defineMethod(rt, byteArray, "size", IntrinsicKind::Native, false, {byteArray}, sizeType,
                 [byteTupleArgument](Runtime& rt, std::span<const ObjectValue> args) {
                     return rt.makePrimitiveInteger(BigInt(byteTupleArgument(args[0])->bytes.size()),
                                                    rt.builtins.size);
                 });

    // Dictionaries store interleaved key/value slot pairs; keys compare
    // structurally.
    TypeObject* dictionary = rt.builtins.dictionary;
    auto findPair = [](Runtime& rt, SlotTupleObject* dict, const ObjectValue& key) -> ptrdiff_t {
        for (size_t i = 0; i + 1 < dict->slots.size(); i += 2)
            if (structurallyEqualValues(dict->slots[i], key))
                return ptrdiff_t(i);
        (void)rt;
        return -1;
    };
    defineMethod(rt, dictionary, "at:", IntrinsicKind::Native, false, {dictionary, dynamic},
                 dynamic, [findPair](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* dict = slotTupleArgument(args[0], "a dictionary");
                     ptrdiff_t i = findPair(rt, dict, args[1]);
                     if (i < 0)
                         throw EvaluationError("key not found: " + rt.printString(args[1]));
                     return dict->slots[size_t(i) + 1];
                 });
    defineMethod(rt, dictionary, "at:put:", IntrinsicKind::Native, false,
                 {dictionary, dynamic, dynamic}, dynamic,
                 [findPair](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* dict = slotTupleArgument(args[0], "a dictionary");
                     ptrdiff_t i = findPair(rt, dict, args[1]);
                     if (i >= 0) {
                         dict->slots[size_t(i) + 1] = args[2];
                     } else {
                         dict->slots.push_back(args[1]);
                         dict->slots.push_back(args[2]);
                     }
                     return args[2];
                 });
    defineMethod(rt, dictionary, "includesKey:", IntrinsicKind::Native, false,
                 {dictionary, dynamic}, rt.builtins.boolean,
                 [findPair](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* dict = slotTupleArgument(args[0], "a dictionary");
                     return rt.makeBoolean(findPair(rt, dict, args[1]) >= 0);
                 });
    defineMethod(rt, dictionary, "size", IntrinsicKind::Native, false, {dictionary}, sizeType,
                 [](Runtime& rt, std::span<const ObjectValue> args) {
                     auto* dict = slotTupleArgument(args[0], "a dictionary");
                     return rt.makePrimitiveInteger(BigInt(dict->slots.size() / 2),
                                                    rt.builtins.size);
                 });
}

void installLocationIntrinsics(Runtime& rt) {
    TypeObject* dynamic = rt.builtins.dynamic;

    auto locationArgument = [](const ObjectValue& v) {
        auto* loc = v.as<LocationObject>();
        if (!loc || !loc->location.valid())
            throw EvaluationError("value is not a valid storage location");
        return loc;
    };

    defineIntrinsic(rt, "refLoad", IntrinsicKind::RefLoad, false, {dynamic}, dynamic,
                    [locationArgument](Runtime&, std::span<const ObjectValue> args) {
                        return locationArgument(args[0])->location.load();
                    });
    defineIntrinsic(rt, "refStore", IntrinsicKind::RefStore, false, {dynamic, dynamic}, dynamic,
                    [locationArgument](Runtime&, std::span<const ObjectValue> args) {
                        locationArgument(args[0])->location.store(args[1]);
                        return args[1];
                    });
    defineIntrinsic(rt, "refAddress", IntrinsicKind::RefAddress, false, {dynamic}, dynamic,
                    [locationArgument](Runtime& rt, std::span<const ObjectValue> args) {
                        auto* ref = locationArgument(args[0]);
                        TypeObject* base = ref->type ? ref->type->baseType : nullptr;
                        auto* ptr = rt.make<LocationObject>();
                        ptr->type = base ? rt.makePointerType(base) : nullptr;
                        ptr->location = ref->location;
                        return ObjectValue::heap(ptr);
                    });
    defineIntrinsic(rt, "pointerDeref", IntrinsicKind::PointerDeref, false, {dynamic}, dynamic,
                    [locationArgument](Runtime& rt, std::span<const ObjectValue> args) {
                        auto* ptr = locationArgument(args[0]);
                        TypeObject* base = ptr->type ? ptr->type->baseType : nullptr;
                        auto* ref = rt.make<LocationObject>();
                        ref->type = base ? rt.makeReferenceType(base) : nullptr;
                        ref->location = ptr->location;
                        return ObjectValue::heap(ref);
                    });
    defineIntrinsic(rt, "slotRef", IntrinsicKind::SlotRef, false,
                    {dynamic, rt.builtins.integer}, dynamic,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        auto* obj = slotTupleArgument(args[0], "a slot-based object");
                        size_t index = checkedIndex(rt, args[1], obj->slots.size());
                        TypeObject* fieldType = rt.builtins.dynamic;
                        TypeObject* objType = obj->type;
                        if (objType && index < objType->slotLayout.size() &&
                            objType->slotLayout[index].type)
                            fieldType = objType->slotLayout[index].type;
                        auto* ref = rt.make<LocationObject>();
                        ref->type = rt.makeReferenceType(fieldType);
                        ref->location = {obj, uint32_t(index)};
                        return ObjectValue::heap(ref);
                    });
}

void installPrinting(Runtime& rt) {
    auto printAll = [](Runtime& rt, std::span<const ObjectValue> args) {
        for (const auto& arg : args)
            rt.out() << rt.printString(arg);
        return rt.voidValue;
    };
    auto* printLine = defineIntrinsic(rt, "printLine", IntrinsicKind::Native, false, {},
                                      rt.builtins.voidType,
                                      [printAll](Runtime& rt, std::span<const ObjectValue> args) {
                                          printAll(rt, args);
                                          rt.out() << "\n";
                                          return rt.voidValue;
                                      },
                                      /*variadic=*/true);
    auto* print = defineIntrinsic(rt, "print", IntrinsicKind::Native, false, {},
                                  rt.builtins.voidType, printAll, /*variadic=*/true);
    rt.globalEnvironment()->bindValue(rt.intern("printLine"), ObjectValue::heap(printLine),
                                      rt.builtins.intrinsicFunction);
    rt.globalEnvironment()->bindValue(rt.intern("print"), ObjectValue::heap(print),
                                      rt.builtins.intrinsicFunction);
}

} // namespace

void installIntrinsics(Runtime& rt) {
    installObjectMethods(rt);
    installBooleanMethods(rt);
    installStringMethods(rt);
    installCharacterMethods(rt);
    installTypeMethods(rt);
    installCollectionMethods(rt);
    installLocationIntrinsics(rt);
    installPrinting(rt);

    installIntegerArithmetic(rt, rt.builtins.integer);
    for (TypeObject* t : {rt.builtins.int8, rt.builtins.int16, rt.builtins.int32,
                          rt.builtins.int64, rt.builtins.uint8, rt.builtins.uint16,
                          rt.builtins.uint32, rt.builtins.uint64, rt.builtins.size})
        installIntegerArithmetic(rt, t);
    installFloatArithmetic(rt, rt.builtins.float32);
    installFloatArithmetic(rt, rt.builtins.float64);

    // Construction helpers the analyzer rewrites literal-ish syntax to.
    defineIntrinsic(rt, "makeTuple", IntrinsicKind::Native, false, {}, rt.builtins.tuple,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        return rt.makeObject(rt.builtins.tuple,
                                             std::vector<ObjectValue>(args.begin(), args.end()));
                    },
                    /*variadic=*/true);
    defineIntrinsic(rt, "makeArray", IntrinsicKind::Native, false, {}, rt.builtins.array,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        return rt.makeObject(rt.builtins.array,
                                             std::vector<ObjectValue>(args.begin(), args.end()));
                    },
                    /*variadic=*/true);
    defineIntrinsic(rt, "makeDictionary", IntrinsicKind::Native, false, {}, rt.builtins.dictionary,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        if (args.size() % 2 != 0)
                            throw EvaluationError("dictionary construction needs key/value pairs");
                        return rt.makeObject(rt.builtins.dictionary,
                                             std::vector<ObjectValue>(args.begin(), args.end()));
                    },
                    /*variadic=*/true);
    defineIntrinsic(rt, "makeByteArray", IntrinsicKind::Native, false, {}, rt.builtins.byteArray,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        std::vector<uint8_t> bytes;
                        bytes.reserve(args.size());
                        for (const auto& arg : args) {
                            BigInt v = rt.integerValueOf(arg);
                            if (v < 0 || v > 255)
                                throw EvaluationError("byte array element " + v.str() +
                                                      " out of range 0..255");
                            bytes.push_back(uint8_t(v.convert_to<unsigned>()));
                        }
                        return rt.makeObject(rt.builtins.byteArray, std::move(bytes));
                    },
                    /*variadic=*/true);
    // Runtime message dispatch for sends whose selector is computed.
    defineIntrinsic(rt, "dispatch", IntrinsicKind::Native, false, {}, rt.builtins.dynamic,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        if (args.size() < 2)
                            throw EvaluationError("dispatch needs a receiver and a selector");
                        auto* selector = args[1].as<SymbolObject>();
                        if (!selector) {
                            if (auto* node = args[1].as<AstNode>()) {
                                // Unquoted identifier/literal nodes name selectors.
                                if (auto* ident = dynamic_cast<IdentifierNode*>(node))
                                    selector = ident->name;
                                else if (auto* lit = dynamic_cast<LiteralNode*>(node))
                                    selector = lit->value.as<SymbolObject>();
                            }
                        }
                        if (!selector)
                            throw EvaluationError("dispatch selector must be a symbol");
                        return rt.dispatchMessage(args[0], selector, args.subspan(2));
                    },
                    /*variadic=*/true);

    // Quasi-quote expansion helper shared by every execution engine.
    defineIntrinsic(rt, "buildNode", IntrinsicKind::Native, false, {}, rt.builtins.astNode,
                    [](Runtime& rt, std::span<const ObjectValue> args) {
                        auto* templateNode = args[0].as<AstNode>();
                        if (!templateNode)
                            throw EvaluationError("buildNode requires a template node");
                        return ObjectValue::heap(
                            instantiateTemplate(rt, templateNode, args.subspan(1)));
                    },
                    /*variadic=*/true);
}

} // namespace sysmel
