#include "sysmel/object.hpp"
#include "sysmel/type.hpp"

namespace sysmel {

size_t SlotTupleObject::payloadSize() const { return slots.size(); }

size_t BigIntObject::payloadSize() const {
    size_t bits = boost::multiprecision::msb(value == 0 ? BigInt(1) : abs(value)) + 1;
    return (bits + 7) / 8 + 1; // magnitude bytes plus sign byte
}

bool SymbolTextLess::operator()(const SymbolObject* a, const SymbolObject* b) const {
    return a->text < b->text;
}

bool intrinsicKindIsMachinePrimitive(IntrinsicKind kind) {
    switch (kind) {
    case IntrinsicKind::Add:
    case IntrinsicKind::Sub:
    case IntrinsicKind::Mul:
    case IntrinsicKind::Div:
    case IntrinsicKind::Rem:
    case IntrinsicKind::FDiv:
    case IntrinsicKind::BitAnd:
    case IntrinsicKind::BitOr:
    case IntrinsicKind::BitXor:
    case IntrinsicKind::ShiftLeft:
    case IntrinsicKind::ShiftRight:
    case IntrinsicKind::CmpLt:
    case IntrinsicKind::CmpLe:
    case IntrinsicKind::CmpGt:
    case IntrinsicKind::CmpGe:
    case IntrinsicKind::CmpEq:
    case IntrinsicKind::CmpNe:
    case IntrinsicKind::Negate:
        return true;
    default:
        return false;
    }
}

const MethodEntry* lookupSelector(TypeObject* type, SymbolObject* selector) {
    for (TypeObject* t = type; t; t = t->supertype) {
        auto macroIt = t->macroDictionary.find(selector);
        if (macroIt != t->macroDictionary.end())
            return &macroIt->second;
        auto methodIt = t->methodDictionary.find(selector);
        if (methodIt != t->methodDictionary.end())
            return &methodIt->second;
    }
    return nullptr;
}

const MethodEntry* lookupMethod(TypeObject* type, SymbolObject* selector) {
    for (TypeObject* t = type; t; t = t->supertype) {
        auto it = t->methodDictionary.find(selector);
        if (it != t->methodDictionary.end())
            return &it->second;
    }
    return nullptr;
}

} // namespace sysmel
