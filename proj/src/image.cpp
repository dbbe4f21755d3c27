#include "sysmel/image.hpp"

#include "sysmel/ast.hpp"
#include "sysmel/environment.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/function.hpp"
#include "sysmel/program_entity.hpp"
#include "sysmel/runtime.hpp"
#include "sysmel/type.hpp"

#include <cstring>
#include <deque>
#include <unordered_map>
#include <unordered_set>

namespace sysmel {

namespace {

constexpr char imageMagic[4] = {'S', 'Y', 'I', 'M'};
constexpr uint32_t imageVersion = 1;
constexpr uint32_t nullReference = 0xFFFFFFFFu;

enum class RecordKind : uint8_t {
    Builtin,        // stable-name reference into the target runtime
    Symbol,         // re-interned by text
    Bytes,          // ByteTupleObject: strings, boxed primitives
    BigInteger,     // decimal text
    SlotTuple,      // generic slot instance: arrays, dictionaries, cells
    Namespace,
    ClassEntity,
    FunctionEntity,
    FunctionDef,
    TypeRecord,     // user-defined or derived type, structural
    EnvironmentRecord,
    Node,           // AST node, first payload byte is the node kind
    ClosureRecord,
    LocationRecord, // boxed reference: target tuple + slot index
};

struct Relocation {
    uint32_t record = 0;
    uint32_t offset = 0; // byte offset of the index field in the payload
    uint32_t target = 0;
};

/// Objects owned by the runtime itself are serialized as stable names
/// and resolved against the loading runtime, never traced through.
std::unordered_map<const Object*, std::string> builtinKeyMap(Runtime& rt) {
    std::unordered_map<const Object*, std::string> keys;
    std::deque<std::pair<TypeObject*, std::string>> typeWork;
    for (const auto& [name, value] : rt.builtinRegistry()) {
        Object* object = value.object();
        if (!object || !rt.isBaselineBuiltin(name))
            continue;
        if (keys.emplace(object, name).second)
            if (auto* type = dynamic_cast<TypeObject*>(object))
                typeWork.emplace_back(type, name);
    }
    keys.emplace(rt.globalEnvironment(), "%globalEnvironment");
    keys.emplace(rt.globalNamespace(), "%globalNamespace");
    // Memoized derived types of builtins are addressable as well.
    while (!typeWork.empty()) {
        auto [type, name] = typeWork.front();
        typeWork.pop_front();
        if (type->referenceTypeMemo &&
            keys.emplace(type->referenceTypeMemo, "ref:" + name).second)
            typeWork.emplace_back(type->referenceTypeMemo, "ref:" + name);
        if (type->pointerTypeMemo && keys.emplace(type->pointerTypeMemo, "ptr:" + name).second)
            typeWork.emplace_back(type->pointerTypeMemo, "ptr:" + name);
    }
    return keys;
}

struct EmitContext {
    Runtime& rt;
    bool stripAst = false;
    std::unordered_map<const Object*, std::string> keys;
    std::unordered_map<const Object*, uint32_t> index; // empty during tracing
};

/// One code path defines each record's fields; in tracing mode only
/// the referenced children are collected, in writing mode the payload
/// bytes and relocations are produced. Sharing the path guarantees
/// the traced closure covers exactly the serialized references.
struct Emitter {
    EmitContext& ctx;
    bool writing = false;
    uint32_t recordIndex = 0;
    std::vector<uint8_t> payload;
    std::vector<Relocation>* relocations = nullptr;
    std::vector<const Object*>* children = nullptr;

    void u8(uint8_t v) {
        if (writing)
            payload.push_back(v);
    }
    void u32(uint32_t v) {
        if (!writing)
            return;
        for (int i = 0; i < 4; ++i)
            payload.push_back(uint8_t(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        u32(uint32_t(v));
        u32(uint32_t(v >> 32));
    }
    void i64(int64_t v) { u64(uint64_t(v)); }
    void str(const std::string& s) {
        u32(uint32_t(s.size()));
        if (writing)
            payload.insert(payload.end(), s.begin(), s.end());
    }
    void ref(const Object* target) {
        if (!target) {
            u32(nullReference);
            return;
        }
        if (!writing) {
            children->push_back(target);
            return;
        }
        auto it = ctx.index.find(target);
        if (it == ctx.index.end())
            throw ImageError("reference escaped the traced closure");
        relocations->push_back({recordIndex, uint32_t(payload.size()), it->second});
        u32(it->second);
    }
    void value(const ObjectValue& v) {
        switch (v.kind()) {
        case ObjectValue::Kind::SmallInt:
            u8(1);
            i64(v.smallIntValue());
            return;
        case ObjectValue::Kind::Char:
            u8(2);
            u32(uint32_t(v.charValue()));
            return;
        case ObjectValue::Kind::Heap:
            if (!v.object()) {
                u8(0);
                return;
            }
            u8(3);
            ref(v.object());
            return;
        }
    }
    void position(const SourcePosition& p) {
        str(p.fileName);
        u64(p.startOffset);
        u64(p.endOffset);
        u32(uint32_t(p.line));
        u32(uint32_t(p.column));
    }
};

void emitNodeFields(Emitter& e, const AstNode* node) {
    e.u8(uint8_t(node->nodeKind));
    e.position(node->position);
    e.ref(node->analyzedType);
    switch (node->nodeKind) {
    case NodeKind::Literal:
        e.value(static_cast<const LiteralNode*>(node)->value);
        return;
    case NodeKind::Identifier:
        e.ref(static_cast<const IdentifierNode*>(node)->name);
        return;
    case NodeKind::MessageSend: {
        auto* n = static_cast<const MessageSendNode*>(node);
        e.ref(n->receiver);
        e.ref(n->selector);
        e.u32(uint32_t(n->arguments.size()));
        for (AstNode* argument : n->arguments)
            e.ref(argument);
        e.u8(n->dynamicDispatch);
        return;
    }
    case NodeKind::FunctionApplication: {
        auto* n = static_cast<const FunctionApplicationNode*>(node);
        e.ref(n->functional);
        e.u32(uint32_t(n->arguments.size()));
        for (AstNode* argument : n->arguments)
            e.ref(argument);
        return;
    }
    case NodeKind::Cascade: {
        auto* n = static_cast<const CascadeNode*>(node);
        e.ref(n->receiver);
        e.u32(uint32_t(n->messages.size()));
        for (const CascadeMessage& message : n->messages) {
            e.ref(message.selector);
            e.u32(uint32_t(message.arguments.size()));
            for (AstNode* argument : message.arguments)
                e.ref(argument);
        }
        return;
    }
    case NodeKind::Sequence: {
        auto* n = static_cast<const SequenceNode*>(node);
        e.u32(uint32_t(n->expressions.size()));
        for (AstNode* expression : n->expressions)
            e.ref(expression);
        e.u8(n->freshScope);
        return;
    }
    case NodeKind::Lambda: {
        auto* n = static_cast<const LambdaNode*>(node);
        e.u32(uint32_t(n->argumentNodes.size()));
        for (const LambdaArgument& argument : n->argumentNodes) {
            e.ref(argument.name);
            e.ref(argument.typeNode);
        }
        e.ref(n->resultTypeNode);
        e.ref(n->body);
        return;
    }
    case NodeKind::Tuple: {
        auto* n = static_cast<const TupleNode*>(node);
        e.u32(uint32_t(n->elements.size()));
        for (AstNode* element : n->elements)
            e.ref(element);
        return;
    }
    case NodeKind::MakeDictionary: {
        auto* n = static_cast<const MakeDictionaryNode*>(node);
        e.u32(uint32_t(n->pairs.size()));
        for (const auto& [key, value] : n->pairs) {
            e.ref(key);
            e.ref(value);
        }
        return;
    }
    case NodeKind::MakeByteArray: {
        auto* n = static_cast<const MakeByteArrayNode*>(node);
        e.u32(uint32_t(n->elements.size()));
        for (AstNode* element : n->elements)
            e.ref(element);
        return;
    }
    case NodeKind::LiteralArray: {
        auto* n = static_cast<const LiteralArrayNode*>(node);
        e.u32(uint32_t(n->elements.size()));
        for (AstNode* element : n->elements)
            e.ref(element);
        return;
    }
    case NodeKind::Quote:
        e.ref(static_cast<const QuoteNode*>(node)->inner);
        return;
    case NodeKind::QuasiQuote:
        e.ref(static_cast<const QuasiQuoteNode*>(node)->inner);
        return;
    case NodeKind::QuasiUnquote:
        e.ref(static_cast<const QuasiUnquoteNode*>(node)->inner);
        return;
    case NodeKind::Splice:
        e.ref(static_cast<const SpliceNode*>(node)->inner);
        return;
    case NodeKind::ArgumentReference: {
        auto* n = static_cast<const ArgumentReferenceNode*>(node);
        e.ref(n->name);
        e.u32(n->index);
        return;
    }
    case NodeKind::CaptureReference: {
        auto* n = static_cast<const CaptureReferenceNode*>(node);
        e.ref(n->name);
        e.u32(n->index);
        return;
    }
    case NodeKind::LocalReference: {
        auto* n = static_cast<const LocalReferenceNode*>(node);
        e.ref(n->name);
        e.u32(n->index);
        e.u8(n->isMutableCell);
        return;
    }
    case NodeKind::LocalDefinition: {
        auto* n = static_cast<const LocalDefinitionNode*>(node);
        e.ref(n->name);
        e.u32(n->index);
        e.ref(n->initialValue);
        e.u8(n->isMutableCell);
        return;
    }
    case NodeKind::MakeClosure: {
        auto* n = static_cast<const MakeClosureNode*>(node);
        e.ref(n->definition);
        e.u32(uint32_t(n->captureSources.size()));
        for (AstNode* source : n->captureSources)
            e.ref(source);
        return;
    }
    case NodeKind::If: {
        auto* n = static_cast<const IfNode*>(node);
        e.ref(n->condition);
        e.ref(n->thenExpression);
        e.ref(n->elseExpression);
        return;
    }
    case NodeKind::While: {
        auto* n = static_cast<const WhileNode*>(node);
        e.ref(n->condition);
        e.ref(n->body);
        return;
    }
    case NodeKind::BuildNode: {
        auto* n = static_cast<const BuildNodeNode*>(node);
        e.ref(n->templateNode);
        e.u32(uint32_t(n->holeExpressions.size()));
        for (AstNode* hole : n->holeExpressions)
            e.ref(hole);
        return;
    }
    case NodeKind::TemplateHole: {
        auto* n = static_cast<const TemplateHoleNode*>(node);
        e.u32(n->holeIndex);
        e.u8(n->isSplice);
        return;
    }
    }
    throw ImageError("unknown node kind in image serialization");
}

RecordKind emitObject(Emitter& e, const Object* object) {
    auto keyed = e.ctx.keys.find(object);
    if (keyed != e.ctx.keys.end()) {
        e.str(keyed->second);
        return RecordKind::Builtin;
    }
    if (auto* symbol = dynamic_cast<const SymbolObject*>(object)) {
        e.str(symbol->text);
        return RecordKind::Symbol;
    }
    if (auto* big = dynamic_cast<const BigIntObject*>(object)) {
        e.str(big->value.str());
        return RecordKind::BigInteger;
    }
    if (auto* bytes = dynamic_cast<const ByteTupleObject*>(object)) {
        e.ref(bytes->type);
        e.str(std::string(bytes->bytes.begin(), bytes->bytes.end()));
        return RecordKind::Bytes;
    }
    if (auto* ns = dynamic_cast<const NamespaceObject*>(object)) {
        e.ref(ns->name);
        e.u32(uint32_t(ns->members.size()));
        for (const auto& [name, member] : ns->members) {
            e.ref(name);
            e.value(member);
        }
        return RecordKind::Namespace;
    }
    if (auto* entity = dynamic_cast<const ClassEntityObject*>(object)) {
        e.ref(entity->name);
        e.ref(entity->classType);
        e.u8(entity->isPublic);
        return RecordKind::ClassEntity;
    }
    if (auto* entity = dynamic_cast<const FunctionEntityObject*>(object)) {
        e.ref(entity->name);
        e.ref(entity->definition);
        e.u8(entity->isPublic);
        e.u8(entity->isMacro);
        return RecordKind::FunctionEntity;
    }
    if (auto* def = dynamic_cast<const FunctionDefinitionObject*>(object)) {
        bool strip = e.ctx.stripAst;
        e.ref(def->name);
        e.u32(uint32_t(def->parameters.size()));
        for (const FunctionParameter& parameter : def->parameters) {
            e.ref(parameter.name);
            e.ref(parameter.type);
            e.ref(strip ? nullptr : parameter.typeNode);
        }
        e.ref(def->resultType);
        e.ref(strip ? nullptr : def->resultTypeNode);
        e.ref(def->bodyNode);
        e.ref(strip ? nullptr : def->analyzedBody);
        e.u32(def->localSlotCount);
        e.u32(uint32_t(def->flags));
        e.u32(uint32_t(def->captures.size()));
        for (const CaptureSlot& capture : def->captures) {
            e.ref(capture.name);
            e.ref(capture.type);
        }
        e.ref(def->selfType);
        e.ref(def->definitionEnvironment);
        return RecordKind::FunctionDef;
    }
    if (auto* closure = dynamic_cast<const ClosureObject*>(object)) {
        e.ref(closure->definition);
        e.u32(uint32_t(closure->captureVector.size()));
        for (const ObjectValue& capture : closure->captureVector)
            e.value(capture);
        return RecordKind::ClosureRecord;
    }
    if (auto* type = dynamic_cast<const TypeObject*>(object)) {
        e.ref(type->name);
        e.ref(type->supertype);
        e.u8(uint8_t(type->typeKind));
        e.u32(uint32_t(type->bits));
        e.u8(type->isSigned);
        e.u8(type->instancesAreBytes);
        e.u8(type->isFinal);
        e.u8(type->isPublic);
        e.u8(type->delegatesSendsToInstance);
        e.ref(type->baseType);
        e.u32(uint32_t(type->slotLayout.size()));
        for (const FieldSlot& slot : type->slotLayout) {
            e.ref(slot.name);
            e.ref(slot.type);
            e.u32(slot.index);
            e.u8(slot.isPublic);
        }
        auto emitDictionary = [&](const std::map<SymbolObject*, MethodEntry, SymbolTextLess>& d) {
            e.u32(uint32_t(d.size()));
            for (const auto& [selector, entry] : d) {
                e.ref(selector);
                e.value(entry.target);
                e.u8(entry.isMacro);
                e.u8(entry.staticDispatch);
                e.u8(entry.pure);
            }
        };
        emitDictionary(type->methodDictionary);
        emitDictionary(type->macroDictionary);
        return RecordKind::TypeRecord;
    }
    if (auto* env = dynamic_cast<const EnvironmentObject*>(object)) {
        e.ref(env->parent);
        e.u32(uint32_t(env->bindings.size()));
        for (const auto& [name, binding] : env->bindings) {
            e.ref(name);
            e.value(binding.value);
            e.ref(binding.valueType);
            e.u8(binding.isMutable);
            e.u8(uint8_t(binding.kind));
        }
        return RecordKind::EnvironmentRecord;
    }
    if (auto* node = dynamic_cast<const AstNode*>(object)) {
        emitNodeFields(e, node);
        return RecordKind::Node;
    }
    if (auto* location = dynamic_cast<const LocationObject*>(object)) {
        e.ref(location->type);
        e.ref(location->location.object);
        e.u32(location->location.slotIndex);
        return RecordKind::LocationRecord;
    }
    if (auto* tuple = dynamic_cast<const SlotTupleObject*>(object)) {
        e.ref(tuple->type);
        e.u32(uint32_t(tuple->slots.size()));
        for (const ObjectValue& slot : tuple->slots)
            e.value(slot);
        return RecordKind::SlotTuple;
    }
    throw ImageError("object cannot be serialized into an image");
}

std::vector<const Object*> traceClosure(EmitContext& ctx, std::span<const ObjectValue> roots) {
    // Roots are always traced structurally, even when they are builtin
    // objects (the global namespace): tracing the namespace means
    // capturing its members, not a name pointing back at the loader's
    // own empty namespace.
    for (const ObjectValue& root : roots)
        if (root.isHeap())
            ctx.keys.erase(root.object());
    std::vector<const Object*> order;
    std::unordered_set<const Object*> seen;
    std::deque<const Object*> queue;
    auto enqueue = [&](const Object* object) {
        if (object && seen.insert(object).second)
            queue.push_back(object);
    };
    for (const ObjectValue& root : roots) {
        if (!root.isHeap())
            throw ImageError("image roots must be heap objects");
        enqueue(root.object());
    }
    while (!queue.empty()) {
        const Object* object = queue.front();
        queue.pop_front();
        order.push_back(object);
        std::vector<const Object*> children;
        Emitter tracer{ctx, false, 0, {}, nullptr, &children};
        emitObject(tracer, object);
        for (const Object* child : children)
            enqueue(child);
    }
    return order;
}

// --- writing ---

void appendU32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(uint8_t(v >> (8 * i)));
}

// --- reading ---

struct Reader {
    std::span<const uint8_t> data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size())
            throw ImageError("truncated image");
    }
    uint8_t u8() {
        need(1);
        return data[pos++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= uint32_t(data[pos++]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint64_t lo = u32();
        return lo | (uint64_t(u32()) << 32);
    }
    int64_t i64() { return int64_t(u64()); }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data.data() + pos), n);
        pos += n;
        return s;
    }
    void align4() { pos = (pos + 3) & ~size_t(3); }
    bool atEnd() const { return pos >= data.size(); }
};

ObjectValue resolveBuiltin(Runtime& rt, const std::string& key) {
    if (key == "%globalEnvironment")
        return ObjectValue::heap(rt.globalEnvironment());
    if (key == "%globalNamespace")
        return ObjectValue::heap(rt.globalNamespace());
    if (key.rfind("ref:", 0) == 0 || key.rfind("ptr:", 0) == 0) {
        ObjectValue base = resolveBuiltin(rt, key.substr(4));
        auto* baseType = base.as<TypeObject>();
        if (!baseType)
            throw ImageError("derived-type builtin key does not name a type: " + key);
        TypeObject* derived = key[0] == 'r' ? rt.makeReferenceType(baseType)
                                            : rt.makePointerType(baseType);
        return ObjectValue::heap(derived);
    }
    try {
        return rt.builtinNamed(key);
    } catch (const EvaluationError&) {
        throw ImageError("unknown builtin in image: " + key);
    }
}

struct LoadContext {
    Runtime& rt;
    std::vector<RecordKind> kinds;
    std::vector<std::vector<uint8_t>> payloads;
    std::vector<ObjectValue> values;

    ObjectValue recordValue(uint32_t index) const {
        if (index >= values.size())
            throw ImageError("relocation index out of range");
        return values[index];
    }
    template <typename T>
    T* refAs(Reader& r) {
        uint32_t index = r.u32();
        if (index == nullReference)
            return nullptr;
        ObjectValue v = recordValue(index);
        T* typed = v.as<T>();
        if (!typed)
            throw ImageError("image reference has the wrong object kind");
        return typed;
    }
    ObjectValue readValue(Reader& r) {
        switch (r.u8()) {
        case 0:
            return ObjectValue();
        case 1:
            return ObjectValue::smallInt(r.i64());
        case 2:
            return ObjectValue::character(char32_t(r.u32()));
        case 3: {
            uint32_t index = r.u32();
            return recordValue(index);
        }
        default:
            throw ImageError("invalid value tag in image");
        }
    }
    SourcePosition readPosition(Reader& r) {
        SourcePosition p;
        p.fileName = r.str();
        p.startOffset = size_t(r.u64());
        p.endOffset = size_t(r.u64());
        p.line = int(r.u32());
        p.column = int(r.u32());
        return p;
    }
};

AstNode* makeNodeShell(Runtime& rt, NodeKind kind) {
    switch (kind) {
    case NodeKind::Literal: return rt.make<LiteralNode>();
    case NodeKind::Identifier: return rt.make<IdentifierNode>();
    case NodeKind::MessageSend: return rt.make<MessageSendNode>();
    case NodeKind::FunctionApplication: return rt.make<FunctionApplicationNode>();
    case NodeKind::Cascade: return rt.make<CascadeNode>();
    case NodeKind::Sequence: return rt.make<SequenceNode>();
    case NodeKind::Lambda: return rt.make<LambdaNode>();
    case NodeKind::Tuple: return rt.make<TupleNode>();
    case NodeKind::MakeDictionary: return rt.make<MakeDictionaryNode>();
    case NodeKind::MakeByteArray: return rt.make<MakeByteArrayNode>();
    case NodeKind::LiteralArray: return rt.make<LiteralArrayNode>();
    case NodeKind::Quote: return rt.make<QuoteNode>();
    case NodeKind::QuasiQuote: return rt.make<QuasiQuoteNode>();
    case NodeKind::QuasiUnquote: return rt.make<QuasiUnquoteNode>();
    case NodeKind::Splice: return rt.make<SpliceNode>();
    case NodeKind::ArgumentReference: return rt.make<ArgumentReferenceNode>();
    case NodeKind::CaptureReference: return rt.make<CaptureReferenceNode>();
    case NodeKind::LocalReference: return rt.make<LocalReferenceNode>();
    case NodeKind::LocalDefinition: return rt.make<LocalDefinitionNode>();
    case NodeKind::MakeClosure: return rt.make<MakeClosureNode>();
    case NodeKind::If: return rt.make<IfNode>();
    case NodeKind::While: return rt.make<WhileNode>();
    case NodeKind::BuildNode: return rt.make<BuildNodeNode>();
    case NodeKind::TemplateHole: return rt.make<TemplateHoleNode>();
    }
    throw ImageError("invalid node kind in image");
}

void fillNode(LoadContext& c, AstNode* node, Reader& r) {
    r.u8(); // node kind, already consumed during shell creation
    node->position = c.readPosition(r);
    node->analyzedType = c.refAs<TypeObject>(r);
    switch (node->nodeKind) {
    case NodeKind::Literal:
        static_cast<LiteralNode*>(node)->value = c.readValue(r);
        return;
    case NodeKind::Identifier:
        static_cast<IdentifierNode*>(node)->name = c.refAs<SymbolObject>(r);
        return;
    case NodeKind::MessageSend: {
        auto* n = static_cast<MessageSendNode*>(node);
        n->receiver = c.refAs<AstNode>(r);
        n->selector = c.refAs<AstNode>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->arguments.push_back(c.refAs<AstNode>(r));
        n->dynamicDispatch = r.u8() != 0;
        return;
    }
    case NodeKind::FunctionApplication: {
        auto* n = static_cast<FunctionApplicationNode*>(node);
        n->functional = c.refAs<AstNode>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->arguments.push_back(c.refAs<AstNode>(r));
        return;
    }
    case NodeKind::Cascade: {
        auto* n = static_cast<CascadeNode*>(node);
        n->receiver = c.refAs<AstNode>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i) {
            CascadeMessage message;
            message.selector = c.refAs<AstNode>(r);
            uint32_t argumentCount = r.u32();
            for (uint32_t j = 0; j < argumentCount; ++j)
                message.arguments.push_back(c.refAs<AstNode>(r));
            n->messages.push_back(std::move(message));
        }
        return;
    }
    case NodeKind::Sequence: {
        auto* n = static_cast<SequenceNode*>(node);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->expressions.push_back(c.refAs<AstNode>(r));
        n->freshScope = r.u8() != 0;
        return;
    }
    case NodeKind::Lambda: {
        auto* n = static_cast<LambdaNode*>(node);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i) {
            LambdaArgument argument;
            argument.name = c.refAs<SymbolObject>(r);
            argument.typeNode = c.refAs<AstNode>(r);
            n->argumentNodes.push_back(argument);
        }
        n->resultTypeNode = c.refAs<AstNode>(r);
        n->body = c.refAs<AstNode>(r);
        return;
    }
    case NodeKind::Tuple: {
        auto* n = static_cast<TupleNode*>(node);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->elements.push_back(c.refAs<AstNode>(r));
        return;
    }
    case NodeKind::MakeDictionary: {
        auto* n = static_cast<MakeDictionaryNode*>(node);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i) {
            AstNode* key = c.refAs<AstNode>(r);
            AstNode* value = c.refAs<AstNode>(r);
            n->pairs.emplace_back(key, value);
        }
        return;
    }
    case NodeKind::MakeByteArray: {
        auto* n = static_cast<MakeByteArrayNode*>(node);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->elements.push_back(c.refAs<AstNode>(r));
        return;
    }
    case NodeKind::LiteralArray: {
        auto* n = static_cast<LiteralArrayNode*>(node);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->elements.push_back(c.refAs<AstNode>(r));
        return;
    }
    case NodeKind::Quote:
        static_cast<QuoteNode*>(node)->inner = c.refAs<AstNode>(r);
        return;
    case NodeKind::QuasiQuote:
        static_cast<QuasiQuoteNode*>(node)->inner = c.refAs<AstNode>(r);
        return;
    case NodeKind::QuasiUnquote:
        static_cast<QuasiUnquoteNode*>(node)->inner = c.refAs<AstNode>(r);
        return;
    case NodeKind::Splice:
        static_cast<SpliceNode*>(node)->inner = c.refAs<AstNode>(r);
        return;
    case NodeKind::ArgumentReference: {
        auto* n = static_cast<ArgumentReferenceNode*>(node);
        n->name = c.refAs<SymbolObject>(r);
        n->index = r.u32();
        return;
    }
    case NodeKind::CaptureReference: {
        auto* n = static_cast<CaptureReferenceNode*>(node);
        n->name = c.refAs<SymbolObject>(r);
        n->index = r.u32();
        return;
    }
    case NodeKind::LocalReference: {
        auto* n = static_cast<LocalReferenceNode*>(node);
        n->name = c.refAs<SymbolObject>(r);
        n->index = r.u32();
        n->isMutableCell = r.u8() != 0;
        return;
    }
    case NodeKind::LocalDefinition: {
        auto* n = static_cast<LocalDefinitionNode*>(node);
        n->name = c.refAs<SymbolObject>(r);
        n->index = r.u32();
        n->initialValue = c.refAs<AstNode>(r);
        n->isMutableCell = r.u8() != 0;
        return;
    }
    case NodeKind::MakeClosure: {
        auto* n = static_cast<MakeClosureNode*>(node);
        n->definition = c.refAs<FunctionDefinitionObject>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->captureSources.push_back(c.refAs<AstNode>(r));
        return;
    }
    case NodeKind::If: {
        auto* n = static_cast<IfNode*>(node);
        n->condition = c.refAs<AstNode>(r);
        n->thenExpression = c.refAs<AstNode>(r);
        n->elseExpression = c.refAs<AstNode>(r);
        return;
    }
    case NodeKind::While: {
        auto* n = static_cast<WhileNode*>(node);
        n->condition = c.refAs<AstNode>(r);
        n->body = c.refAs<AstNode>(r);
        return;
    }
    case NodeKind::BuildNode: {
        auto* n = static_cast<BuildNodeNode*>(node);
        n->templateNode = c.refAs<AstNode>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            n->holeExpressions.push_back(c.refAs<AstNode>(r));
        return;
    }
    case NodeKind::TemplateHole: {
        auto* n = static_cast<TemplateHoleNode*>(node);
        n->holeIndex = r.u32();
        n->isSplice = r.u8() != 0;
        return;
    }
    }
    throw ImageError("invalid node kind in image");
}

void fillRecord(LoadContext& c, uint32_t index) {
    Runtime& rt = c.rt;
    Reader r{c.payloads[index]};
    Object* object = c.values[index].object();
    switch (c.kinds[index]) {
    case RecordKind::Builtin:
    case RecordKind::Symbol:
    case RecordKind::BigInteger:
        return; // fully constructed in the shell pass
    case RecordKind::Bytes: {
        auto* bytes = static_cast<ByteTupleObject*>(object);
        bytes->type = c.refAs<TypeObject>(r);
        std::string data = r.str();
        bytes->bytes.assign(data.begin(), data.end());
        return;
    }
    case RecordKind::Namespace: {
        auto* ns = static_cast<NamespaceObject*>(object);
        ns->type = rt.builtins.namespaceType;
        ns->name = c.refAs<SymbolObject>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i) {
            SymbolObject* name = c.refAs<SymbolObject>(r);
            ns->members[name] = c.readValue(r);
        }
        return;
    }
    case RecordKind::ClassEntity: {
        auto* entity = static_cast<ClassEntityObject*>(object);
        entity->type = rt.builtins.classEntity;
        entity->name = c.refAs<SymbolObject>(r);
        entity->classType = c.refAs<TypeObject>(r);
        entity->isPublic = r.u8() != 0;
        return;
    }
    case RecordKind::FunctionEntity: {
        auto* entity = static_cast<FunctionEntityObject*>(object);
        entity->type = rt.builtins.functionEntity;
        entity->name = c.refAs<SymbolObject>(r);
        entity->definition = c.refAs<FunctionDefinitionObject>(r);
        entity->isPublic = r.u8() != 0;
        entity->isMacro = r.u8() != 0;
        return;
    }
    case RecordKind::FunctionDef: {
        auto* def = static_cast<FunctionDefinitionObject*>(object);
        def->type = rt.builtins.functionDefinition;
        def->name = c.refAs<SymbolObject>(r);
        uint32_t parameterCount = r.u32();
        for (uint32_t i = 0; i < parameterCount; ++i) {
            FunctionParameter parameter;
            parameter.name = c.refAs<SymbolObject>(r);
            parameter.type = c.refAs<TypeObject>(r);
            parameter.typeNode = c.refAs<AstNode>(r);
            def->parameters.push_back(parameter);
        }
        def->resultType = c.refAs<TypeObject>(r);
        def->resultTypeNode = c.refAs<AstNode>(r);
        def->bodyNode = c.refAs<AstNode>(r);
        def->analyzedBody = c.refAs<AstNode>(r);
        def->localSlotCount = r.u32();
        def->flags = FunctionFlags(r.u32());
        uint32_t captureCount = r.u32();
        for (uint32_t i = 0; i < captureCount; ++i) {
            CaptureSlot capture;
            capture.name = c.refAs<SymbolObject>(r);
            capture.type = c.refAs<TypeObject>(r);
            def->captures.push_back(capture);
        }
        def->selfType = c.refAs<TypeObject>(r);
        def->definitionEnvironment = c.refAs<EnvironmentObject>(r);
        return;
    }
    case RecordKind::ClosureRecord: {
        auto* closure = static_cast<ClosureObject*>(object);
        closure->type = rt.builtins.closure;
        closure->definition = c.refAs<FunctionDefinitionObject>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            closure->captureVector.push_back(c.readValue(r));
        return;
    }
    case RecordKind::TypeRecord: {
        auto* type = static_cast<TypeObject*>(object);
        type->type = rt.builtins.type;
        type->name = c.refAs<SymbolObject>(r);
        type->supertype = c.refAs<TypeObject>(r);
        type->typeKind = TypeKind(r.u8());
        type->bits = int(r.u32());
        type->isSigned = r.u8() != 0;
        type->instancesAreBytes = r.u8() != 0;
        type->isFinal = r.u8() != 0;
        type->isPublic = r.u8() != 0;
        type->delegatesSendsToInstance = r.u8() != 0;
        type->baseType = c.refAs<TypeObject>(r);
        uint32_t slotCount = r.u32();
        for (uint32_t i = 0; i < slotCount; ++i) {
            FieldSlot slot;
            slot.name = c.refAs<SymbolObject>(r);
            slot.type = c.refAs<TypeObject>(r);
            slot.index = r.u32();
            slot.isPublic = r.u8() != 0;
            type->slotLayout.push_back(slot);
        }
        auto readDictionary = [&](std::map<SymbolObject*, MethodEntry, SymbolTextLess>& d) {
            uint32_t count = r.u32();
            for (uint32_t i = 0; i < count; ++i) {
                MethodEntry entry;
                entry.selector = c.refAs<SymbolObject>(r);
                entry.target = c.readValue(r);
                entry.isMacro = r.u8() != 0;
                entry.staticDispatch = r.u8() != 0;
                entry.pure = r.u8() != 0;
                d[entry.selector] = entry;
            }
        };
        readDictionary(type->methodDictionary);
        readDictionary(type->macroDictionary);
        // Reattach derived types to their base's memo slot so later
        // requests reuse the loaded type object.
        if (type->baseType) {
            if (type->typeKind == TypeKind::ReferenceTo && !type->baseType->referenceTypeMemo)
                type->baseType->referenceTypeMemo = type;
            if (type->typeKind == TypeKind::PointerTo && !type->baseType->pointerTypeMemo)
                type->baseType->pointerTypeMemo = type;
        }
        return;
    }
    case RecordKind::EnvironmentRecord: {
        auto* env = static_cast<EnvironmentObject*>(object);
        env->type = rt.builtins.environmentType;
        env->parent = c.refAs<EnvironmentObject>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i) {
            SymbolObject* name = c.refAs<SymbolObject>(r);
            Binding binding;
            binding.value = c.readValue(r);
            binding.valueType = c.refAs<TypeObject>(r);
            binding.isMutable = r.u8() != 0;
            binding.kind = BindingKind(r.u8());
            env->bindings[name] = binding;
        }
        return;
    }
    case RecordKind::Node: {
        auto* node = static_cast<AstNode*>(object);
        node->type = rt.astNodeClassFor(node->nodeKind);
        fillNode(c, node, r);
        return;
    }
    case RecordKind::LocationRecord: {
        auto* location = static_cast<LocationObject*>(object);
        location->type = c.refAs<TypeObject>(r);
        location->location.object = c.refAs<SlotTupleObject>(r);
        location->location.slotIndex = r.u32();
        return;
    }
    case RecordKind::SlotTuple: {
        auto* tuple = static_cast<SlotTupleObject*>(object);
        tuple->type = c.refAs<TypeObject>(r);
        uint32_t count = r.u32();
        for (uint32_t i = 0; i < count; ++i)
            tuple->slots.push_back(c.readValue(r));
        return;
    }
    }
    throw ImageError("invalid record kind in image");
}

} // namespace

std::vector<ObjectValue> traceEntities(Runtime& rt, std::span<const ObjectValue> roots,
                                       bool stripAst) {
    EmitContext ctx{rt, stripAst, builtinKeyMap(rt), {}};
    std::vector<const Object*> order = traceClosure(ctx, roots);
    std::vector<ObjectValue> entities;
    entities.reserve(order.size());
    for (const Object* object : order)
        entities.push_back(ObjectValue::heap(const_cast<Object*>(object)));
    return entities;
}

std::vector<uint8_t> serializeImage(Runtime& rt, std::span<const ObjectValue> roots,
                                    bool stripAst) {
    EmitContext ctx{rt, stripAst, builtinKeyMap(rt), {}};
    std::vector<const Object*> order = traceClosure(ctx, roots);
    for (uint32_t i = 0; i < order.size(); ++i)
        ctx.index.emplace(order[i], i);

    std::vector<uint8_t> body;
    std::vector<Relocation> relocations;
    for (uint32_t i = 0; i < order.size(); ++i) {
        Emitter writer{ctx, true, i, {}, &relocations, nullptr};
        RecordKind kind = emitObject(writer, order[i]);
        appendU32(body, uint32_t(kind));
        appendU32(body, uint32_t(writer.payload.size()));
        body.insert(body.end(), writer.payload.begin(), writer.payload.end());
        while (body.size() % 4 != 0)
            body.push_back(0);
    }

    std::vector<uint8_t> out;
    out.insert(out.end(), imageMagic, imageMagic + 4);
    appendU32(out, imageVersion);
    appendU32(out, uint32_t(order.size()));
    appendU32(out, uint32_t(roots.size()));
    appendU32(out, uint32_t(relocations.size()));
    out.insert(out.end(), body.begin(), body.end());
    for (const Relocation& reloc : relocations) {
        appendU32(out, reloc.record);
        appendU32(out, reloc.offset);
        appendU32(out, reloc.target);
    }
    for (const ObjectValue& root : roots) {
        auto it = ctx.index.find(root.object());
        if (it == ctx.index.end())
            throw ImageError("image root missing from the traced closure");
        appendU32(out, it->second);
    }
    return out;
}

LoadedImage loadImage(Runtime& rt, std::span<const uint8_t> bytes) {
    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), imageMagic, 4) != 0)
        throw ImageError("bad image magic");
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != imageVersion)
        throw ImageError("unsupported image version " + std::to_string(version));
    uint32_t recordCount = r.u32();
    uint32_t rootCount = r.u32();
    uint32_t relocationCount = r.u32();

    LoadContext c{rt, {}, {}, {}};
    c.kinds.reserve(recordCount);
    c.payloads.reserve(recordCount);
    for (uint32_t i = 0; i < recordCount; ++i) {
        uint32_t kind = r.u32();
        if (kind > uint32_t(RecordKind::LocationRecord))
            throw ImageError("invalid record kind in image");
        uint32_t size = r.u32();
        r.need(size);
        c.kinds.push_back(RecordKind(kind));
        c.payloads.emplace_back(bytes.begin() + long(r.pos), bytes.begin() + long(r.pos + size));
        r.pos += size;
        r.align4();
    }
    for (uint32_t i = 0; i < relocationCount; ++i) {
        Relocation reloc{r.u32(), r.u32(), r.u32()};
        if (reloc.record >= recordCount || reloc.target >= recordCount)
            throw ImageError("relocation index out of range");
        if (size_t(reloc.offset) + 4 > c.payloads[reloc.record].size())
            throw ImageError("relocation offset out of range");
    }
    std::vector<uint32_t> rootIndices;
    for (uint32_t i = 0; i < rootCount; ++i) {
        uint32_t index = r.u32();
        if (index >= recordCount)
            throw ImageError("root index out of range");
        rootIndices.push_back(index);
    }

    // Shell pass: every record gets its object so that references can
    // be resolved in one fill pass regardless of graph cycles.
    c.values.resize(recordCount);
    for (uint32_t i = 0; i < recordCount; ++i) {
        Reader payload{c.payloads[i]};
        switch (c.kinds[i]) {
        case RecordKind::Builtin:
            c.values[i] = resolveBuiltin(rt, payload.str());
            break;
        case RecordKind::Symbol:
            c.values[i] = ObjectValue::heap(rt.intern(payload.str()));
            break;
        case RecordKind::BigInteger: {
            auto* big = rt.make<BigIntObject>();
            big->type = rt.builtins.integer;
            try {
                big->value = BigInt(payload.str());
            } catch (const std::exception&) {
                throw ImageError("malformed big-integer payload");
            }
            c.values[i] = ObjectValue::heap(big);
            break;
        }
        case RecordKind::Bytes:
            c.values[i] = ObjectValue::heap(rt.make<ByteTupleObject>());
            break;
        case RecordKind::Namespace:
            c.values[i] = ObjectValue::heap(rt.make<NamespaceObject>());
            break;
        case RecordKind::ClassEntity:
            c.values[i] = ObjectValue::heap(rt.make<ClassEntityObject>());
            break;
        case RecordKind::FunctionEntity:
            c.values[i] = ObjectValue::heap(rt.make<FunctionEntityObject>());
            break;
        case RecordKind::FunctionDef:
            c.values[i] = ObjectValue::heap(rt.make<FunctionDefinitionObject>());
            break;
        case RecordKind::ClosureRecord:
            c.values[i] = ObjectValue::heap(rt.make<ClosureObject>());
            break;
        case RecordKind::TypeRecord:
            c.values[i] = ObjectValue::heap(rt.make<TypeObject>());
            break;
        case RecordKind::EnvironmentRecord:
            c.values[i] = ObjectValue::heap(rt.make<EnvironmentObject>());
            break;
        case RecordKind::Node:
            c.values[i] = ObjectValue::heap(makeNodeShell(rt, NodeKind(payload.u8())));
            break;
        case RecordKind::LocationRecord:
            c.values[i] = ObjectValue::heap(rt.make<LocationObject>());
            break;
        case RecordKind::SlotTuple:
            c.values[i] = ObjectValue::heap(rt.make<SlotTupleObject>());
            break;
        }
    }
    for (uint32_t i = 0; i < recordCount; ++i)
        fillRecord(c, i);

    LoadedImage loaded;
    loaded.entities = c.values;
    for (uint32_t index : rootIndices)
        loaded.roots.push_back(c.values[index]);
    return loaded;
}

} // namespace sysmel
