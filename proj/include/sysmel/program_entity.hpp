#ifndef SYSMEL_PROGRAM_ENTITY_HPP
#define SYSMEL_PROGRAM_ENTITY_HPP

#include "sysmel/object.hpp"
#include "sysmel/type.hpp"

#include <map>

namespace sysmel {

class FunctionDefinitionObject;

/// Namespace entity: the global namespace object is the reflective
/// tracing root of the program entity graph.
class NamespaceObject final : public Object {
public:
    SymbolObject* name = nullptr;
    std::map<SymbolObject*, ObjectValue, SymbolTextLess> members;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return members.size(); }
};

class ClassEntityObject final : public Object {
public:
    SymbolObject* name = nullptr;
    TypeObject* classType = nullptr;
    bool isPublic = false;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 2; }
};

class FunctionEntityObject final : public Object {
public:
    SymbolObject* name = nullptr;
    FunctionDefinitionObject* definition = nullptr;
    bool isPublic = false;
    bool isMacro = false;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 2; }
};

} // namespace sysmel

#endif
