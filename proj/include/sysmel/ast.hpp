#ifndef SYSMEL_AST_HPP
#define SYSMEL_AST_HPP

#include "sysmel/object.hpp"
#include "sysmel/source_position.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sysmel {

class TypeObject;
class SymbolObject;
class FunctionDefinitionObject;

enum class NodeKind : uint8_t {
    // Parse-level forms.
    Literal,
    Identifier,
    MessageSend,
    FunctionApplication,
    Cascade,
    Sequence,
    Lambda,
    Tuple,
    MakeDictionary,
    MakeByteArray,
    LiteralArray,
    Quote,
    QuasiQuote,
    QuasiUnquote,
    Splice,
    // Analysis-produced forms.
    ArgumentReference,
    CaptureReference,
    LocalReference,
    LocalDefinition,
    MakeClosure,
    If,
    While,
    BuildNode,
    TemplateHole,
};

const char* nodeKindName(NodeKind kind);

/// AST nodes are first-class runtime objects: quoting yields them and
/// macros receive and return them.
class AstNode : public Object {
public:
    NodeKind nodeKind;
    SourcePosition position;
    /// Present if and only if the node has passed analysis.
    TypeObject* analyzedType = nullptr;

    explicit AstNode(NodeKind kind) : nodeKind(kind) {}

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 0; }

    bool isAnalyzed() const { return analyzedType != nullptr; }
};

class LiteralNode final : public AstNode {
public:
    LiteralNode() : AstNode(NodeKind::Literal) {}
    ObjectValue value;
};

class IdentifierNode final : public AstNode {
public:
    IdentifierNode() : AstNode(NodeKind::Identifier) {}
    SymbolObject* name = nullptr;
};

class MessageSendNode final : public AstNode {
public:
    MessageSendNode() : AstNode(NodeKind::MessageSend) {}
    AstNode* receiver = nullptr; // may be absent
    AstNode* selector = nullptr;
    std::vector<AstNode*> arguments;
    /// Set on analyzed sends that must dispatch at runtime.
    bool dynamicDispatch = false;
};

class FunctionApplicationNode final : public AstNode {
public:
    FunctionApplicationNode() : AstNode(NodeKind::FunctionApplication) {}
    AstNode* functional = nullptr;
    std::vector<AstNode*> arguments;
};

struct CascadeMessage {
    AstNode* selector = nullptr;
    std::vector<AstNode*> arguments;
};

class CascadeNode final : public AstNode {
public:
    CascadeNode() : AstNode(NodeKind::Cascade) {}
    AstNode* receiver = nullptr;
    std::vector<CascadeMessage> messages;
};

class SequenceNode final : public AstNode {
public:
    SequenceNode() : AstNode(NodeKind::Sequence) {}
    std::vector<AstNode*> expressions;
    /// Braced blocks introduce a fresh lexical scope; the top-level
    /// sequence does not.
    bool freshScope = false;
};

struct LambdaArgument {
    SymbolObject* name = nullptr;
    AstNode* typeNode = nullptr; // optional
};

class LambdaNode final : public AstNode {
public:
    LambdaNode() : AstNode(NodeKind::Lambda) {}
    std::vector<LambdaArgument> argumentNodes;
    AstNode* resultTypeNode = nullptr; // optional
    AstNode* body = nullptr;
};

class TupleNode final : public AstNode {
public:
    TupleNode() : AstNode(NodeKind::Tuple) {}
    std::vector<AstNode*> elements;
};

class MakeDictionaryNode final : public AstNode {
public:
    MakeDictionaryNode() : AstNode(NodeKind::MakeDictionary) {}
    std::vector<std::pair<AstNode*, AstNode*>> pairs;
};

class MakeByteArrayNode final : public AstNode {
public:
    MakeByteArrayNode() : AstNode(NodeKind::MakeByteArray) {}
    std::vector<AstNode*> elements;
};

class LiteralArrayNode final : public AstNode {
public:
    LiteralArrayNode() : AstNode(NodeKind::LiteralArray) {}
    std::vector<AstNode*> elements;
};

class QuoteNode final : public AstNode {
public:
    QuoteNode() : AstNode(NodeKind::Quote) {}
    AstNode* inner = nullptr;
};

class QuasiQuoteNode final : public AstNode {
public:
    QuasiQuoteNode() : AstNode(NodeKind::QuasiQuote) {}
    AstNode* inner = nullptr;
};

class QuasiUnquoteNode final : public AstNode {
public:
    QuasiUnquoteNode() : AstNode(NodeKind::QuasiUnquote) {}
    AstNode* inner = nullptr;
};

class SpliceNode final : public AstNode {
public:
    SpliceNode() : AstNode(NodeKind::Splice) {}
    AstNode* inner = nullptr;
};

// --- Analysis-produced node kinds ---

class ArgumentReferenceNode final : public AstNode {
public:
    ArgumentReferenceNode() : AstNode(NodeKind::ArgumentReference) {}
    SymbolObject* name = nullptr;
    uint32_t index = 0;
};

class CaptureReferenceNode final : public AstNode {
public:
    CaptureReferenceNode() : AstNode(NodeKind::CaptureReference) {}
    SymbolObject* name = nullptr;
    uint32_t index = 0;
};

class LocalReferenceNode final : public AstNode {
public:
    LocalReferenceNode() : AstNode(NodeKind::LocalReference) {}
    SymbolObject* name = nullptr;
    uint32_t index = 0;
    /// Mutable locals hold a cell reference; reads go through refLoad.
    bool isMutableCell = false;
};

class LocalDefinitionNode final : public AstNode {
public:
    LocalDefinitionNode() : AstNode(NodeKind::LocalDefinition) {}
    SymbolObject* name = nullptr;
    uint32_t index = 0;
    AstNode* initialValue = nullptr;
    bool isMutableCell = false;
};

class MakeClosureNode final : public AstNode {
public:
    MakeClosureNode() : AstNode(NodeKind::MakeClosure) {}
    FunctionDefinitionObject* definition = nullptr;
    std::vector<AstNode*> captureSources;
};

class IfNode final : public AstNode {
public:
    IfNode() : AstNode(NodeKind::If) {}
    AstNode* condition = nullptr;
    AstNode* thenExpression = nullptr;
    AstNode* elseExpression = nullptr; // optional
};

class WhileNode final : public AstNode {
public:
    WhileNode() : AstNode(NodeKind::While) {}
    AstNode* condition = nullptr;
    AstNode* body = nullptr;
};

/// Quasi-quote expansion result: clones the template, filling hole
/// index i with the value of holeExpressions[i] (splice holes insert
/// list elements into the surrounding argument vector).
class BuildNodeNode final : public AstNode {
public:
    BuildNodeNode() : AstNode(NodeKind::BuildNode) {}
    AstNode* templateNode = nullptr;
    std::vector<AstNode*> holeExpressions;
};

/// Template hole marker used inside BuildNode templates.
class TemplateHoleNode final : public AstNode {
public:
    TemplateHoleNode() : AstNode(NodeKind::TemplateHole) {}
    uint32_t holeIndex = 0;
    bool isSplice = false;
};

/// Structural equality ignoring positions (and identity hashes).
/// Literal values compare structurally as well.
bool structurallyEqual(const AstNode* a, const AstNode* b);
bool structurallyEqualValues(const ObjectValue& a, const ObjectValue& b);

/// Indentation-encoded tree dump: `Variant @line:col [text]` per node.
std::string dumpAst(const AstNode* node);

} // namespace sysmel

#endif
