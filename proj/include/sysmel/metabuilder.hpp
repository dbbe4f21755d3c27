#ifndef SYSMEL_METABUILDER_HPP
#define SYSMEL_METABUILDER_HPP

#include "sysmel/analyzer.hpp"

namespace sysmel {

/// Stateful syntactic builder: consumes the selectors/arguments of a
/// message chain during analysis, mutating its own state, and produces
/// a program entity or AST when finished.
class MetabuilderObject : public Object {
public:
    bool finished = false;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 0; }

    /// Consumes one message of the chain; returns the replacement node
    /// (usually a literal holding the builder itself, for chaining).
    virtual AstNode* handleMessage(Analyzer& analyzer, AnalysisContext& ctx,
                                   SymbolObject* selector, std::span<AstNode* const> arguments,
                                   const SourcePosition& position) = 0;

    /// Consumes a juxtaposed application `builder(...)`.
    virtual AstNode* handleApplication(Analyzer& analyzer, AnalysisContext& ctx,
                                       std::span<AstNode* const> arguments,
                                       const SourcePosition& position);

    /// Called when the statement ends with the builder still
    /// unfinished (e.g. `public field first => Int32.`).
    virtual AstNode* finishStatement(Analyzer& analyzer, AnalysisContext& ctx,
                                     const SourcePosition& position);

    const char* builderName() const;

protected:
    void checkNotFinished(const SourcePosition& position) const;
};

/// Binds the standard builder factories (let, public, private, class,
/// field, method, function, plus the macro/pure/eager modifiers) into
/// the global environment. Called once from Runtime setup.
void installMetabuilderFactories(Runtime& rt);

/// True when the value is a metabuilder instance (the analyzer routes
/// sends on literal builder receivers through the builder).
MetabuilderObject* asMetabuilder(const ObjectValue& value);

/// Resolves a MacroFactory binding into a fresh builder instance.
ObjectValue spawnBuilderFactory(Runtime& rt, const Binding& binding);

} // namespace sysmel

#endif
