#ifndef SYSMEL_HIR_HPP
#define SYSMEL_HIR_HPP

#include "sysmel/runtime.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sysmel {

/// High-level SSA IR. Every value has a unique id; blocks have stable
/// ids (never reused) so passes may delete blocks without renumbering.
enum class HirOp : uint8_t {
    Constant,    // constant = the value
    Apply,       // operands = [callee, args...]
    Send,        // constant = selector symbol, operands = [receiver, args...]
    Alloca,      // constant = reference type; yields a storage address
    Load,        // operands = [address]
    Store,       // operands = [address, value]; no result
    SlotGet,     // operands = [object], slotIndex
    SlotSet,     // operands = [object, value], slotIndex; no result
    MakeClosure, // constant = function definition, operands = captures
    Phi,         // operands parallel to blockOperands (predecessor ids)
    Branch,      // blockOperands = [target]
    CondBranch,  // operands = [condition], blockOperands = [then, else]
    Return,      // operands = [result]
};

const char* hirOpName(HirOp op);

struct HirInstruction {
    HirOp op;
    uint32_t id = 0; // result value id; 0 means no result
    TypeObject* type = nullptr;
    ObjectValue constant;
    /// Apply with a callee known at build time keeps it in `constant`
    /// and lists only the arguments in `operands`.
    bool knownCallee = false;
    uint32_t slotIndex = 0; // SlotGet/SlotSet
    std::vector<uint32_t> operands;
    std::vector<uint32_t> blockOperands; // branch targets / phi predecessors

    bool isTerminator() const {
        return op == HirOp::Branch || op == HirOp::CondBranch || op == HirOp::Return;
    }
    bool hasResult() const { return id != 0; }
};

struct HirBlock {
    uint32_t id = 0;
    std::vector<HirInstruction> instructions;
};

struct HirFunction {
    SymbolObject* name = nullptr; // optional
    /// Value ids and types of the declared arguments, then captures.
    std::vector<std::pair<uint32_t, TypeObject*>> parameters;
    std::vector<std::pair<uint32_t, TypeObject*>> captures;
    std::vector<HirBlock> blocks;
    uint32_t entryBlockId = 0;
    uint32_t nextValueId = 1;
    uint32_t nextBlockId = 0;
    FunctionDefinitionObject* definition = nullptr;

    HirBlock* blockById(uint32_t id);
    const HirBlock* blockById(uint32_t id) const;
    size_t instructionCount() const;
};

/// Builds unoptimized SSA from the analyzed body (analyzing first if
/// needed); mutable locals become Alloca + Load/Store. Caches on the
/// definition.
std::shared_ptr<HirFunction> buildHir(Runtime& rt, FunctionDefinitionObject* definition);

/// Promotes non-escaping Allocas to SSA values with Phi merges.
bool promoteAllocasToSsa(HirFunction& fn);

/// Folds pure intrinsic applications of constants, identical-constant
/// Phis and constant-condition branches to fixpoint.
bool constantPropagation(Runtime& rt, HirFunction& fn);

/// Removes unreachable blocks, merges trivial block pairs, prunes Phis.
bool simplifyControlFlow(HirFunction& fn);

/// Splices small known non-recursive callees into the caller.
bool inlineCalls(Runtime& rt, HirFunction& fn);

/// Full pipeline (promote, constprop, simplify, inline, constprop,
/// simplify) honoring the runtime's optimization toggles; cached.
std::shared_ptr<HirFunction> optimizeHir(Runtime& rt, FunctionDefinitionObject* definition);

/// SSA checks: single definition, dominance of uses, one terminator
/// per block, Phi/predecessor correspondence. Empty list = valid.
std::vector<std::string> verifyHir(const HirFunction& fn);

/// One `blockN:` header per block, `%id = op(args) : Type` lines.
std::string dumpHir(Runtime& rt, const HirFunction& fn);

ObjectValue interpretHir(Runtime& rt, const HirFunction& fn, ClosureObject* closure,
                         std::span<const ObjectValue> arguments);

} // namespace sysmel

#endif
