#include "sysmel/hir.hpp"

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/program_entity.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sysmel {

const char* hirOpName(HirOp op) {
    switch (op) {
    case HirOp::Constant: return "constant";
    case HirOp::Apply: return "apply";
    case HirOp::Send: return "send";
    case HirOp::Alloca: return "alloca";
    case HirOp::Load: return "load";
    case HirOp::Store: return "store";
    case HirOp::SlotGet: return "slotGet";
    case HirOp::SlotSet: return "slotSet";
    case HirOp::MakeClosure: return "makeClosure";
    case HirOp::Phi: return "phi";
    case HirOp::Branch: return "branch";
    case HirOp::CondBranch: return "condBranch";
    case HirOp::Return: return "return";
    }
    return "?";
}

HirBlock* HirFunction::blockById(uint32_t id) {
    for (HirBlock& block : blocks)
        if (block.id == id)
            return &block;
    return nullptr;
}

const HirBlock* HirFunction::blockById(uint32_t id) const {
    return const_cast<HirFunction*>(this)->blockById(id);
}

size_t HirFunction::instructionCount() const {
    size_t n = 0;
    for (const HirBlock& block : blocks)
        n += block.instructions.size();
    return n;
}

namespace {

// ---------------------------------------------------------------- CFG

std::vector<uint32_t> successorsOf(const HirBlock& block) {
    if (block.instructions.empty())
        return {};
    const HirInstruction& last = block.instructions.back();
    if (last.op == HirOp::Branch || last.op == HirOp::CondBranch)
        return last.blockOperands;
    return {};
}

struct Cfg {
    std::unordered_map<uint32_t, size_t> indexOf; // block id -> blocks index
    std::vector<std::vector<size_t>> preds, succs;
    std::vector<size_t> rpo;       // reachable blocks, reverse postorder
    std::vector<size_t> rpoNumber; // SIZE_MAX when unreachable
    std::vector<size_t> idom;      // immediate dominator index, SIZE_MAX unset

    bool dominates(size_t a, size_t b) const {
        while (true) {
            if (a == b)
                return true;
            if (idom[b] == b || idom[b] == SIZE_MAX)
                return false;
            b = idom[b];
        }
    }
};

Cfg computeCfg(const HirFunction& fn) {
    Cfg cfg;
    size_t n = fn.blocks.size();
    for (size_t i = 0; i < n; ++i)
        cfg.indexOf[fn.blocks[i].id] = i;
    cfg.preds.resize(n);
    cfg.succs.resize(n);
    for (size_t i = 0; i < n; ++i) {
        for (uint32_t target : successorsOf(fn.blocks[i])) {
            auto it = cfg.indexOf.find(target);
            if (it == cfg.indexOf.end())
                continue;
            cfg.succs[i].push_back(it->second);
            cfg.preds[it->second].push_back(i);
        }
    }

    // Depth-first postorder from the entry, reversed.
    std::vector<char> visited(n, 0);
    std::vector<size_t> postorder;
    struct Frame { size_t block; size_t next; };
    std::vector<Frame> stack;
    size_t entry = cfg.indexOf.at(fn.entryBlockId);
    visited[entry] = 1;
    stack.push_back({entry, 0});
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next < cfg.succs[frame.block].size()) {
            size_t next = cfg.succs[frame.block][frame.next++];
            if (!visited[next]) {
                visited[next] = 1;
                stack.push_back({next, 0});
            }
        } else {
            postorder.push_back(frame.block);
            stack.pop_back();
        }
    }
    cfg.rpo.assign(postorder.rbegin(), postorder.rend());
    cfg.rpoNumber.assign(n, SIZE_MAX);
    for (size_t i = 0; i < cfg.rpo.size(); ++i)
        cfg.rpoNumber[cfg.rpo[i]] = i;

    // Iterative dominator computation over the reverse postorder.
    cfg.idom.assign(n, SIZE_MAX);
    cfg.idom[entry] = entry;
    auto intersect = [&](size_t a, size_t b) {
        while (a != b) {
            while (cfg.rpoNumber[a] > cfg.rpoNumber[b])
                a = cfg.idom[a];
            while (cfg.rpoNumber[b] > cfg.rpoNumber[a])
                b = cfg.idom[b];
        }
        return a;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t block : cfg.rpo) {
            if (block == entry)
                continue;
            size_t newIdom = SIZE_MAX;
            for (size_t pred : cfg.preds[block]) {
                if (cfg.idom[pred] == SIZE_MAX)
                    continue;
                newIdom = newIdom == SIZE_MAX ? pred : intersect(newIdom, pred);
            }
            if (newIdom != SIZE_MAX && cfg.idom[block] != newIdom) {
                cfg.idom[block] = newIdom;
                changed = true;
            }
        }
    }
    return cfg;
}

void replaceUses(HirFunction& fn, uint32_t from, uint32_t to) {
    for (HirBlock& block : fn.blocks)
        for (HirInstruction& ins : block.instructions)
            for (uint32_t& operand : ins.operands)
                if (operand == from)
                    operand = to;
}

/// Drops phi inputs coming from a predecessor that no longer reaches
/// the block.
void removePhiInputsFrom(HirBlock& block, uint32_t predId) {
    for (HirInstruction& ins : block.instructions) {
        if (ins.op != HirOp::Phi)
            break;
        for (size_t i = 0; i < ins.blockOperands.size();) {
            if (ins.blockOperands[i] == predId) {
                ins.blockOperands.erase(ins.blockOperands.begin() + i);
                ins.operands.erase(ins.operands.begin() + i);
            } else {
                ++i;
            }
        }
    }
}

void retargetPhiInputs(HirBlock& block, uint32_t oldPred, uint32_t newPred) {
    for (HirInstruction& ins : block.instructions) {
        if (ins.op != HirOp::Phi)
            break;
        for (uint32_t& pred : ins.blockOperands)
            if (pred == oldPred)
                pred = newPred;
    }
}

/// Removes value-producing instructions nobody reads (Phi and Constant
/// only; other value ops may have observable effects).
bool dropDeadValues(HirFunction& fn) {
    bool anyChange = false;
    bool changed = true;
    while (changed) {
        changed = false;
        std::unordered_set<uint32_t> used;
        for (HirBlock& block : fn.blocks)
            for (HirInstruction& ins : block.instructions)
                for (uint32_t operand : ins.operands)
                    used.insert(operand);
        for (HirBlock& block : fn.blocks) {
            auto& list = block.instructions;
            for (size_t i = 0; i < list.size();) {
                HirInstruction& ins = list[i];
                bool droppable = (ins.op == HirOp::Phi || ins.op == HirOp::Constant) &&
                                 ins.hasResult() && !used.count(ins.id);
                if (droppable) {
                    list.erase(list.begin() + i);
                    changed = anyChange = true;
                } else {
                    ++i;
                }
            }
        }
    }
    return anyChange;
}

// ------------------------------------------------------------ builder

const IntrinsicFunctionObject* intrinsicOf(const AstNode* node) {
    auto* app = dynamic_cast<const FunctionApplicationNode*>(node);
    if (!app)
        return nullptr;
    auto* lit = dynamic_cast<const LiteralNode*>(app->functional);
    return lit ? lit->value.as<IntrinsicFunctionObject>() : nullptr;
}

bool matchSlotRef(Runtime& rt, AstNode* node, AstNode*& object, uint32_t& slotIndex) {
    auto* app = dynamic_cast<FunctionApplicationNode*>(node);
    const IntrinsicFunctionObject* intrinsic = intrinsicOf(node);
    if (!intrinsic || intrinsic->name->text != "slotRef" || app->arguments.size() != 2)
        return false;
    auto* indexLit = dynamic_cast<LiteralNode*>(app->arguments[1]);
    if (!indexLit)
        return false;
    slotIndex = uint32_t(rt.integerValueOf(indexLit->value).convert_to<uint64_t>());
    object = app->arguments[0];
    return true;
}

class HirBuilder {
public:
    HirBuilder(Runtime& runtime, HirFunction& function) : rt(runtime), fn(function) {}

    void build(FunctionDefinitionObject* definition) {
        fn.definition = definition;
        fn.name = definition->name;
        for (const FunctionParameter& parameter : definition->parameters)
            (void)parameter;
        for (size_t i = 0; i < definition->arity(); ++i) {
            TypeObject* type = rt.builtins.dynamic;
            size_t declared = i;
            if (definition->selfType) {
                if (i == 0)
                    type = definition->selfType;
                declared = i - 1;
            }
            if (!definition->selfType || i > 0)
                type = definition->parameters[declared].type
                           ? definition->parameters[declared].type
                           : rt.builtins.dynamic;
            fn.parameters.emplace_back(newValue(), type);
        }
        for (const CaptureSlot& capture : definition->captures) {
            (void)capture;
            fn.captures.emplace_back(newValue(), rt.builtins.dynamic);
        }
        localValues.assign(definition->localSlotCount, 0);
        fn.entryBlockId = newBlock();
        currentBlock = fn.entryBlockId;
        uint32_t result = compile(definition->analyzedBody);
        emit({HirOp::Return, 0, nullptr, {}, false, 0, {result}, {}});
    }

private:
    Runtime& rt;
    HirFunction& fn;
    uint32_t currentBlock = 0;
    std::vector<uint32_t> localValues;

    uint32_t newValue() { return fn.nextValueId++; }

    uint32_t newBlock() {
        fn.blocks.push_back({fn.nextBlockId, {}});
        return fn.nextBlockId++;
    }

    void emit(HirInstruction ins) {
        fn.blockById(currentBlock)->instructions.push_back(std::move(ins));
    }

    uint32_t emitValue(HirOp op, TypeObject* type, ObjectValue constant,
                       std::vector<uint32_t> operands, bool knownCallee = false,
                       uint32_t slotIndex = 0) {
        uint32_t id = newValue();
        emit({op, id, type, constant, knownCallee, slotIndex, std::move(operands), {}});
        return id;
    }

    uint32_t emitConstant(const ObjectValue& value, TypeObject* type) {
        return emitValue(HirOp::Constant, type, value, {});
    }

    TypeObject* typeOf(const AstNode* node) {
        return node->analyzedType ? node->analyzedType : rt.builtins.dynamic;
    }

    uint32_t compile(AstNode* node) {
        switch (node->nodeKind) {
        case NodeKind::Literal: {
            auto* lit = static_cast<LiteralNode*>(node);
            return emitConstant(lit->value, typeOf(node));
        }
        case NodeKind::ArgumentReference:
            return fn.parameters[static_cast<ArgumentReferenceNode*>(node)->index].first;
        case NodeKind::CaptureReference:
            return fn.captures[static_cast<CaptureReferenceNode*>(node)->index].first;
        case NodeKind::LocalReference:
            return localValues[static_cast<LocalReferenceNode*>(node)->index];
        case NodeKind::LocalDefinition: {
            auto* def = static_cast<LocalDefinitionNode*>(node);
            uint32_t value = compile(def->initialValue);
            if (def->isMutableCell) {
                TypeObject* base = def->analyzedType ? def->analyzedType : rt.builtins.dynamic;
                TypeObject* refType = rt.makeReferenceType(base);
                uint32_t cell =
                    emitValue(HirOp::Alloca, refType, ObjectValue::heap(refType), {});
                emit({HirOp::Store, 0, nullptr, {}, false, 0, {cell, value}, {}});
                localValues[def->index] = cell;
            } else {
                localValues[def->index] = value;
            }
            return value;
        }
        case NodeKind::Sequence: {
            auto* sequence = static_cast<SequenceNode*>(node);
            uint32_t result = 0;
            for (AstNode* expression : sequence->expressions)
                result = compile(expression);
            return result ? result : emitConstant(rt.voidValue, rt.builtins.voidType);
        }
        case NodeKind::If:
            return compileIf(static_cast<IfNode*>(node));
        case NodeKind::While:
            return compileWhile(static_cast<WhileNode*>(node));
        case NodeKind::MakeClosure: {
            auto* make = static_cast<MakeClosureNode*>(node);
            std::vector<uint32_t> captures;
            for (AstNode* source : make->captureSources)
                captures.push_back(compile(source));
            return emitValue(HirOp::MakeClosure, typeOf(node),
                             ObjectValue::heap(make->definition), std::move(captures));
        }
        case NodeKind::MessageSend: {
            auto* send = static_cast<MessageSendNode*>(node);
            auto* selectorLit = dynamic_cast<LiteralNode*>(send->selector);
            SymbolObject* selector =
                selectorLit ? selectorLit->value.as<SymbolObject>() : nullptr;
            if (!selector)
                throw EvaluationError("cannot compile a send without a literal selector");
            std::vector<uint32_t> operands{compile(send->receiver)};
            for (AstNode* argument : send->arguments)
                operands.push_back(compile(argument));
            return emitValue(HirOp::Send, typeOf(node), ObjectValue::heap(selector),
                             std::move(operands));
        }
        case NodeKind::FunctionApplication:
            return compileApplication(static_cast<FunctionApplicationNode*>(node));
        default:
            throw EvaluationError(std::string("cannot compile node kind ") +
                                  nodeKindName(node->nodeKind));
        }
    }

    uint32_t compileIf(IfNode* node) {
        uint32_t cond = compile(node->condition);
        uint32_t thenBlock = newBlock();
        uint32_t elseBlock = newBlock();
        uint32_t mergeBlock = newBlock();
        emit({HirOp::CondBranch, 0, nullptr, {}, false, 0, {cond}, {thenBlock, elseBlock}});

        currentBlock = thenBlock;
        uint32_t thenValue = compile(node->thenExpression);
        uint32_t thenEnd = currentBlock;
        emit({HirOp::Branch, 0, nullptr, {}, false, 0, {}, {mergeBlock}});

        currentBlock = elseBlock;
        uint32_t elseValue = node->elseExpression
                                 ? compile(node->elseExpression)
                                 : emitConstant(rt.nilValue, rt.builtins.undefinedObject);
        uint32_t elseEnd = currentBlock;
        emit({HirOp::Branch, 0, nullptr, {}, false, 0, {}, {mergeBlock}});

        currentBlock = mergeBlock;
        uint32_t id = newValue();
        fn.blockById(mergeBlock)
            ->instructions.push_back({HirOp::Phi, id, typeOf(node), {}, false, 0,
                                      {thenValue, elseValue}, {thenEnd, elseEnd}});
        return id;
    }

    uint32_t compileWhile(WhileNode* node) {
        uint32_t headerBlock = newBlock();
        uint32_t bodyBlock = newBlock();
        uint32_t exitBlock = newBlock();
        emit({HirOp::Branch, 0, nullptr, {}, false, 0, {}, {headerBlock}});

        currentBlock = headerBlock;
        uint32_t cond = compile(node->condition);
        emit({HirOp::CondBranch, 0, nullptr, {}, false, 0, {cond}, {bodyBlock, exitBlock}});

        currentBlock = bodyBlock;
        compile(node->body);
        emit({HirOp::Branch, 0, nullptr, {}, false, 0, {}, {headerBlock}});

        currentBlock = exitBlock;
        return emitConstant(rt.voidValue, rt.builtins.voidType);
    }

    uint32_t compileApplication(FunctionApplicationNode* node) {
        if (const IntrinsicFunctionObject* intrinsic = intrinsicOf(node)) {
            const std::string& name = intrinsic->name->text;
            if (name == "refLoad" && node->arguments.size() == 1) {
                AstNode* object = nullptr;
                uint32_t slotIndex = 0;
                if (matchSlotRef(rt, node->arguments[0], object, slotIndex))
                    return emitValue(HirOp::SlotGet, typeOf(node), {}, {compile(object)},
                                     false, slotIndex);
                return emitValue(HirOp::Load, typeOf(node), {},
                                 {compile(node->arguments[0])});
            }
            if (name == "refStore" && node->arguments.size() == 2) {
                AstNode* object = nullptr;
                uint32_t slotIndex = 0;
                if (matchSlotRef(rt, node->arguments[0], object, slotIndex)) {
                    uint32_t objectValue = compile(object);
                    uint32_t value = compile(node->arguments[1]);
                    emit({HirOp::SlotSet, 0, nullptr, {}, false, slotIndex,
                          {objectValue, value}, {}});
                    return value;
                }
                uint32_t cell = compile(node->arguments[0]);
                uint32_t value = compile(node->arguments[1]);
                emit({HirOp::Store, 0, nullptr, {}, false, 0, {cell, value}, {}});
                return value;
            }
        }
        std::vector<uint32_t> operands;
        bool known = false;
        ObjectValue callee;
        if (auto* lit = dynamic_cast<LiteralNode*>(node->functional)) {
            known = true;
            callee = lit->value;
        } else {
            operands.push_back(compile(node->functional));
        }
        for (AstNode* argument : node->arguments)
            operands.push_back(compile(argument));
        return emitValue(HirOp::Apply, typeOf(node), callee, std::move(operands), known);
    }
};

} // namespace

std::shared_ptr<HirFunction> buildHir(Runtime& rt, FunctionDefinitionObject* definition) {
    if (definition->hirCache)
        return definition->hirCache;
    Analyzer analyzer(rt);
    analyzer.ensureAnalyzed(definition);
    auto fn = std::make_shared<HirFunction>();
    HirBuilder builder(rt, *fn);
    builder.build(definition);
    auto violations = verifyHir(*fn);
    if (!violations.empty())
        throw EvaluationError("SSA construction produced invalid IR: " + violations.front());
    definition->hirCache = fn;
    return fn;
}

// ------------------------------------------------------- mem-to-reg

bool promoteAllocasToSsa(HirFunction& fn) {
    // An alloca is promotable when its address is only ever used as the
    // address operand of loads and stores (it never escapes).
    std::unordered_map<uint32_t, uint32_t> allocaBlocks; // alloca id -> defining block
    std::unordered_map<uint32_t, TypeObject*> allocaTypes;
    for (HirBlock& block : fn.blocks)
        for (HirInstruction& ins : block.instructions)
            if (ins.op == HirOp::Alloca) {
                allocaBlocks[ins.id] = block.id;
                allocaTypes[ins.id] = ins.type;
            }
    if (allocaBlocks.empty())
        return false;

    std::unordered_set<uint32_t> escaped;
    for (HirBlock& block : fn.blocks)
        for (HirInstruction& ins : block.instructions) {
            for (size_t i = 0; i < ins.operands.size(); ++i) {
                uint32_t operand = ins.operands[i];
                if (!allocaBlocks.count(operand))
                    continue;
                bool addressUse = (ins.op == HirOp::Load && i == 0) ||
                                  (ins.op == HirOp::Store && i == 0);
                if (!addressUse)
                    escaped.insert(operand);
            }
        }

    std::vector<uint32_t> promotable;
    for (auto& [id, blockId] : allocaBlocks)
        if (!escaped.count(id))
            promotable.push_back(id);
    if (promotable.empty())
        return false;
    std::sort(promotable.begin(), promotable.end());

    Cfg cfg = computeCfg(fn);
    size_t n = fn.blocks.size();

    // Dominance frontiers.
    std::vector<std::vector<size_t>> frontier(n);
    for (size_t block = 0; block < n; ++block) {
        if (cfg.preds[block].size() < 2)
            continue;
        for (size_t pred : cfg.preds[block]) {
            size_t runner = pred;
            while (runner != cfg.idom[block] && runner != SIZE_MAX &&
                   cfg.rpoNumber[runner] != SIZE_MAX) {
                frontier[runner].push_back(block);
                if (runner == cfg.idom[runner])
                    break;
                runner = cfg.idom[runner];
            }
        }
    }

    // Phi placement at the iterated dominance frontier of the stores.
    std::unordered_map<uint32_t, uint32_t> phiOwner; // phi id -> alloca id
    for (uint32_t alloca : promotable) {
        std::vector<size_t> work;
        for (size_t i = 0; i < n; ++i)
            for (HirInstruction& ins : fn.blocks[i].instructions)
                if (ins.op == HirOp::Store && ins.operands[0] == alloca) {
                    work.push_back(i);
                    break;
                }
        std::unordered_set<size_t> hasPhi;
        while (!work.empty()) {
            size_t block = work.back();
            work.pop_back();
            for (size_t target : frontier[block]) {
                if (hasPhi.count(target))
                    continue;
                hasPhi.insert(target);
                uint32_t id = fn.nextValueId++;
                TypeObject* refType = allocaTypes[alloca];
                TypeObject* base = refType && refType->baseType ? refType->baseType : nullptr;
                fn.blocks[target].instructions.insert(
                    fn.blocks[target].instructions.begin(),
                    {HirOp::Phi, id, base, {}, false, 0, {}, {}});
                phiOwner[id] = alloca;
                work.push_back(target);
            }
        }
    }

    // Renaming along the dominator tree.
    std::vector<std::vector<size_t>> domChildren(n);
    size_t entry = cfg.indexOf.at(fn.entryBlockId);
    for (size_t block : cfg.rpo)
        if (block != entry && cfg.idom[block] != SIZE_MAX)
            domChildren[cfg.idom[block]].push_back(block);

    std::unordered_map<uint32_t, uint32_t> pendingLoads; // load id -> replacement
    struct Frame {
        size_t block;
        size_t child = 0;
        std::unordered_map<uint32_t, uint32_t> current; // alloca -> value
    };
    std::vector<Frame> stack;
    stack.push_back({entry, 0, {}});
    bool first = true;
    std::unordered_set<uint32_t> promoted(promotable.begin(), promotable.end());
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (first || frame.child == 0) {
            if (frame.child == 0) {
                HirBlock& block = fn.blocks[frame.block];
                auto& list = block.instructions;
                for (size_t i = 0; i < list.size();) {
                    HirInstruction& ins = list[i];
                    if (ins.op == HirOp::Phi && phiOwner.count(ins.id)) {
                        frame.current[phiOwner[ins.id]] = ins.id;
                        ++i;
                    } else if (ins.op == HirOp::Store && promoted.count(ins.operands[0])) {
                        frame.current[ins.operands[0]] = ins.operands[1];
                        list.erase(list.begin() + i);
                    } else if (ins.op == HirOp::Load && promoted.count(ins.operands[0])) {
                        pendingLoads[ins.id] = frame.current.at(ins.operands[0]);
                        list.erase(list.begin() + i);
                    } else if (ins.op == HirOp::Alloca && promoted.count(ins.id)) {
                        list.erase(list.begin() + i);
                    } else {
                        ++i;
                    }
                }
                // Feed this block's reaching values into successor phis.
                for (size_t succ : cfg.succs[frame.block]) {
                    for (HirInstruction& ins : fn.blocks[succ].instructions) {
                        if (ins.op != HirOp::Phi || !phiOwner.count(ins.id))
                            continue;
                        auto it = frame.current.find(phiOwner[ins.id]);
                        if (it != frame.current.end()) {
                            ins.operands.push_back(it->second);
                            ins.blockOperands.push_back(block.id);
                        }
                    }
                }
            }
        }
        first = false;
        if (frame.child < domChildren[frame.block].size()) {
            size_t next = domChildren[frame.block][frame.child++];
            stack.push_back({next, 0, frame.current});
        } else {
            stack.pop_back();
        }
    }

    // Loads may have been replaced by values renamed later; resolve
    // chains before substituting.
    for (auto& [loadId, value] : pendingLoads) {
        uint32_t resolved = value;
        while (pendingLoads.count(resolved))
            resolved = pendingLoads[resolved];
        replaceUses(fn, loadId, resolved);
    }
    // Phi inputs may themselves be deleted loads.
    for (HirBlock& block : fn.blocks)
        for (HirInstruction& ins : block.instructions)
            for (uint32_t& operand : ins.operands)
                while (pendingLoads.count(operand))
                    operand = pendingLoads[operand];

    dropDeadValues(fn);
    return true;
}

// --------------------------------------------------------- constprop

bool constantPropagation(Runtime& rt, HirFunction& fn) {
    bool anyChange = false;
    bool changed = true;
    while (changed) {
        changed = false;
        std::unordered_map<uint32_t, const HirInstruction*> constants;
        for (HirBlock& block : fn.blocks)
            for (HirInstruction& ins : block.instructions)
                if (ins.op == HirOp::Constant)
                    constants[ins.id] = &ins;

        for (HirBlock& block : fn.blocks) {
            for (HirInstruction& ins : block.instructions) {
                if (ins.op == HirOp::Apply && ins.knownCallee) {
                    auto* intrinsic = ins.constant.as<IntrinsicFunctionObject>();
                    if (!intrinsic || !intrinsic->pure)
                        continue;
                    std::vector<ObjectValue> args;
                    bool allConstant = true;
                    for (uint32_t operand : ins.operands) {
                        auto it = constants.find(operand);
                        if (it == constants.end()) {
                            allConstant = false;
                            break;
                        }
                        args.push_back(it->second->constant);
                    }
                    if (!allConstant)
                        continue;
                    ObjectValue folded;
                    try {
                        folded = rt.call(ins.constant, args);
                    } catch (const EvaluationError&) {
                        continue; // leave faulting operations for runtime
                    }
                    ins.op = HirOp::Constant;
                    ins.constant = folded;
                    ins.knownCallee = false;
                    ins.operands.clear();
                    changed = anyChange = true;
                } else if (ins.op == HirOp::Phi && !ins.operands.empty()) {
                    // Identical value ids fold unconditionally.
                    bool allSameId = true;
                    for (uint32_t operand : ins.operands)
                        allSameId &= operand == ins.operands[0];
                    if (allSameId) {
                        replaceUses(fn, ins.id, ins.operands[0]);
                        ins.op = HirOp::Constant;
                        ins.constant = rt.nilValue; // now dead, removed below
                        ins.operands.clear();
                        ins.blockOperands.clear();
                        changed = anyChange = true;
                        continue;
                    }
                    bool allSameConstant = true;
                    const HirInstruction* firstConstant = nullptr;
                    for (uint32_t operand : ins.operands) {
                        auto it = constants.find(operand);
                        if (it == constants.end()) {
                            allSameConstant = false;
                            break;
                        }
                        if (!firstConstant)
                            firstConstant = it->second;
                        else if (!structurallyEqualValues(firstConstant->constant,
                                                          it->second->constant))
                            allSameConstant = false;
                        if (!allSameConstant)
                            break;
                    }
                    if (allSameConstant && firstConstant) {
                        ins.op = HirOp::Constant;
                        ins.constant = firstConstant->constant;
                        ins.operands.clear();
                        ins.blockOperands.clear();
                        changed = anyChange = true;
                    }
                }
            }

            // Constant conditions choose their branch now.
            if (!block.instructions.empty()) {
                HirInstruction& last = block.instructions.back();
                if (last.op == HirOp::CondBranch) {
                    auto it = constants.find(last.operands[0]);
                    if (it != constants.end()) {
                        bool taken = rt.booleanValue(it->second->constant);
                        uint32_t target = last.blockOperands[taken ? 0 : 1];
                        uint32_t dropped = last.blockOperands[taken ? 1 : 0];
                        last.op = HirOp::Branch;
                        last.operands.clear();
                        last.blockOperands = {target};
                        if (dropped != target)
                            if (HirBlock* droppedBlock = fn.blockById(dropped))
                                removePhiInputsFrom(*droppedBlock, block.id);
                        changed = anyChange = true;
                    }
                }
            }
        }
        if (changed)
            dropDeadValues(fn);
    }
    return anyChange;
}

// ------------------------------------------------------ simplify-cfg

bool simplifyControlFlow(HirFunction& fn) {
    bool anyChange = false;
    bool changed = true;
    while (changed) {
        changed = false;

        // Unreachable block removal.
        std::unordered_set<uint32_t> reachable;
        std::vector<uint32_t> work{fn.entryBlockId};
        while (!work.empty()) {
            uint32_t id = work.back();
            work.pop_back();
            if (!reachable.insert(id).second)
                continue;
            if (HirBlock* block = fn.blockById(id))
                for (uint32_t succ : successorsOf(*block))
                    work.push_back(succ);
        }
        for (size_t i = 0; i < fn.blocks.size();) {
            if (!reachable.count(fn.blocks[i].id)) {
                uint32_t removed = fn.blocks[i].id;
                fn.blocks.erase(fn.blocks.begin() + i);
                for (HirBlock& block : fn.blocks)
                    removePhiInputsFrom(block, removed);
                changed = anyChange = true;
            } else {
                ++i;
            }
        }

        // Same-target conditional branches become plain branches.
        for (HirBlock& block : fn.blocks) {
            if (block.instructions.empty())
                continue;
            HirInstruction& last = block.instructions.back();
            if (last.op == HirOp::CondBranch && last.blockOperands[0] == last.blockOperands[1]) {
                uint32_t target = last.blockOperands[0];
                last.op = HirOp::Branch;
                last.operands.clear();
                last.blockOperands = {target};
                // The target's phis held one entry per edge; keep one.
                if (HirBlock* targetBlock = fn.blockById(target))
                    for (HirInstruction& phi : targetBlock->instructions) {
                        if (phi.op != HirOp::Phi)
                            break;
                        bool seen = false;
                        for (size_t i = 0; i < phi.blockOperands.size();) {
                            if (phi.blockOperands[i] == block.id && seen) {
                                phi.blockOperands.erase(phi.blockOperands.begin() + i);
                                phi.operands.erase(phi.operands.begin() + i);
                            } else {
                                seen |= phi.blockOperands[i] == block.id;
                                ++i;
                            }
                        }
                    }
                changed = anyChange = true;
            }
        }

        // Single-input phis are copies.
        for (HirBlock& block : fn.blocks) {
            auto& list = block.instructions;
            for (size_t i = 0; i < list.size();) {
                if (list[i].op == HirOp::Phi && list[i].operands.size() == 1) {
                    replaceUses(fn, list[i].id, list[i].operands[0]);
                    list.erase(list.begin() + i);
                    changed = anyChange = true;
                } else {
                    ++i;
                }
            }
        }

        // Merge a block into its unique branching predecessor.
        std::unordered_map<uint32_t, int> predCount;
        std::unordered_map<uint32_t, uint32_t> solePred;
        for (HirBlock& block : fn.blocks)
            for (uint32_t succ : successorsOf(block)) {
                predCount[succ]++;
                solePred[succ] = block.id;
            }
        for (size_t i = 0; i < fn.blocks.size(); ++i) {
            HirBlock& target = fn.blocks[i];
            if (target.id == fn.entryBlockId || predCount[target.id] != 1)
                continue;
            HirBlock* pred = fn.blockById(solePred[target.id]);
            if (!pred || pred->instructions.empty())
                continue;
            HirInstruction& terminator = pred->instructions.back();
            if (terminator.op != HirOp::Branch || terminator.blockOperands[0] != target.id)
                continue;
            bool hasPhi = !target.instructions.empty() &&
                          target.instructions.front().op == HirOp::Phi;
            if (hasPhi)
                continue; // single-input phis were removed above; re-loop
            uint32_t predId = pred->id;
            uint32_t targetId = target.id;
            pred->instructions.pop_back();
            pred->instructions.insert(pred->instructions.end(),
                                      target.instructions.begin(), target.instructions.end());
            for (uint32_t succ : successorsOf(*pred))
                if (HirBlock* succBlock = fn.blockById(succ))
                    retargetPhiInputs(*succBlock, targetId, predId);
            for (size_t j = 0; j < fn.blocks.size(); ++j)
                if (fn.blocks[j].id == targetId) {
                    fn.blocks.erase(fn.blocks.begin() + j);
                    break;
                }
            changed = anyChange = true;
            break; // iteration state invalidated; restart scan
        }
    }
    return anyChange;
}

// ---------------------------------------------------------- inlining

namespace {

void spliceCallee(HirFunction& fn, size_t blockIndex, size_t callIndex,
                  const HirFunction& callee);

FunctionDefinitionObject* inlinableDefinition(const HirInstruction& ins) {
    if (ins.op != HirOp::Apply || !ins.knownCallee)
        return nullptr;
    if (auto* entity = ins.constant.as<FunctionEntityObject>())
        return entity->definition;
    if (auto* definition = ins.constant.as<FunctionDefinitionObject>())
        return definition;
    return nullptr;
}

} // namespace

bool inlineCalls(Runtime& rt, HirFunction& fn) {
    bool anyChange = false;
    int budget = 100; // hard cap against pathological call chains
    bool changed = true;
    while (changed && budget > 0) {
        changed = false;
        for (size_t blockIndex = 0; blockIndex < fn.blocks.size() && !changed; ++blockIndex) {
            HirBlock& block = fn.blocks[blockIndex];
            for (size_t i = 0; i < block.instructions.size(); ++i) {
                FunctionDefinitionObject* callee = inlinableDefinition(block.instructions[i]);
                if (!callee || callee == fn.definition || !callee->captures.empty())
                    continue;
                std::shared_ptr<HirFunction> calleeBase;
                try {
                    calleeBase = buildHir(rt, callee);
                } catch (const SemanticError&) {
                    continue;
                }
                HirFunction calleeHir = *calleeBase; // value copy; promote locally
                promoteAllocasToSsa(calleeHir);
                if (calleeHir.instructionCount() > size_t(rt.optimization.inlineThreshold))
                    continue;
                // A callee calling back into this function would splice
                // forever on the next sweep; refuse those too.
                bool recursive = false;
                for (HirBlock& calleeBlock : calleeHir.blocks)
                    for (HirInstruction& ins : calleeBlock.instructions)
                        if (inlinableDefinition(ins) == fn.definition ||
                            inlinableDefinition(ins) == callee)
                            recursive = true;
                if (recursive)
                    continue;

                spliceCallee(fn, blockIndex, i, calleeHir);
                changed = anyChange = true;
                --budget;
                break;
            }
        }
    }
    return anyChange;
}

namespace {

void spliceCallee(HirFunction& fn, size_t blockIndex, size_t callIndex,
                  const HirFunction& callee) {
    HirInstruction call = fn.blocks[blockIndex].instructions[callIndex];

    // Continuation block receives the instructions after the call.
    uint32_t contId = fn.nextBlockId++;
    HirBlock continuation{contId, {}};
    {
        HirBlock& caller = fn.blocks[blockIndex];
        continuation.instructions.assign(caller.instructions.begin() + callIndex + 1,
                                         caller.instructions.end());
        caller.instructions.resize(callIndex);
    }
    uint32_t callerId = fn.blocks[blockIndex].id;
    for (uint32_t succ : successorsOf(continuation))
        if (HirBlock* succBlock = fn.blockById(succ))
            retargetPhiInputs(*succBlock, callerId, contId);

    // Remap callee values and blocks into the caller's id spaces.
    uint32_t valueOffset = fn.nextValueId;
    fn.nextValueId += callee.nextValueId;
    std::unordered_map<uint32_t, uint32_t> blockMap;
    for (const HirBlock& block : callee.blocks)
        blockMap[block.id] = fn.nextBlockId++;
    std::unordered_map<uint32_t, uint32_t> valueMap;
    for (size_t i = 0; i < callee.parameters.size(); ++i)
        valueMap[callee.parameters[i].first] = call.operands[i];
    auto mapValue = [&](uint32_t id) {
        auto it = valueMap.find(id);
        return it != valueMap.end() ? it->second : id + valueOffset;
    };

    std::vector<std::pair<uint32_t, uint32_t>> returns; // (value, block id)
    std::vector<HirBlock> newBlocks;
    for (const HirBlock& block : callee.blocks) {
        HirBlock mapped{blockMap[block.id], {}};
        for (const HirInstruction& ins : block.instructions) {
            HirInstruction copy = ins;
            if (copy.hasResult())
                copy.id = mapValue(copy.id);
            for (uint32_t& operand : copy.operands)
                operand = mapValue(operand);
            if (copy.op == HirOp::Branch || copy.op == HirOp::CondBranch) {
                for (uint32_t& target : copy.blockOperands)
                    target = blockMap[target];
            } else if (copy.op == HirOp::Phi) {
                for (uint32_t& pred : copy.blockOperands)
                    pred = blockMap[pred];
            }
            if (copy.op == HirOp::Return) {
                returns.emplace_back(copy.operands[0], mapped.id);
                copy = {HirOp::Branch, 0, nullptr, {}, false, 0, {}, {contId}};
            }
            mapped.instructions.push_back(std::move(copy));
        }
        newBlocks.push_back(std::move(mapped));
    }

    // The call becomes a branch into the callee entry; the result is a
    // phi over the callee's returns.
    fn.blocks[blockIndex].instructions.push_back(
        {HirOp::Branch, 0, nullptr, {}, false, 0, {}, {blockMap[callee.entryBlockId]}});
    HirInstruction resultPhi{HirOp::Phi, call.id, call.type, {}, false, 0, {}, {}};
    for (auto& [value, blockId] : returns) {
        resultPhi.operands.push_back(value);
        resultPhi.blockOperands.push_back(blockId);
    }
    continuation.instructions.insert(continuation.instructions.begin(), std::move(resultPhi));

    for (HirBlock& block : newBlocks)
        fn.blocks.push_back(std::move(block));
    fn.blocks.push_back(std::move(continuation));
}

} // namespace

// ----------------------------------------------------------- pipeline

std::shared_ptr<HirFunction> optimizeHir(Runtime& rt, FunctionDefinitionObject* definition) {
    if (definition->hirOptimizedCache)
        return definition->hirOptimizedCache;
    auto fn = std::make_shared<HirFunction>(*buildHir(rt, definition));
    const OptimizationConfig& config = rt.optimization;
    promoteAllocasToSsa(*fn);
    if (config.constantPropagation)
        constantPropagation(rt, *fn);
    if (config.simplifyControlFlow)
        simplifyControlFlow(*fn);
    if (config.inlineCalls)
        inlineCalls(rt, *fn);
    if (config.constantPropagation)
        constantPropagation(rt, *fn);
    if (config.simplifyControlFlow)
        simplifyControlFlow(*fn);
    auto violations = verifyHir(*fn);
    if (!violations.empty())
        throw EvaluationError("optimization produced invalid IR: " + violations.front());
    definition->hirOptimizedCache = fn;
    return fn;
}

// ----------------------------------------------------------- verifier

std::vector<std::string> verifyHir(const HirFunction& fn) {
    std::vector<std::string> violations;
    std::unordered_map<uint32_t, uint32_t> defBlock; // value id -> block id
    std::unordered_map<uint32_t, size_t> defIndex;
    std::unordered_set<uint32_t> defined;
    for (auto& [id, type] : fn.parameters)
        defined.insert(id);
    for (auto& [id, type] : fn.captures)
        defined.insert(id);

    for (const HirBlock& block : fn.blocks) {
        bool sawNonPhi = false;
        bool sawTerminator = false;
        for (size_t i = 0; i < block.instructions.size(); ++i) {
            const HirInstruction& ins = block.instructions[i];
            if (ins.op == HirOp::Phi) {
                if (sawNonPhi)
                    violations.push_back("phi after non-phi in block " +
                                         std::to_string(block.id));
            } else {
                sawNonPhi = true;
            }
            if (sawTerminator)
                violations.push_back("instruction after terminator in block " +
                                     std::to_string(block.id));
            if (ins.isTerminator())
                sawTerminator = true;
            if (ins.hasResult()) {
                if (!defined.insert(ins.id).second)
                    violations.push_back("value %" + std::to_string(ins.id) +
                                         " defined more than once");
                defBlock[ins.id] = block.id;
                defIndex[ins.id] = i;
            }
            for (uint32_t target : ins.blockOperands)
                if (ins.op != HirOp::Phi && !fn.blockById(target))
                    violations.push_back("branch to unknown block " + std::to_string(target));
        }
        if (!sawTerminator)
            violations.push_back("block " + std::to_string(block.id) +
                                 " does not end in a terminator");
    }

    // Operands must be defined and definitions must dominate uses.
    Cfg cfg = computeCfg(fn);
    auto blockIndexOf = [&](uint32_t id) -> size_t {
        auto it = cfg.indexOf.find(id);
        return it == cfg.indexOf.end() ? SIZE_MAX : it->second;
    };
    for (const HirBlock& block : fn.blocks) {
        size_t useBlock = blockIndexOf(block.id);
        if (cfg.rpoNumber[useBlock] == SIZE_MAX)
            continue; // unreachable code is checked for definitions only
        for (size_t i = 0; i < block.instructions.size(); ++i) {
            const HirInstruction& ins = block.instructions[i];
            for (size_t j = 0; j < ins.operands.size(); ++j) {
                uint32_t operand = ins.operands[j];
                if (!defined.count(operand)) {
                    violations.push_back("use of undefined value %" + std::to_string(operand));
                    continue;
                }
                auto defIt = defBlock.find(operand);
                if (defIt == defBlock.end())
                    continue; // parameter or capture: always dominates
                size_t definedIn = blockIndexOf(defIt->second);
                if (definedIn == SIZE_MAX || cfg.rpoNumber[definedIn] == SIZE_MAX)
                    continue;
                if (ins.op == HirOp::Phi) {
                    size_t predIndex = blockIndexOf(ins.blockOperands[j]);
                    if (predIndex != SIZE_MAX && cfg.rpoNumber[predIndex] != SIZE_MAX &&
                        !cfg.dominates(definedIn, predIndex))
                        violations.push_back("phi input %" + std::to_string(operand) +
                                             " does not dominate its incoming edge");
                } else if (definedIn == useBlock) {
                    if (defIndex[operand] >= i)
                        violations.push_back("use of %" + std::to_string(operand) +
                                             " before its definition");
                } else if (!cfg.dominates(definedIn, useBlock)) {
                    violations.push_back("definition of %" + std::to_string(operand) +
                                         " does not dominate its use");
                }
            }
            if (ins.op == HirOp::Phi) {
                // Inputs correspond one-to-one to the predecessors.
                std::vector<uint32_t> preds;
                size_t index = blockIndexOf(block.id);
                for (size_t pred : cfg.preds[index])
                    preds.push_back(fn.blocks[pred].id);
                std::vector<uint32_t> inputs = ins.blockOperands;
                std::sort(preds.begin(), preds.end());
                std::sort(inputs.begin(), inputs.end());
                if (preds != inputs)
                    violations.push_back("phi %" + std::to_string(ins.id) +
                                         " inputs do not match the block predecessors");
            }
        }
    }
    return violations;
}

// --------------------------------------------------------------- dump

std::string dumpHir(Runtime& rt, const HirFunction& fn) {
    std::ostringstream out;
    for (const HirBlock& block : fn.blocks) {
        out << "block" << block.id << ":\n";
        for (const HirInstruction& ins : block.instructions) {
            out << "  ";
            if (ins.hasResult())
                out << "%" << ins.id << " = ";
            out << hirOpName(ins.op) << "(";
            bool firstArg = true;
            auto comma = [&] {
                if (!firstArg)
                    out << ", ";
                firstArg = false;
            };
            switch (ins.op) {
            case HirOp::Constant:
                comma();
                out << rt.printString(ins.constant);
                break;
            case HirOp::Apply:
                if (ins.knownCallee) {
                    comma();
                    out << rt.printString(ins.constant);
                }
                break;
            case HirOp::Send:
                comma();
                out << "#" << ins.constant.as<SymbolObject>()->text;
                break;
            case HirOp::MakeClosure:
                comma();
                if (auto* def = ins.constant.as<FunctionDefinitionObject>())
                    out << (def->name ? def->name->text : std::string("<lambda>"));
                break;
            default:
                break;
            }
            if (ins.op == HirOp::Phi) {
                for (size_t i = 0; i < ins.operands.size(); ++i) {
                    comma();
                    out << "[%" << ins.operands[i] << ", block" << ins.blockOperands[i] << "]";
                }
            } else {
                for (uint32_t operand : ins.operands) {
                    comma();
                    out << "%" << operand;
                }
                if (ins.op == HirOp::SlotGet || ins.op == HirOp::SlotSet) {
                    comma();
                    out << "slot" << ins.slotIndex;
                }
                for (uint32_t target : ins.blockOperands) {
                    comma();
                    out << "block" << target;
                }
            }
            out << ")";
            if (ins.hasResult())
                out << " : " << (ins.type && ins.type->name ? ins.type->name->text : "Dynamic");
            out << "\n";
        }
    }
    return out.str();
}

// --------------------------------------------------------- interpreter

ObjectValue interpretHir(Runtime& rt, const HirFunction& fn, ClosureObject* closure,
                         std::span<const ObjectValue> arguments) {
    ActivationDepthGuard guard(rt);
    std::vector<ObjectValue> values(fn.nextValueId, rt.nilValue);
    for (size_t i = 0; i < fn.parameters.size() && i < arguments.size(); ++i)
        values[fn.parameters[i].first] = arguments[i];
    for (size_t i = 0; i < fn.captures.size(); ++i)
        values[fn.captures[i].first] =
            closure && i < closure->captureVector.size() ? closure->captureVector[i]
                                                         : rt.nilValue;

    auto location = [&](const ObjectValue& value) {
        auto* loc = value.as<LocationObject>();
        if (!loc || !loc->location.valid())
            throw EvaluationError("value is not a valid storage location");
        return loc;
    };
    auto slots = [&](const ObjectValue& value, uint32_t index) -> ObjectValue& {
        auto* obj = value.as<SlotTupleObject>();
        if (!obj)
            throw EvaluationError("slot access on a non-slot object");
        if (index >= obj->slots.size())
            throw EvaluationError("slot index out of range");
        return obj->slots[index];
    };

    uint32_t currentBlock = fn.entryBlockId;
    uint32_t previousBlock = UINT32_MAX;
    std::vector<ObjectValue> callArgs;
    while (true) {
        const HirBlock* block = fn.blockById(currentBlock);
        if (!block)
            throw EvaluationError("branch to unknown block");

        // Phis read their inputs simultaneously on block entry.
        size_t firstNonPhi = 0;
        std::vector<std::pair<uint32_t, ObjectValue>> phiValues;
        while (firstNonPhi < block->instructions.size() &&
               block->instructions[firstNonPhi].op == HirOp::Phi) {
            const HirInstruction& phi = block->instructions[firstNonPhi];
            bool found = false;
            for (size_t i = 0; i < phi.blockOperands.size(); ++i)
                if (phi.blockOperands[i] == previousBlock) {
                    phiValues.emplace_back(phi.id, values[phi.operands[i]]);
                    found = true;
                    break;
                }
            if (!found)
                throw EvaluationError("phi has no input for the incoming edge");
            ++firstNonPhi;
        }
        for (auto& [id, value] : phiValues)
            values[id] = value;

        for (size_t i = firstNonPhi; i < block->instructions.size(); ++i) {
            const HirInstruction& ins = block->instructions[i];
            switch (ins.op) {
            case HirOp::Constant:
                values[ins.id] = ins.constant;
                break;
            case HirOp::Apply: {
                callArgs.clear();
                ObjectValue callee;
                size_t firstArgIndex = 0;
                if (ins.knownCallee) {
                    callee = ins.constant;
                } else {
                    callee = values[ins.operands[0]];
                    firstArgIndex = 1;
                }
                for (size_t j = firstArgIndex; j < ins.operands.size(); ++j)
                    callArgs.push_back(values[ins.operands[j]]);
                values[ins.id] = rt.call(callee, callArgs);
                break;
            }
            case HirOp::Send: {
                callArgs.clear();
                for (size_t j = 1; j < ins.operands.size(); ++j)
                    callArgs.push_back(values[ins.operands[j]]);
                values[ins.id] = rt.dispatchMessage(values[ins.operands[0]],
                                                    ins.constant.as<SymbolObject>(), callArgs);
                break;
            }
            case HirOp::Alloca:
                values[ins.id] = ObjectValue::heap(
                    rt.makeCell(rt.nilValue, ins.constant.as<TypeObject>()));
                break;
            case HirOp::Load:
                values[ins.id] = location(values[ins.operands[0]])->location.load();
                break;
            case HirOp::Store:
                location(values[ins.operands[0]])->location.store(values[ins.operands[1]]);
                break;
            case HirOp::SlotGet:
                values[ins.id] = slots(values[ins.operands[0]], ins.slotIndex);
                break;
            case HirOp::SlotSet:
                slots(values[ins.operands[0]], ins.slotIndex) = values[ins.operands[1]];
                break;
            case HirOp::MakeClosure: {
                auto* made = rt.make<ClosureObject>();
                made->type = rt.builtins.closure;
                made->definition = ins.constant.as<FunctionDefinitionObject>();
                for (uint32_t operand : ins.operands)
                    made->captureVector.push_back(values[operand]);
                values[ins.id] = ObjectValue::heap(made);
                break;
            }
            case HirOp::Phi:
                throw EvaluationError("phi after non-phi instruction");
            case HirOp::Branch:
                previousBlock = currentBlock;
                currentBlock = ins.blockOperands[0];
                goto nextBlock;
            case HirOp::CondBranch:
                previousBlock = currentBlock;
                currentBlock = rt.booleanValue(values[ins.operands[0]]) ? ins.blockOperands[0]
                                                                        : ins.blockOperands[1];
                goto nextBlock;
            case HirOp::Return:
                return values[ins.operands[0]];
            }
        }
        throw EvaluationError("block ended without a terminator");
    nextBlock:;
    }
}

} // namespace sysmel
