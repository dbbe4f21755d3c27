#include "sysmel/bytecode.hpp"

#include "sysmel/analyzer.hpp"
#include "sysmel/errors.hpp"

#include <sstream>

namespace sysmel {

const char* opcodeName(Opcode opcode) {
    switch (opcode) {
    case Opcode::LoadLiteral: return "LoadLiteral";
    case Opcode::Move: return "Move";
    case Opcode::LoadArgument: return "LoadArgument";
    case Opcode::LoadCapture: return "LoadCapture";
    case Opcode::MakeClosure: return "MakeClosure";
    case Opcode::Call: return "Call";
    case Opcode::Send: return "Send";
    case Opcode::AllocCell: return "AllocCell";
    case Opcode::CellLoad: return "CellLoad";
    case Opcode::CellStore: return "CellStore";
    case Opcode::SlotLoad: return "SlotLoad";
    case Opcode::SlotStore: return "SlotStore";
    case Opcode::Jump: return "Jump";
    case Opcode::JumpIfFalse: return "JumpIfFalse";
    case Opcode::JumpIfTrue: return "JumpIfTrue";
    case Opcode::Return: return "Return";
    case Opcode::Intrinsic: return "Intrinsic";
    }
    return "?";
}

namespace {

/// Recognizes an application of a named intrinsic in an analyzed body.
const IntrinsicFunctionObject* intrinsicOf(const AstNode* node) {
    auto* app = dynamic_cast<const FunctionApplicationNode*>(node);
    if (!app)
        return nullptr;
    auto* lit = dynamic_cast<const LiteralNode*>(app->functional);
    return lit ? lit->value.as<IntrinsicFunctionObject>() : nullptr;
}

/// Matches slotRef(object, <literal index>) so field access compiles
/// to direct slot instructions.
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

class BytecodeCompiler {
public:
    BytecodeCompiler(Runtime& runtime, BytecodeFunction& function)
        : rt(runtime), fn(function) {}

    void compileFunction(FunctionDefinitionObject* definition) {
        fn.definition = definition;
        fn.argumentCount = uint32_t(definition->arity());
        fn.captureCount = uint32_t(definition->captures.size());
        nextRegister = definition->localSlotCount;
        fn.registerCount = std::max(fn.registerCount, nextRegister);
        uint32_t result = compile(definition->analyzedBody);
        emit({Opcode::Return, result});
    }

private:
    Runtime& rt;
    BytecodeFunction& fn;
    uint32_t nextRegister = 0;

    uint32_t allocReg() {
        uint32_t reg = nextRegister++;
        fn.registerCount = std::max(fn.registerCount, nextRegister);
        return reg;
    }

    uint32_t literalIndex(const ObjectValue& value) {
        fn.literals.push_back(value);
        return uint32_t(fn.literals.size() - 1);
    }

    size_t emit(BcInstruction instruction) {
        fn.instructions.push_back(std::move(instruction));
        return fn.instructions.size() - 1;
    }

    void patchTarget(size_t at, uint32_t target) {
        BcInstruction& ins = fn.instructions[at];
        if (ins.opcode == Opcode::Jump)
            ins.a = target;
        else
            ins.b = target;
    }

    uint32_t here() const { return uint32_t(fn.instructions.size()); }

    std::vector<uint32_t> compileAll(const std::vector<AstNode*>& nodes) {
        std::vector<uint32_t> regs;
        regs.reserve(nodes.size());
        for (AstNode* node : nodes)
            regs.push_back(compile(node));
        return regs;
    }

    uint32_t loadLiteral(const ObjectValue& value) {
        uint32_t dst = allocReg();
        emit({Opcode::LoadLiteral, dst, literalIndex(value)});
        return dst;
    }

    uint32_t compile(AstNode* node) {
        switch (node->nodeKind) {
        case NodeKind::Literal:
            return loadLiteral(static_cast<LiteralNode*>(node)->value);
        case NodeKind::ArgumentReference: {
            uint32_t dst = allocReg();
            emit({Opcode::LoadArgument, dst, static_cast<ArgumentReferenceNode*>(node)->index});
            return dst;
        }
        case NodeKind::CaptureReference: {
            uint32_t dst = allocReg();
            emit({Opcode::LoadCapture, dst, static_cast<CaptureReferenceNode*>(node)->index});
            return dst;
        }
        case NodeKind::LocalReference:
            return static_cast<LocalReferenceNode*>(node)->index;
        case NodeKind::LocalDefinition:
            return compileLocalDefinition(static_cast<LocalDefinitionNode*>(node));
        case NodeKind::Sequence: {
            auto* sequence = static_cast<SequenceNode*>(node);
            uint32_t result = 0;
            bool any = false;
            for (AstNode* expression : sequence->expressions) {
                result = compile(expression);
                any = true;
            }
            return any ? result : loadLiteral(rt.voidValue);
        }
        case NodeKind::If:
            return compileIf(static_cast<IfNode*>(node));
        case NodeKind::While:
            return compileWhile(static_cast<WhileNode*>(node));
        case NodeKind::MakeClosure: {
            auto* make = static_cast<MakeClosureNode*>(node);
            std::vector<uint32_t> captures = compileAll(make->captureSources);
            uint32_t dst = allocReg();
            emit({Opcode::MakeClosure, dst,
                  literalIndex(ObjectValue::heap(make->definition)), 0, std::move(captures)});
            return dst;
        }
        case NodeKind::MessageSend:
            return compileSend(static_cast<MessageSendNode*>(node));
        case NodeKind::FunctionApplication:
            return compileApplication(static_cast<FunctionApplicationNode*>(node));
        default:
            throw EvaluationError(std::string("cannot compile node kind ") +
                                  nodeKindName(node->nodeKind));
        }
    }

    uint32_t compileLocalDefinition(LocalDefinitionNode* node) {
        uint32_t value = compile(node->initialValue);
        if (node->isMutableCell) {
            TypeObject* base = node->analyzedType ? node->analyzedType : rt.builtins.dynamic;
            TypeObject* refType = rt.makeReferenceType(base);
            uint32_t cell = allocReg();
            emit({Opcode::AllocCell, cell, literalIndex(ObjectValue::heap(refType))});
            emit({Opcode::CellStore, cell, value});
            emit({Opcode::Move, node->index, cell});
        } else {
            emit({Opcode::Move, node->index, value});
        }
        return value;
    }

    uint32_t compileIf(IfNode* node) {
        uint32_t cond = compile(node->condition);
        uint32_t result = allocReg();
        size_t toElse = emit({Opcode::JumpIfFalse, cond});
        uint32_t thenValue = compile(node->thenExpression);
        emit({Opcode::Move, result, thenValue});
        size_t toEnd = emit({Opcode::Jump});
        patchTarget(toElse, here());
        uint32_t elseValue =
            node->elseExpression ? compile(node->elseExpression) : loadLiteral(rt.nilValue);
        emit({Opcode::Move, result, elseValue});
        patchTarget(toEnd, here());
        return result;
    }

    uint32_t compileWhile(WhileNode* node) {
        uint32_t loop = here();
        uint32_t cond = compile(node->condition);
        size_t exit = emit({Opcode::JumpIfFalse, cond});
        compile(node->body);
        emit({Opcode::Jump, loop});
        patchTarget(exit, here());
        return loadLiteral(rt.voidValue);
    }

    uint32_t compileSend(MessageSendNode* node) {
        auto* selectorLit = dynamic_cast<LiteralNode*>(node->selector);
        SymbolObject* selector = selectorLit ? selectorLit->value.as<SymbolObject>() : nullptr;
        if (!selector)
            throw EvaluationError("cannot compile a send without a literal selector");
        uint32_t receiver = compile(node->receiver);
        std::vector<uint32_t> args = compileAll(node->arguments);
        uint32_t dst = allocReg();
        emit({Opcode::Send, dst, literalIndex(ObjectValue::heap(selector)), receiver,
              std::move(args)});
        return dst;
    }

    uint32_t compileApplication(FunctionApplicationNode* node) {
        if (const IntrinsicFunctionObject* intrinsic = intrinsicOf(node)) {
            const std::string& name = intrinsic->name->text;
            // Mutable locals and field access compile to dedicated
            // cell/slot instructions.
            if (name == "refLoad" && node->arguments.size() == 1) {
                AstNode* object = nullptr;
                uint32_t slotIndex = 0;
                if (matchSlotRef(rt, node->arguments[0], object, slotIndex)) {
                    uint32_t objReg = compile(object);
                    uint32_t dst = allocReg();
                    emit({Opcode::SlotLoad, dst, objReg, slotIndex});
                    return dst;
                }
                uint32_t cell = compile(node->arguments[0]);
                uint32_t dst = allocReg();
                emit({Opcode::CellLoad, dst, cell});
                return dst;
            }
            if (name == "refStore" && node->arguments.size() == 2) {
                AstNode* object = nullptr;
                uint32_t slotIndex = 0;
                if (matchSlotRef(rt, node->arguments[0], object, slotIndex)) {
                    uint32_t objReg = compile(object);
                    uint32_t value = compile(node->arguments[1]);
                    emit({Opcode::SlotStore, objReg, slotIndex, value});
                    return value;
                }
                uint32_t cell = compile(node->arguments[0]);
                uint32_t value = compile(node->arguments[1]);
                emit({Opcode::CellStore, cell, value});
                return value;
            }
            std::vector<uint32_t> args = compileAll(node->arguments);
            uint32_t dst = allocReg();
            auto* fnLit = static_cast<LiteralNode*>(node->functional);
            emit({Opcode::Intrinsic, dst, literalIndex(fnLit->value), 0, std::move(args)});
            return dst;
        }
        uint32_t callee = compile(node->functional);
        std::vector<uint32_t> args = compileAll(node->arguments);
        uint32_t dst = allocReg();
        emit({Opcode::Call, dst, callee, 0, std::move(args)});
        return dst;
    }
};

} // namespace

std::shared_ptr<BytecodeFunction> compileToBytecode(Runtime& rt,
                                                    FunctionDefinitionObject* definition) {
    if (definition->compiledBytecode)
        return definition->compiledBytecode;
    Analyzer analyzer(rt);
    analyzer.ensureAnalyzed(definition);
    auto fn = std::make_shared<BytecodeFunction>();
    BytecodeCompiler compiler(rt, *fn);
    compiler.compileFunction(definition);
    auto violations = verifyBytecode(*fn);
    if (!violations.empty())
        throw EvaluationError("bytecode verification failed: " + violations.front());
    definition->compiledBytecode = fn;
    return fn;
}

std::vector<std::string> verifyBytecode(const BytecodeFunction& fn) {
    std::vector<std::string> violations;
    auto at = [](size_t index) { return "instruction " + std::to_string(index) + ": "; };
    auto checkReg = [&](size_t index, uint32_t reg, const char* what) {
        if (reg >= fn.registerCount)
            violations.push_back(at(index) + std::string(what) + " register out of range");
    };
    auto checkLit = [&](size_t index, uint32_t lit) {
        if (lit >= fn.literals.size())
            violations.push_back(at(index) + "literal index out of range");
    };
    auto checkTarget = [&](size_t index, uint32_t target) {
        if (target > fn.instructions.size() ||
            (target == fn.instructions.size() && !fn.instructions.empty()))
            violations.push_back(at(index) + "jump target out of range");
        if (target >= fn.instructions.size())
            violations.push_back(at(index) + "jump target out of range");
    };

    if (fn.instructions.empty())
        violations.push_back("missing return: empty instruction list");

    for (size_t i = 0; i < fn.instructions.size(); ++i) {
        const BcInstruction& ins = fn.instructions[i];
        for (uint32_t reg : ins.regs)
            checkReg(i, reg, "operand");
        switch (ins.opcode) {
        case Opcode::LoadLiteral:
            checkReg(i, ins.a, "destination");
            checkLit(i, ins.b);
            break;
        case Opcode::Move:
        case Opcode::CellLoad:
            checkReg(i, ins.a, "destination");
            checkReg(i, ins.b, "source");
            break;
        case Opcode::LoadArgument:
            checkReg(i, ins.a, "destination");
            if (ins.b >= fn.argumentCount)
                violations.push_back(at(i) + "argument index out of range");
            break;
        case Opcode::LoadCapture:
            checkReg(i, ins.a, "destination");
            if (ins.b >= fn.captureCount)
                violations.push_back(at(i) + "capture index out of range");
            break;
        case Opcode::MakeClosure:
        case Opcode::Intrinsic:
            checkReg(i, ins.a, "destination");
            checkLit(i, ins.b);
            break;
        case Opcode::Call:
            checkReg(i, ins.a, "destination");
            checkReg(i, ins.b, "callee");
            break;
        case Opcode::Send:
            checkReg(i, ins.a, "destination");
            checkLit(i, ins.b);
            checkReg(i, ins.c, "receiver");
            break;
        case Opcode::AllocCell:
            checkReg(i, ins.a, "destination");
            checkLit(i, ins.b);
            break;
        case Opcode::CellStore:
            checkReg(i, ins.a, "cell");
            checkReg(i, ins.b, "value");
            break;
        case Opcode::SlotLoad:
            checkReg(i, ins.a, "destination");
            checkReg(i, ins.b, "object");
            break;
        case Opcode::SlotStore:
            checkReg(i, ins.a, "object");
            checkReg(i, ins.c, "value");
            break;
        case Opcode::Jump:
            checkTarget(i, ins.a);
            break;
        case Opcode::JumpIfFalse:
        case Opcode::JumpIfTrue:
            checkReg(i, ins.a, "condition");
            checkTarget(i, ins.b);
            break;
        case Opcode::Return:
            checkReg(i, ins.a, "result");
            break;
        }
    }
    if (!violations.empty())
        return violations;

    // Every control path must end in Return: walk reachable
    // instructions and reject any fallthrough past the end.
    std::vector<bool> visited(fn.instructions.size(), false);
    std::vector<size_t> work;
    if (!fn.instructions.empty())
        work.push_back(0);
    while (!work.empty()) {
        size_t index = work.back();
        work.pop_back();
        if (visited[index])
            continue;
        visited[index] = true;
        const BcInstruction& ins = fn.instructions[index];
        std::vector<size_t> successors;
        switch (ins.opcode) {
        case Opcode::Return:
            break;
        case Opcode::Jump:
            successors.push_back(ins.a);
            break;
        case Opcode::JumpIfFalse:
        case Opcode::JumpIfTrue:
            successors.push_back(index + 1);
            successors.push_back(ins.b);
            break;
        default:
            successors.push_back(index + 1);
            break;
        }
        for (size_t next : successors) {
            if (next >= fn.instructions.size()) {
                violations.push_back(at(index) + "control falls off the end without Return");
                continue;
            }
            if (!visited[next])
                work.push_back(next);
        }
    }
    return violations;
}

std::string disassemble(const BytecodeFunction& fn) {
    std::ostringstream out;
    for (size_t i = 0; i < fn.instructions.size(); ++i) {
        const BcInstruction& ins = fn.instructions[i];
        out << i << ": " << opcodeName(ins.opcode);
        auto reg = [&](uint32_t r) { out << " r" << r; };
        auto lit = [&](uint32_t l) { out << " lit" << l; };
        auto target = [&](uint32_t t) { out << " @" << t; };
        auto regList = [&] {
            out << " [";
            for (size_t j = 0; j < ins.regs.size(); ++j)
                out << (j ? " r" : "r") << ins.regs[j] << (j + 1 < ins.regs.size() ? "," : "");
            out << "]";
        };
        switch (ins.opcode) {
        case Opcode::LoadLiteral: reg(ins.a); lit(ins.b); break;
        case Opcode::Move:
        case Opcode::CellLoad: reg(ins.a); reg(ins.b); break;
        case Opcode::LoadArgument: reg(ins.a); out << " arg" << ins.b; break;
        case Opcode::LoadCapture: reg(ins.a); out << " cap" << ins.b; break;
        case Opcode::MakeClosure: reg(ins.a); lit(ins.b); regList(); break;
        case Opcode::Call: reg(ins.a); reg(ins.b); regList(); break;
        case Opcode::Send: reg(ins.a); lit(ins.b); reg(ins.c); regList(); break;
        case Opcode::AllocCell: reg(ins.a); lit(ins.b); break;
        case Opcode::CellStore: reg(ins.a); reg(ins.b); break;
        case Opcode::SlotLoad: reg(ins.a); reg(ins.b); out << " slot" << ins.c; break;
        case Opcode::SlotStore: reg(ins.a); out << " slot" << ins.b; reg(ins.c); break;
        case Opcode::Jump: target(ins.a); break;
        case Opcode::JumpIfFalse:
        case Opcode::JumpIfTrue: reg(ins.a); target(ins.b); break;
        case Opcode::Return: reg(ins.a); break;
        case Opcode::Intrinsic: reg(ins.a); lit(ins.b); regList(); break;
        }
        out << "\n";
    }
    return out.str();
}

ObjectValue executeBytecode(Runtime& rt, const BytecodeFunction& fn, ClosureObject* closure,
                            std::span<const ObjectValue> arguments) {
    ActivationDepthGuard guard(rt);
    std::vector<ObjectValue> regs(fn.registerCount, rt.nilValue);
    std::vector<ObjectValue> argv;

    auto gather = [&](const std::vector<uint32_t>& indices) {
        argv.clear();
        for (uint32_t index : indices)
            argv.push_back(regs[index]);
    };
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

    size_t pc = 0;
    while (pc < fn.instructions.size()) {
        const BcInstruction& ins = fn.instructions[pc];
        switch (ins.opcode) {
        case Opcode::LoadLiteral:
            regs[ins.a] = fn.literals[ins.b];
            break;
        case Opcode::Move:
            regs[ins.a] = regs[ins.b];
            break;
        case Opcode::LoadArgument:
            if (ins.b >= arguments.size())
                throw EvaluationError("argument index out of range");
            regs[ins.a] = arguments[ins.b];
            break;
        case Opcode::LoadCapture:
            if (!closure || ins.b >= closure->captureVector.size())
                throw EvaluationError("capture index out of range");
            regs[ins.a] = closure->captureVector[ins.b];
            break;
        case Opcode::MakeClosure: {
            auto* made = rt.make<ClosureObject>();
            made->type = rt.builtins.closure;
            made->definition = fn.literals[ins.b].as<FunctionDefinitionObject>();
            for (uint32_t index : ins.regs)
                made->captureVector.push_back(regs[index]);
            regs[ins.a] = ObjectValue::heap(made);
            break;
        }
        case Opcode::Call:
            gather(ins.regs);
            regs[ins.a] = rt.call(regs[ins.b], argv);
            break;
        case Opcode::Send:
            gather(ins.regs);
            regs[ins.a] =
                rt.dispatchMessage(regs[ins.c], fn.literals[ins.b].as<SymbolObject>(), argv);
            break;
        case Opcode::AllocCell:
            regs[ins.a] = ObjectValue::heap(
                rt.makeCell(rt.nilValue, fn.literals[ins.b].as<TypeObject>()));
            break;
        case Opcode::CellLoad:
            regs[ins.a] = location(regs[ins.b])->location.load();
            break;
        case Opcode::CellStore:
            location(regs[ins.a])->location.store(regs[ins.b]);
            break;
        case Opcode::SlotLoad:
            regs[ins.a] = slots(regs[ins.b], ins.c);
            break;
        case Opcode::SlotStore:
            slots(regs[ins.a], ins.b) = regs[ins.c];
            break;
        case Opcode::Jump:
            pc = ins.a;
            continue;
        case Opcode::JumpIfFalse:
            if (!rt.booleanValue(regs[ins.a])) {
                pc = ins.b;
                continue;
            }
            break;
        case Opcode::JumpIfTrue:
            if (rt.booleanValue(regs[ins.a])) {
                pc = ins.b;
                continue;
            }
            break;
        case Opcode::Return:
            return regs[ins.a];
        case Opcode::Intrinsic:
            gather(ins.regs);
            regs[ins.a] = rt.call(fn.literals[ins.b], argv);
            break;
        }
        ++pc;
    }
    throw EvaluationError("bytecode control fell off the end");
}

} // namespace sysmel
