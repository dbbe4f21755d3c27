#include "sysmel/mir.hpp"

#include "sysmel/errors.hpp"
#include "sysmel/program_entity.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sysmel {

const char* mirOpMnemonic(MirOp op) {
    switch (op) {
    case MirOp::Add: return "add";
    case MirOp::Sub: return "sub";
    case MirOp::Mul: return "mul";
    case MirOp::Div: return "div";
    case MirOp::Rem: return "rem";
    case MirOp::And: return "and";
    case MirOp::Or: return "or";
    case MirOp::Xor: return "xor";
    case MirOp::Shl: return "shl";
    case MirOp::Shr: return "shr";
    case MirOp::CmpEq: return "cmpeq";
    case MirOp::CmpNe: return "cmpne";
    case MirOp::CmpLt: return "cmplt";
    case MirOp::CmpLe: return "cmple";
    case MirOp::CmpGt: return "cmpgt";
    case MirOp::CmpGe: return "cmpge";
    case MirOp::Mov: return "mov";
    case MirOp::Load: return "load";
    case MirOp::Store: return "store";
    case MirOp::Call: return "call";
    case MirOp::Jump: return "jmp";
    case MirOp::BranchIf: return "bt";
    case MirOp::BranchCmp: return "bcmp";
    case MirOp::Return: return "ret";
    case MirOp::FrameAddr: return "frameaddr";
    }
    return "?";
}

namespace {

const char* fusedMnemonic(MirOp relation) {
    switch (relation) {
    case MirOp::CmpEq: return "beq";
    case MirOp::CmpNe: return "bne";
    case MirOp::CmpLt: return "blt";
    case MirOp::CmpLe: return "ble";
    case MirOp::CmpGt: return "bgt";
    case MirOp::CmpGe: return "bge";
    default: return "bcmp";
    }
}

bool primitiveMirOp(const IntrinsicFunctionObject* intrinsic, size_t arity, MirOp& out) {
    if (arity != 2)
        return false;
    switch (intrinsic->intrinsicKind) {
    case IntrinsicKind::Add: out = MirOp::Add; return true;
    case IntrinsicKind::Sub: out = MirOp::Sub; return true;
    case IntrinsicKind::Mul: out = MirOp::Mul; return true;
    case IntrinsicKind::Div: out = MirOp::Div; return true;
    case IntrinsicKind::FDiv: out = MirOp::Div; return true;
    case IntrinsicKind::Rem: out = MirOp::Rem; return true;
    case IntrinsicKind::BitAnd: out = MirOp::And; return true;
    case IntrinsicKind::BitOr: out = MirOp::Or; return true;
    case IntrinsicKind::BitXor: out = MirOp::Xor; return true;
    case IntrinsicKind::ShiftLeft: out = MirOp::Shl; return true;
    case IntrinsicKind::ShiftRight: out = MirOp::Shr; return true;
    case IntrinsicKind::CmpEq: out = MirOp::CmpEq; return true;
    case IntrinsicKind::CmpNe: out = MirOp::CmpNe; return true;
    case IntrinsicKind::CmpLt: out = MirOp::CmpLt; return true;
    case IntrinsicKind::CmpLe: out = MirOp::CmpLe; return true;
    case IntrinsicKind::CmpGt: out = MirOp::CmpGt; return true;
    case IntrinsicKind::CmpGe: out = MirOp::CmpGe; return true;
    default: return false;
    }
}

IntrinsicFunctionObject* helperIntrinsic(
    Runtime& rt, const std::string& name,
    std::function<ObjectValue(Runtime&, std::span<const ObjectValue>)> handler) {
    if (auto* existing = rt.intrinsicNamed(name))
        return existing;
    auto* fn = rt.make<IntrinsicFunctionObject>();
    fn->type = rt.builtins.intrinsicFunction;
    fn->name = rt.intern(name);
    fn->intrinsicKind = IntrinsicKind::Native;
    fn->pure = false;
    fn->resultType = rt.builtins.dynamic;
    fn->variadic = true;
    fn->handler = std::move(handler);
    rt.registerIntrinsic(fn);
    return fn;
}

IntrinsicFunctionObject* makeClosureHelper(Runtime& rt) {
    return helperIntrinsic(rt, "makeClosure",
                           [](Runtime& rt, std::span<const ObjectValue> args) {
                               auto* definition = args[0].as<FunctionDefinitionObject>();
                               if (!definition)
                                   throw EvaluationError(
                                       "makeClosure needs a function definition");
                               auto* made = rt.make<ClosureObject>();
                               made->type = rt.builtins.closure;
                               made->definition = definition;
                               for (size_t i = 1; i < args.size(); ++i)
                                   made->captureVector.push_back(args[i]);
                               return ObjectValue::heap(made);
                           });
}

// ----------------------------------------------------------- lowering

class MirLowerer {
public:
    MirLowerer(Runtime& runtime, const HirFunction& source) : rt(runtime), hir(source) {}

    MirFunction lower() {
        mir.name = hir.name;
        mir.definition = hir.definition;
        mir.argumentCount = uint32_t(hir.parameters.size());
        mir.captureCount = uint32_t(hir.captures.size());
        mir.entryBlockId = hir.entryBlockId;
        nextBlockId = hir.nextBlockId;

        for (auto& [id, type] : hir.parameters) {
            MirOperand home = MirOperand::vreg(newVreg());
            operandOf[id] = home;
            mir.argumentHomes.push_back(home);
        }
        for (auto& [id, type] : hir.captures) {
            MirOperand home = MirOperand::vreg(newVreg());
            operandOf[id] = home;
            mir.argumentHomes.push_back(home);
        }
        // Phi results need registers before their inputs are lowered.
        for (const HirBlock& block : hir.blocks)
            for (const HirInstruction& ins : block.instructions)
                if (ins.op == HirOp::Phi)
                    operandOf[ins.id] = MirOperand::vreg(newVreg());

        for (const HirBlock& block : hir.blocks)
            lowerBlock(block);
        insertPhiMoves();
        return std::move(mir);
    }

private:
    Runtime& rt;
    const HirFunction& hir;
    MirFunction mir;
    std::unordered_map<uint32_t, MirOperand> operandOf; // HIR value -> operand
    uint32_t nextBlockId = 0;

    uint32_t newVreg() { return mir.virtualRegisterCount++; }

    MirOperand use(uint32_t hirId) {
        auto it = operandOf.find(hirId);
        if (it == operandOf.end())
            throw EvaluationError("lowering uses an unlowered value");
        return it->second;
    }

    MirBlock* mirBlock(uint32_t id) {
        for (MirBlock& block : mir.blocks)
            if (block.id == id)
                return &block;
        return nullptr;
    }

    void lowerBlock(const HirBlock& source) {
        mir.blocks.push_back({source.id, {}});
        MirBlock& block = mir.blocks.back();
        auto emit = [&](MirInstruction ins) { block.instructions.push_back(std::move(ins)); };
        auto defineVreg = [&](uint32_t hirId) {
            MirOperand dst = MirOperand::vreg(newVreg());
            operandOf[hirId] = dst;
            return dst;
        };

        for (const HirInstruction& ins : source.instructions) {
            switch (ins.op) {
            case HirOp::Constant:
                operandOf[ins.id] = MirOperand::imm(ins.constant);
                break;
            case HirOp::Phi:
                break; // becomes edge moves
            case HirOp::Apply: {
                std::vector<MirOperand> operands;
                MirOp primitive;
                auto* intrinsic =
                    ins.knownCallee ? ins.constant.as<IntrinsicFunctionObject>() : nullptr;
                if (intrinsic && primitiveMirOp(intrinsic, ins.operands.size(), primitive)) {
                    for (uint32_t operand : ins.operands)
                        operands.push_back(use(operand));
                    emit({primitive, defineVreg(ins.id), ins.constant, MirOp::CmpEq,
                          std::move(operands)});
                    break;
                }
                MirInstruction call{MirOp::Call, defineVreg(ins.id), {}, MirOp::CmpEq, {}};
                if (ins.knownCallee) {
                    call.callee = ins.constant;
                    call.hasCallee = true;
                } else {
                    call.operands.push_back(use(ins.operands[0]));
                }
                size_t firstArg = ins.knownCallee ? 0 : 1;
                for (size_t i = firstArg; i < ins.operands.size(); ++i)
                    call.operands.push_back(use(ins.operands[i]));
                emit(std::move(call));
                break;
            }
            case HirOp::Send: {
                // Dynamic sends lower to a call of the dispatch helper.
                MirInstruction call{MirOp::Call, defineVreg(ins.id),
                                    ObjectValue::heap(rt.intrinsicNamed("dispatch")),
                                    MirOp::CmpEq, {}};
                call.hasCallee = true;
                call.operands.push_back(use(ins.operands[0]));
                call.operands.push_back(MirOperand::imm(ins.constant));
                for (size_t i = 1; i < ins.operands.size(); ++i)
                    call.operands.push_back(use(ins.operands[i]));
                emit(std::move(call));
                break;
            }
            case HirOp::Alloca: {
                uint32_t slot = uint32_t(mir.frameSlots.size());
                uint32_t size = 8;
                if (auto* refType = ins.constant.as<TypeObject>())
                    if (refType->baseType && refType->baseType->bits)
                        size = std::max(1u, uint32_t(refType->baseType->bits / 8));
                mir.frameSlots.push_back({slot, size, size, 0});
                emit({MirOp::FrameAddr, defineVreg(ins.id), ins.constant, MirOp::CmpEq,
                      {MirOperand::frame(slot)}});
                break;
            }
            case HirOp::Load:
                emit({MirOp::Load, defineVreg(ins.id), {}, MirOp::CmpEq,
                      {use(ins.operands[0])}});
                break;
            case HirOp::Store:
                emit({MirOp::Store, {}, {}, MirOp::CmpEq,
                      {use(ins.operands[0]), use(ins.operands[1])}});
                break;
            case HirOp::SlotGet:
                emit({MirOp::Load, defineVreg(ins.id), {}, MirOp::CmpEq,
                      {use(ins.operands[0]),
                       MirOperand{MirOperand::Kind::Constant, ins.slotIndex, rt.nilValue}}});
                break;
            case HirOp::SlotSet:
                emit({MirOp::Store, {}, {}, MirOp::CmpEq,
                      {use(ins.operands[0]),
                       MirOperand{MirOperand::Kind::Constant, ins.slotIndex, rt.nilValue},
                       use(ins.operands[1])}});
                break;
            case HirOp::MakeClosure: {
                MirInstruction call{MirOp::Call, defineVreg(ins.id),
                                    ObjectValue::heap(makeClosureHelper(rt)), MirOp::CmpEq, {}};
                call.hasCallee = true;
                call.operands.push_back(MirOperand::imm(ins.constant));
                for (uint32_t operand : ins.operands)
                    call.operands.push_back(use(operand));
                emit(std::move(call));
                break;
            }
            case HirOp::Branch:
                emit({MirOp::Jump, {}, {}, MirOp::CmpEq,
                      {MirOperand::label(ins.blockOperands[0])}});
                break;
            case HirOp::CondBranch:
                emit({MirOp::BranchIf, {}, {}, MirOp::CmpEq,
                      {use(ins.operands[0]), MirOperand::label(ins.blockOperands[0])}});
                emit({MirOp::Jump, {}, {}, MirOp::CmpEq,
                      {MirOperand::label(ins.blockOperands[1])}});
                break;
            case HirOp::Return:
                emit({MirOp::Return, {}, {}, MirOp::CmpEq, {use(ins.operands[0])}});
                break;
            }
        }
    }

    /// Phi nodes exit SSA as moves on the incoming edges, with
    /// temporaries against parallel-copy cycles. Critical edges are
    /// split with a fresh block.
    void insertPhiMoves() {
        for (const HirBlock& block : hir.blocks) {
            // Gather (predecessor -> list of (phiOperand, inputOperand)).
            std::unordered_map<uint32_t, std::vector<std::pair<MirOperand, MirOperand>>> moves;
            for (const HirInstruction& ins : block.instructions) {
                if (ins.op != HirOp::Phi)
                    break;
                for (size_t i = 0; i < ins.operands.size(); ++i)
                    moves[ins.blockOperands[i]].emplace_back(operandOf.at(ins.id),
                                                             use(ins.operands[i]));
            }
            for (auto& [predId, copies] : moves) {
                MirBlock* pred = mirBlock(predId);
                if (!pred)
                    continue;
                size_t successorCount = 0;
                for (const MirInstruction& ins : pred->instructions)
                    if (ins.op == MirOp::Jump || ins.op == MirOp::BranchIf ||
                        ins.op == MirOp::BranchCmp)
                        ++successorCount;
                MirBlock* home = pred;
                if (successorCount > 1) {
                    // Split the critical edge.
                    uint32_t edgeId = nextBlockId++;
                    for (MirInstruction& ins : pred->instructions)
                        for (MirOperand& operand : ins.operands)
                            if (operand.kind == MirOperand::Kind::Label &&
                                operand.index == block.id)
                                operand.index = edgeId;
                    mir.blocks.push_back({edgeId, {}});
                    home = &mir.blocks.back();
                    home->instructions.push_back({MirOp::Jump, {}, {}, MirOp::CmpEq,
                                                  {MirOperand::label(block.id)}});
                    pred = nullptr; // vector may have reallocated
                }
                // Insert before the block's terminator sequence.
                size_t insertAt = home->instructions.size();
                while (insertAt > 0) {
                    MirOp op = home->instructions[insertAt - 1].op;
                    if (op == MirOp::Jump || op == MirOp::BranchIf || op == MirOp::BranchCmp ||
                        op == MirOp::Return)
                        --insertAt;
                    else
                        break;
                }
                std::vector<MirInstruction> sequence;
                std::vector<MirOperand> temps;
                for (auto& [dst, src] : copies) {
                    MirOperand temp = MirOperand::vreg(newVreg());
                    temps.push_back(temp);
                    sequence.push_back({MirOp::Mov, temp, {}, MirOp::CmpEq, {src}});
                }
                for (size_t i = 0; i < copies.size(); ++i)
                    sequence.push_back(
                        {MirOp::Mov, copies[i].first, {}, MirOp::CmpEq, {temps[i]}});
                home->instructions.insert(home->instructions.begin() + insertAt,
                                          sequence.begin(), sequence.end());
            }
        }
    }
};

} // namespace

MirFunction lowerToMir(Runtime& rt, const HirFunction& fn) {
    auto violations = verifyHir(fn);
    if (!violations.empty())
        throw EvaluationError("cannot lower invalid IR: " + violations.front());
    MirLowerer lowerer(rt, fn);
    return lowerer.lower();
}

// -------------------------------------------------------------- fusion

size_t fuseCompareBranch(MirFunction& fn) {
    // Register use counts decide the single-use condition.
    std::unordered_map<uint32_t, size_t> uses;
    for (MirBlock& block : fn.blocks)
        for (MirInstruction& ins : block.instructions)
            for (MirOperand& operand : ins.operands)
                if (operand.kind == MirOperand::Kind::VirtualReg)
                    uses[operand.index]++;

    auto isCompare = [](MirOp op) {
        return op == MirOp::CmpEq || op == MirOp::CmpNe || op == MirOp::CmpLt ||
               op == MirOp::CmpLe || op == MirOp::CmpGt || op == MirOp::CmpGe;
    };

    size_t fused = 0;
    for (MirBlock& block : fn.blocks) {
        auto& list = block.instructions;
        for (size_t i = 0; i + 1 < list.size();) {
            MirInstruction& cmp = list[i];
            MirInstruction& branch = list[i + 1];
            bool candidate = isCompare(cmp.op) &&
                             cmp.dst.kind == MirOperand::Kind::VirtualReg &&
                             branch.op == MirOp::BranchIf &&
                             branch.operands[0].kind == MirOperand::Kind::VirtualReg &&
                             branch.operands[0].index == cmp.dst.index &&
                             uses[cmp.dst.index] == 1;
            if (!candidate) {
                ++i;
                continue;
            }
            MirInstruction fusedIns{MirOp::BranchCmp, {}, cmp.callee, cmp.op,
                                    {cmp.operands[0], cmp.operands[1], branch.operands[1]}};
            list[i] = std::move(fusedIns);
            list.erase(list.begin() + i + 1);
            ++fused;
            ++i;
        }
    }
    return fused;
}

// ------------------------------------------------------------ liveness

namespace {

struct Liveness {
    // Linear instruction positions per block, in block storage order.
    std::vector<size_t> blockStart, blockEnd; // [start, end) positions
    std::unordered_map<uint32_t, std::pair<size_t, size_t>> intervals; // vreg -> [lo, hi]
};

void forEachSourceReg(const MirInstruction& ins, const std::function<void(uint32_t)>& f) {
    for (const MirOperand& operand : ins.operands)
        if (operand.kind == MirOperand::Kind::VirtualReg)
            f(operand.index);
}

Liveness computeLiveness(const MirFunction& fn) {
    Liveness live;
    size_t n = fn.blocks.size();
    std::unordered_map<uint32_t, size_t> blockIndex;
    for (size_t i = 0; i < n; ++i)
        blockIndex[fn.blocks[i].id] = i;

    live.blockStart.resize(n);
    live.blockEnd.resize(n);
    size_t position = 0;
    for (size_t i = 0; i < n; ++i) {
        live.blockStart[i] = position;
        position += fn.blocks[i].instructions.size();
        live.blockEnd[i] = position;
    }

    // use/def per block, successor edges.
    std::vector<std::unordered_set<uint32_t>> use(n), def(n), liveIn(n), liveOut(n);
    std::vector<std::vector<size_t>> succs(n);
    for (size_t i = 0; i < n; ++i) {
        for (const MirInstruction& ins : fn.blocks[i].instructions) {
            forEachSourceReg(ins, [&](uint32_t reg) {
                if (!def[i].count(reg))
                    use[i].insert(reg);
            });
            if (ins.dst.kind == MirOperand::Kind::VirtualReg)
                def[i].insert(ins.dst.index);
            for (const MirOperand& operand : ins.operands)
                if (operand.kind == MirOperand::Kind::Label) {
                    auto it = blockIndex.find(operand.index);
                    if (it != blockIndex.end())
                        succs[i].push_back(it->second);
                }
        }
    }
    // Argument homes are defined at entry.
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = n; i-- > 0;) {
            std::unordered_set<uint32_t> out;
            for (size_t succ : succs[i])
                out.insert(liveIn[succ].begin(), liveIn[succ].end());
            std::unordered_set<uint32_t> in = use[i];
            for (uint32_t reg : out)
                if (!def[i].count(reg))
                    in.insert(reg);
            if (out != liveOut[i] || in != liveIn[i]) {
                liveOut[i] = std::move(out);
                liveIn[i] = std::move(in);
                changed = true;
            }
        }
    }

    auto extend = [&](uint32_t reg, size_t lo, size_t hi) {
        auto it = live.intervals.find(reg);
        if (it == live.intervals.end())
            live.intervals[reg] = {lo, hi};
        else {
            it->second.first = std::min(it->second.first, lo);
            it->second.second = std::max(it->second.second, hi);
        }
    };
    for (const MirOperand& home : fn.argumentHomes)
        if (home.kind == MirOperand::Kind::VirtualReg)
            extend(home.index, 0, 0);
    for (size_t i = 0; i < n; ++i) {
        size_t pos = live.blockStart[i];
        for (const MirInstruction& ins : fn.blocks[i].instructions) {
            forEachSourceReg(ins, [&](uint32_t reg) { extend(reg, pos, pos); });
            if (ins.dst.kind == MirOperand::Kind::VirtualReg)
                extend(ins.dst.index, pos, pos);
            ++pos;
        }
        // Values live across the block edge span the whole block.
        for (uint32_t reg : liveIn[i])
            extend(reg, live.blockStart[i], live.blockStart[i]);
        for (uint32_t reg : liveOut[i])
            extend(reg, live.blockStart[i], live.blockEnd[i]);
    }
    return live;
}

} // namespace

// ----------------------------------------------------- register alloc

MirFunction allocateRegisters(const MirFunction& fn) {
    Liveness live = computeLiveness(fn);

    // Linear scan over intervals sorted by start, spilling the interval
    // that ends furthest away when the file is exhausted.
    struct Interval {
        uint32_t reg;
        size_t lo, hi;
    };
    std::vector<Interval> intervals;
    for (auto& [reg, range] : live.intervals)
        intervals.push_back({reg, range.first, range.second});
    std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.reg < b.reg;
    });

    MirFunction out = fn;
    std::unordered_map<uint32_t, MirOperand> home;
    std::vector<Interval> active; // sorted by hi ascending
    std::vector<uint32_t> freeRegs;
    for (uint32_t r = mirAllocatableRegisterCount; r-- > 0;)
        freeRegs.push_back(r); // pop -> r0 first
    std::unordered_map<uint32_t, uint32_t> regOf;

    auto newSpillSlot = [&] {
        uint32_t slot = uint32_t(out.frameSlots.size());
        out.frameSlots.push_back({slot, 8, 8, 0});
        return MirOperand::frame(slot);
    };

    for (const Interval& interval : intervals) {
        // Expire finished intervals.
        for (size_t i = 0; i < active.size();) {
            if (active[i].hi < interval.lo) {
                freeRegs.push_back(regOf[active[i].reg]);
                active.erase(active.begin() + i);
            } else {
                ++i;
            }
        }
        if (!freeRegs.empty()) {
            uint32_t reg = freeRegs.back();
            freeRegs.pop_back();
            regOf[interval.reg] = reg;
            home[interval.reg] = MirOperand::preg(reg);
            active.push_back(interval);
            std::sort(active.begin(), active.end(),
                      [](const Interval& a, const Interval& b) { return a.hi < b.hi; });
        } else {
            Interval& furthest = active.back();
            if (furthest.hi > interval.hi) {
                // Steal the register; the furthest interval spills.
                uint32_t reg = regOf[furthest.reg];
                home[furthest.reg] = newSpillSlot();
                regOf.erase(furthest.reg);
                regOf[interval.reg] = reg;
                home[interval.reg] = MirOperand::preg(reg);
                active.back() = interval;
                std::sort(active.begin(), active.end(),
                          [](const Interval& a, const Interval& b) { return a.hi < b.hi; });
            } else {
                home[interval.reg] = newSpillSlot();
            }
        }
    }

    for (auto& [reg, operand] : home)
        out.allocation.emplace_back(reg, operand);
    std::sort(out.allocation.begin(), out.allocation.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Rewrite code: physical homes substitute directly; frame homes get
    // reload/spill moves through the scratch registers r10/r11.
    auto homeOf = [&](uint32_t reg) { return home.at(reg); };
    for (MirBlock& block : out.blocks) {
        std::vector<MirInstruction> rewritten;
        for (MirInstruction& ins : block.instructions) {
            uint32_t scratch = mirAllocatableRegisterCount; // r10
            bool callLike = ins.op == MirOp::Call;
            for (MirOperand& operand : ins.operands) {
                if (operand.kind != MirOperand::Kind::VirtualReg)
                    continue;
                MirOperand mapped = homeOf(operand.index);
                if (mapped.kind == MirOperand::Kind::FrameSlot && !callLike) {
                    MirOperand temp = MirOperand::preg(scratch++);
                    rewritten.push_back({MirOp::Mov, temp, {}, MirOp::CmpEq, {mapped}});
                    operand = temp;
                } else {
                    operand = mapped;
                }
            }
            if (ins.dst.kind == MirOperand::Kind::VirtualReg) {
                MirOperand mapped = homeOf(ins.dst.index);
                if (mapped.kind == MirOperand::Kind::FrameSlot) {
                    MirOperand temp = MirOperand::preg(mirPhysicalRegisterCount - 1); // r11
                    ins.dst = temp;
                    rewritten.push_back(std::move(ins));
                    rewritten.push_back({MirOp::Mov, mapped, {}, MirOp::CmpEq, {temp}});
                    continue;
                }
                ins.dst = mapped;
            }
            rewritten.push_back(std::move(ins));
        }
        block.instructions = std::move(rewritten);
    }
    for (MirOperand& homeOperand : out.argumentHomes)
        if (homeOperand.kind == MirOperand::Kind::VirtualReg)
            homeOperand = home.at(homeOperand.index);
    out.allocated = true;
    return out;
}

// -------------------------------------------------------- frame layout

void computeFrameLayout(MirFunction& fn) {
    uint32_t offset = 0;
    for (MirFrameSlot& slot : fn.frameSlots) {
        uint32_t alignment = std::max(1u, slot.alignment);
        offset = (offset + alignment - 1) / alignment * alignment;
        slot.offset = offset;
        offset += slot.size;
    }
    fn.frame = MirFrameLayout{(offset + 15) / 16 * 16};
}

// ----------------------------------------------------------- checker

std::vector<std::string> checkAllocation(const MirFunction& preAlloc,
                                         const MirFunction& allocated) {
    std::vector<std::string> violations;
    std::unordered_map<uint32_t, MirOperand> home;
    for (auto& [reg, operand] : allocated.allocation)
        home[reg] = operand;

    for (uint32_t reg = 0; reg < preAlloc.virtualRegisterCount; ++reg)
        if (!home.count(reg)) {
            // Registers that never appear need no home.
            bool appears = false;
            for (const MirBlock& block : preAlloc.blocks)
                for (const MirInstruction& ins : block.instructions) {
                    if (ins.dst.kind == MirOperand::Kind::VirtualReg &&
                        ins.dst.index == reg)
                        appears = true;
                    for (const MirOperand& operand : ins.operands)
                        if (operand.kind == MirOperand::Kind::VirtualReg &&
                            operand.index == reg)
                            appears = true;
                }
            if (appears)
                violations.push_back("v" + std::to_string(reg) + " has no assigned home");
        }

    // Independent interference test: recompute live intervals and flag
    // any overlapping pair that shares a physical register or slot.
    Liveness live = computeLiveness(preAlloc);
    std::vector<std::pair<uint32_t, std::pair<size_t, size_t>>> intervals(
        live.intervals.begin(), live.intervals.end());
    for (size_t i = 0; i < intervals.size(); ++i) {
        for (size_t j = i + 1; j < intervals.size(); ++j) {
            auto& [regA, rangeA] = intervals[i];
            auto& [regB, rangeB] = intervals[j];
            bool overlap = rangeA.first <= rangeB.second && rangeB.first <= rangeA.second;
            if (!overlap || !home.count(regA) || !home.count(regB))
                continue;
            const MirOperand& homeA = home[regA];
            const MirOperand& homeB = home[regB];
            if (homeA.kind == homeB.kind && homeA.index == homeB.index)
                violations.push_back("v" + std::to_string(regA) + " and v" +
                                     std::to_string(regB) +
                                     " overlap but share a location");
        }
    }

    // The allocated body must not mention virtual registers.
    for (const MirBlock& block : allocated.blocks)
        for (const MirInstruction& ins : block.instructions) {
            if (ins.dst.kind == MirOperand::Kind::VirtualReg)
                violations.push_back("virtual register survives allocation");
            for (const MirOperand& operand : ins.operands)
                if (operand.kind == MirOperand::Kind::VirtualReg)
                    violations.push_back("virtual register survives allocation");
        }
    return violations;
}

// ------------------------------------------------------------- listing

namespace {

void printOperand(std::ostringstream& out, Runtime& rt, const MirFunction& fn,
                  const MirOperand& operand) {
    switch (operand.kind) {
    case MirOperand::Kind::None:
        out << "_";
        break;
    case MirOperand::Kind::VirtualReg:
        out << "v" << operand.index;
        break;
    case MirOperand::Kind::PhysicalReg:
        out << "r" << operand.index;
        break;
    case MirOperand::Kind::FrameSlot:
        if (fn.frame) {
            uint32_t offset = 0;
            for (const MirFrameSlot& slot : fn.frameSlots)
                if (slot.id == operand.index)
                    offset = slot.offset;
            out << "[fp+" << offset << "]";
        } else {
            out << "fs" << operand.index;
        }
        break;
    case MirOperand::Kind::Constant:
        if (operand.constant == rt.nilValue && operand.index != 0)
            out << "#" << operand.index; // slot index shorthand
        else
            out << rt.printString(operand.constant);
        break;
    case MirOperand::Kind::Label:
        out << "L" << operand.index;
        break;
    }
}

} // namespace

std::string emitListing(Runtime& rt, const MirFunction& fn) {
    std::ostringstream out;
    out << (fn.name ? fn.name->text : std::string("<lambda>")) << ":";
    if (fn.frame)
        out << "    ; frame " << fn.frame->totalSize << " bytes";
    out << "\n";
    for (const MirBlock& block : fn.blocks) {
        out << "L" << block.id << ":\n";
        for (const MirInstruction& ins : block.instructions) {
            out << "    ";
            if (ins.op == MirOp::BranchCmp)
                out << fusedMnemonic(ins.cmpOp);
            else
                out << mirOpMnemonic(ins.op);
            bool first = true;
            auto emitOperand = [&](const MirOperand& operand) {
                out << (first ? " " : ", ");
                first = false;
                printOperand(out, rt, fn, operand);
            };
            if (ins.dst.kind != MirOperand::Kind::None)
                emitOperand(ins.dst);
            if (ins.op == MirOp::Call) {
                out << (first ? " " : ", ");
                first = false;
                if (auto* intrinsic = ins.callee.as<IntrinsicFunctionObject>())
                    out << intrinsic->name->text;
                else if (auto* entity = ins.callee.as<FunctionEntityObject>())
                    out << entity->name->text;
                else
                    out << "<indirect>";
            }
            for (const MirOperand& operand : ins.operands)
                emitOperand(operand);
            out << "\n";
        }
    }
    return out.str();
}

// ------------------------------------------------------------ emulator

ObjectValue emulateMir(Runtime& rt, const MirFunction& fn, ClosureObject* closure,
                       std::span<const ObjectValue> arguments, size_t* executedTuples) {
    ActivationDepthGuard guard(rt);
    std::vector<ObjectValue> vregs(fn.virtualRegisterCount, rt.nilValue);
    std::vector<ObjectValue> pregs(mirPhysicalRegisterCount, rt.nilValue);

    // The frame is modeled as one boxed slot per frame slot.
    auto* frameTuple = rt.make<SlotTupleObject>();
    frameTuple->type = rt.builtins.object;
    frameTuple->slots.assign(fn.frameSlots.size(), rt.nilValue);

    auto slotIndexOf = [&](uint32_t slotId) -> uint32_t {
        for (size_t i = 0; i < fn.frameSlots.size(); ++i)
            if (fn.frameSlots[i].id == slotId)
                return uint32_t(i);
        throw EvaluationError("unknown frame slot");
    };
    auto read = [&](const MirOperand& operand) -> ObjectValue {
        switch (operand.kind) {
        case MirOperand::Kind::VirtualReg: return vregs[operand.index];
        case MirOperand::Kind::PhysicalReg: return pregs[operand.index];
        case MirOperand::Kind::FrameSlot: return frameTuple->slots[slotIndexOf(operand.index)];
        case MirOperand::Kind::Constant: return operand.constant;
        default: throw EvaluationError("operand is not readable");
        }
    };
    auto write = [&](const MirOperand& operand, const ObjectValue& value) {
        switch (operand.kind) {
        case MirOperand::Kind::VirtualReg: vregs[operand.index] = value; break;
        case MirOperand::Kind::PhysicalReg: pregs[operand.index] = value; break;
        case MirOperand::Kind::FrameSlot:
            frameTuple->slots[slotIndexOf(operand.index)] = value;
            break;
        default: throw EvaluationError("operand is not writable");
        }
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

    for (size_t i = 0; i < fn.argumentCount && i < arguments.size(); ++i)
        write(fn.argumentHomes[i], arguments[i]);
    for (size_t i = 0; i < fn.captureCount; ++i)
        write(fn.argumentHomes[fn.argumentCount + i],
              closure && i < closure->captureVector.size() ? closure->captureVector[i]
                                                           : rt.nilValue);

    std::unordered_map<uint32_t, const MirBlock*> blockById;
    for (const MirBlock& block : fn.blocks)
        blockById[block.id] = &block;

    size_t executed = 0;
    std::vector<ObjectValue> callArgs;
    const MirBlock* block = blockById.at(fn.entryBlockId);
    size_t pc = 0;
    while (true) {
        if (pc >= block->instructions.size())
            throw EvaluationError("control fell off the end of a block");
        const MirInstruction& ins = block->instructions[pc];
        ++executed;
        switch (ins.op) {
        case MirOp::Add: case MirOp::Sub: case MirOp::Mul: case MirOp::Div:
        case MirOp::Rem: case MirOp::And: case MirOp::Or: case MirOp::Xor:
        case MirOp::Shl: case MirOp::Shr:
        case MirOp::CmpEq: case MirOp::CmpNe: case MirOp::CmpLt:
        case MirOp::CmpLe: case MirOp::CmpGt: case MirOp::CmpGe: {
            callArgs = {read(ins.operands[0]), read(ins.operands[1])};
            write(ins.dst, rt.call(ins.callee, callArgs));
            break;
        }
        case MirOp::Mov:
            write(ins.dst, read(ins.operands[0]));
            break;
        case MirOp::Load:
            if (ins.operands.size() == 2)
                write(ins.dst, slots(read(ins.operands[0]), ins.operands[1].index));
            else
                write(ins.dst, location(read(ins.operands[0]))->location.load());
            break;
        case MirOp::Store:
            if (ins.operands.size() == 3)
                slots(read(ins.operands[0]), ins.operands[1].index) = read(ins.operands[2]);
            else
                location(read(ins.operands[0]))->location.store(read(ins.operands[1]));
            break;
        case MirOp::Call: {
            callArgs.clear();
            ObjectValue callee = ins.callee;
            size_t firstArg = 0;
            if (!ins.hasCallee) {
                callee = read(ins.operands[0]);
                firstArg = 1;
            }
            for (size_t i = firstArg; i < ins.operands.size(); ++i)
                callArgs.push_back(read(ins.operands[i]));
            write(ins.dst, rt.call(callee, callArgs));
            break;
        }
        case MirOp::Jump:
            block = blockById.at(ins.operands[0].index);
            pc = 0;
            continue;
        case MirOp::BranchIf:
            if (rt.booleanValue(read(ins.operands[0]))) {
                block = blockById.at(ins.operands[1].index);
                pc = 0;
                continue;
            }
            break;
        case MirOp::BranchCmp: {
            callArgs = {read(ins.operands[0]), read(ins.operands[1])};
            if (rt.booleanValue(rt.call(ins.callee, callArgs))) {
                block = blockById.at(ins.operands[2].index);
                pc = 0;
                continue;
            }
            break;
        }
        case MirOp::Return:
            if (executedTuples)
                *executedTuples = executed;
            return read(ins.operands[0]);
        case MirOp::FrameAddr: {
            auto* loc = rt.make<LocationObject>();
            loc->type = ins.callee.as<TypeObject>();
            loc->location = {frameTuple, slotIndexOf(ins.operands[0].index)};
            write(ins.dst, ObjectValue::heap(loc));
            break;
        }
        }
        ++pc;
    }
}

} // namespace sysmel
