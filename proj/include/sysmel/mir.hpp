#ifndef SYSMEL_MIR_HPP
#define SYSMEL_MIR_HPP

#include "sysmel/hir.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sysmel {

/// Abstract machine: 12 general registers; r10 and r11 double as
/// spill-reload scratch.
inline constexpr uint32_t mirPhysicalRegisterCount = 12;
inline constexpr uint32_t mirAllocatableRegisterCount = 10;

enum class MirOp : uint8_t {
    Add, Sub, Mul, Div, Rem,
    And, Or, Xor, Shl, Shr,
    CmpEq, CmpNe, CmpLt, CmpLe, CmpGt, CmpGe,
    Mov,
    Load,      // operands [address] or [object, slot-constant]
    Store,     // operands [address, value] or [object, slot-constant, value]
    Call,      // callee in `callee` payload, or operands[0] when unknown
    Jump,      // operands [label]
    BranchIf,  // operands [condition, label]; falls through when false
    BranchCmp, // fused compare+branch: operands [a, b, label], cmpOp set
    Return,    // operands [value]
    FrameAddr, // operands [slot-id constant]; yields the slot's address
};

const char* mirOpMnemonic(MirOp op);

struct MirOperand {
    enum class Kind : uint8_t { None, VirtualReg, PhysicalReg, FrameSlot, Constant, Label };
    Kind kind = Kind::None;
    uint32_t index = 0;
    ObjectValue constant;

    static MirOperand vreg(uint32_t i) { return {Kind::VirtualReg, i, {}}; }
    static MirOperand preg(uint32_t i) { return {Kind::PhysicalReg, i, {}}; }
    static MirOperand frame(uint32_t i) { return {Kind::FrameSlot, i, {}}; }
    static MirOperand imm(ObjectValue v) { return {Kind::Constant, 0, std::move(v)}; }
    static MirOperand label(uint32_t i) { return {Kind::Label, i, {}}; }
    bool isReg() const { return kind == Kind::VirtualReg || kind == Kind::PhysicalReg; }
};

struct MirInstruction {
    MirOp op;
    MirOperand dst;     // None for stores/branches/returns
    ObjectValue callee; // primitive intrinsic or call target, when known
    MirOp cmpOp = MirOp::CmpEq; // relation of a fused BranchCmp
    std::vector<MirOperand> operands;
    /// Calls with a known target keep it in `callee`; otherwise the
    /// target is operands[0].
    bool hasCallee = false;
};

struct MirBlock {
    uint32_t id = 0;
    std::vector<MirInstruction> instructions;
};

struct MirFrameSlot {
    uint32_t id = 0;
    uint32_t size = 8;
    uint32_t alignment = 8;
    uint32_t offset = 0; // set by frame layout
};

struct MirFrameLayout {
    uint32_t totalSize = 0; // rounded up to 16
};

struct MirFunction {
    SymbolObject* name = nullptr;
    uint32_t argumentCount = 0;
    uint32_t captureCount = 0;
    uint32_t virtualRegisterCount = 0;
    std::vector<MirBlock> blocks;
    uint32_t entryBlockId = 0;
    /// Where the emulator deposits arguments, then captures.
    std::vector<MirOperand> argumentHomes;
    std::vector<MirFrameSlot> frameSlots;
    std::optional<MirFrameLayout> frame;
    bool allocated = false;
    /// Virtual register -> final home, populated by allocation.
    std::vector<std::pair<uint32_t, MirOperand>> allocation;
    FunctionDefinitionObject* definition = nullptr;
};

/// Exits SSA: Phis become edge moves (critical edges are split).
MirFunction lowerToMir(Runtime& rt, const HirFunction& fn);

/// Fuses a compare whose single use is the immediately following
/// branch-if into one branch-cmp tuple. Returns the fusion count.
size_t fuseCompareBranch(MirFunction& fn);

/// Linear-scan allocation onto the physical file; spilled values get
/// frame slots with reload/spill tuples around their uses.
MirFunction allocateRegisters(const MirFunction& fn);

/// Assigns non-overlapping aligned offsets; total rounded up to 16.
void computeFrameLayout(MirFunction& fn);

/// Independent validity check: recomputes liveness of the pre-alloc
/// function and reports any two overlapping intervals sharing a
/// register or frame slot.
std::vector<std::string> checkAllocation(const MirFunction& preAlloc,
                                         const MirFunction& allocated);

/// Deterministic assembly-style text listing.
std::string emitListing(Runtime& rt, const MirFunction& fn);

ObjectValue emulateMir(Runtime& rt, const MirFunction& fn, ClosureObject* closure,
                       std::span<const ObjectValue> arguments,
                       size_t* executedTuples = nullptr);

} // namespace sysmel

#endif
