#ifndef SYSMEL_BYTECODE_HPP
#define SYSMEL_BYTECODE_HPP

#include "sysmel/runtime.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sysmel {

enum class Opcode : uint8_t {
    LoadLiteral, // a = dst, b = literal index
    Move,        // a = dst, b = src
    LoadArgument, // a = dst, b = argument index
    LoadCapture, // a = dst, b = capture index
    MakeClosure, // a = dst, b = literal index (definition), regs = capture values
    Call,        // a = dst, b = callee register, regs = arguments
    Send,        // a = dst, b = selector literal index, c = receiver register, regs = arguments
    AllocCell,   // a = dst, b = literal index (reference type)
    CellLoad,    // a = dst, b = cell register
    CellStore,   // a = cell register, b = value register
    SlotLoad,    // a = dst, b = object register, c = slot index
    SlotStore,   // a = object register, b = slot index, c = value register
    Jump,        // a = target instruction index
    JumpIfFalse, // a = condition register, b = target
    JumpIfTrue,  // a = condition register, b = target
    Return,      // a = result register
    Intrinsic,   // a = dst, b = literal index (intrinsic function), regs = arguments
};

const char* opcodeName(Opcode opcode);

struct BcInstruction {
    BcInstruction(Opcode opcode, uint32_t a = 0, uint32_t b = 0, uint32_t c = 0,
                  std::vector<uint32_t> regs = {})
        : opcode(opcode), a(a), b(b), c(c), regs(std::move(regs)) {}

    Opcode opcode;
    uint32_t a = 0;
    uint32_t b = 0;
    uint32_t c = 0;
    std::vector<uint32_t> regs;
};

/// One compiled function body; immutable after compilation and shared
/// by every closure over the same definition.
struct BytecodeFunction {
    uint32_t registerCount = 0;
    uint32_t argumentCount = 0;
    uint32_t captureCount = 0;
    std::vector<ObjectValue> literals;
    std::vector<BcInstruction> instructions;
    FunctionDefinitionObject* definition = nullptr;
};

/// Compiles an analyzed definition (analyzes it first if needed) and
/// caches the result on the definition.
std::shared_ptr<BytecodeFunction> compileToBytecode(Runtime& rt,
                                                    FunctionDefinitionObject* definition);

/// Static checks: register/literal/jump/argument/capture bounds and
/// return-on-all-paths. Returns human-readable violations, empty = ok.
std::vector<std::string> verifyBytecode(const BytecodeFunction& fn);

/// One instruction per line: `idx: OPCODE operands`.
std::string disassemble(const BytecodeFunction& fn);

ObjectValue executeBytecode(Runtime& rt, const BytecodeFunction& fn, ClosureObject* closure,
                            std::span<const ObjectValue> arguments);

} // namespace sysmel

#endif
