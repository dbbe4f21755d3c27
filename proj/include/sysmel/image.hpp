#ifndef SYSMEL_IMAGE_HPP
#define SYSMEL_IMAGE_HPP

#include "sysmel/object.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sysmel {

class Runtime;

/// Deterministic breadth-first closure of the program-entity graph
/// from the given roots, in discovery order (roots first). Builtin
/// objects (types, intrinsics, singletons) terminate the traversal:
/// they are represented by stable names, not traced through.
/// When `stripAst` is set, analyzed AST attached to function
/// definitions is left out of the closure.
std::vector<ObjectValue> traceEntities(Runtime& rt, std::span<const ObjectValue> roots,
                                       bool stripAst = false);

/// Serializes the traced closure of `roots` into a relocatable binary
/// image. Identical input graphs yield identical bytes: little-endian
/// fixed-width fields, records aligned to 4 bytes, every inter-record
/// reference listed in the relocation table.
std::vector<uint8_t> serializeImage(Runtime& rt, std::span<const ObjectValue> roots,
                                    bool stripAst = false);

struct LoadedImage {
    std::vector<ObjectValue> entities; // record order
    std::vector<ObjectValue> roots;
};

/// Reconstructs the entity graph in `rt`. Symbols are re-interned by
/// text; builtin records resolve against the target runtime's
/// registry. Throws ImageError on bad magic, version mismatch,
/// out-of-range relocations, or truncated payloads.
LoadedImage loadImage(Runtime& rt, std::span<const uint8_t> bytes);

} // namespace sysmel

#endif
