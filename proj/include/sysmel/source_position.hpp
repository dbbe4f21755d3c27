#ifndef SYSMEL_SOURCE_POSITION_HPP
#define SYSMEL_SOURCE_POSITION_HPP

#include <cstddef>
#include <string>

namespace sysmel {

/// Byte range plus 1-based line/column of a syntactic element.
struct SourcePosition {
    std::string fileName;
    size_t startOffset = 0;
    size_t endOffset = 0;
    int line = 1;
    int column = 1;

    std::string describe() const {
        return fileName + ":" + std::to_string(line) + ":" + std::to_string(column);
    }
};

} // namespace sysmel

#endif
