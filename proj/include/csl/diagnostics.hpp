#pragma once

#include <string>
#include <vector>

namespace csl {

/// Half-open is never used here: spans are inclusive, 1-based, and always
/// ordered (start <= end).
struct SourceSpan {
    std::string file;
    int start_line = 1;
    int start_col = 1;
    int end_line = 1;
    int end_col = 1;

    static SourceSpan join(const SourceSpan& a, const SourceSpan& b);
    std::string to_string() const;
};

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    SourceSpan span;

    std::string to_string() const;
};

using Diagnostics = std::vector<Diagnostic>;

inline bool has_errors(const Diagnostics& ds) {
    for (const auto& d : ds)
        if (d.severity == Severity::Error) return true;
    return false;
}

} // namespace csl
