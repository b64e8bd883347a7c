#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqwm {

// Contract violations on operation inputs (bad sizes, ranges, unknown actions).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Trajectory/key file problems. `kind` distinguishes the failure classes so
// callers and tests do not have to parse messages; `line` is 1-based and 0
// when the error is not tied to a specific line.
class ParseError : public std::runtime_error {
public:
    enum class Kind {
        Io,
        VersionMismatch,
        MalformedRecord,
        NonMonotoneStep,
        ActionNotInCandidates,
        MissingCandidates,
        KeyFormat,
    };

    ParseError(Kind kind, std::size_t line, const std::string& what_arg)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what_arg
                                      : what_arg),
          kind_(kind), line_(line) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

}  // namespace seqwm
