#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gensco {

enum class ErrorCode {
    // instance validation
    EmptyPassageSet,
    DanglingSupportIndex,
    BlankQuestion,
    BlankAnswer,
    BlankPassage,
    DuplicatePassageIndex,
    // llm gateway
    BackendUnavailable,
    ContextOverflow,
    LogprobsUnsupported,
    ScriptMiss,
    ScriptConflict,
    // prompts
    TemplateError,
    AlignmentError,
    // data
    ParseError,
    SchemaError,
    SizeTooLarge,
    // evaluation
    MissingSupports,
    DegenerateVariance,
    // runs
    ConfigError,
    CorruptTrace,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the batch runner in particular) can decide what is recoverable.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by backends for connection-level failures. The gateway retries these
/// and converts them to BackendUnavailable once attempts run out.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gensco
