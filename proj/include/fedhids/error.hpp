#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedhids {

// Error categories map onto CLI exit codes: usage = 1, data = 2, internal = 3.
enum class ErrorKind { Usage, Data, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(std::string msg) : Error(ErrorKind::Usage, std::move(msg)) {}
};

struct InvalidConfig : Error {
    explicit InvalidConfig(std::string msg) : Error(ErrorKind::Usage, std::move(msg)) {}
};

struct IoError : Error {
    explicit IoError(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct ParseError : Error {
    ParseError(std::string tok, std::size_t index, const std::string& context)
        : Error(ErrorKind::Data,
                "non-integer token \"" + tok + "\" at token index " + std::to_string(index) +
                    (context.empty() ? "" : " in " + context)),
          token(std::move(tok)), token_index(index) {}
    std::string token;
    std::size_t token_index;
};

struct EmptyTrace : Error {
    explicit EmptyTrace(const std::string& context)
        : Error(ErrorKind::Data, "trace has no tokens" + (context.empty() ? "" : ": " + context)) {}
};

struct MissingDirectory : Error {
    explicit MissingDirectory(std::string dir)
        : Error(ErrorKind::Data, "missing dataset directory: " + dir), directory(std::move(dir)) {}
    std::string directory;
};

struct TooFewSamples : Error {
    explicit TooFewSamples(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct EmptyInput : Error {
    explicit EmptyInput(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct EmptyShard : Error {
    explicit EmptyShard(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct NoWindows : Error {
    explicit NoWindows(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(std::string msg) : Error(ErrorKind::Internal, std::move(msg)) {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(std::string msg) : Error(ErrorKind::Internal, std::move(msg)) {}
};

struct LengthMismatch : Error {
    explicit LengthMismatch(std::string msg) : Error(ErrorKind::Internal, std::move(msg)) {}
};

struct DegenerateInput : Error {
    explicit DegenerateInput(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct UnsupportedSchema : Error {
    explicit UnsupportedSchema(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

struct CorruptBundle : Error {
    explicit CorruptBundle(std::string msg) : Error(ErrorKind::Data, std::move(msg)) {}
};

inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 1;
        case ErrorKind::Data: return 2;
        case ErrorKind::Internal: return 3;
    }
    return 3;
}

} // namespace fedhids
