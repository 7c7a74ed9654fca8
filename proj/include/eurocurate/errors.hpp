#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eurocurate {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define EUROCURATE_ERROR(Name)            \
    class Name : public Error {           \
    public:                               \
        using Error::Error;               \
    }

EUROCURATE_ERROR(MergeError);
EUROCURATE_ERROR(ProfileError);
EUROCURATE_ERROR(ClassifyError);
EUROCURATE_ERROR(PplError);
EUROCURATE_ERROR(DedupError);
EUROCURATE_ERROR(SignatureError);
EUROCURATE_ERROR(ScorerUnavailable);
EUROCURATE_ERROR(ScorerProtocolError);
EUROCURATE_ERROR(RangeError);
EUROCURATE_ERROR(GateError);
EUROCURATE_ERROR(ArchError);
EUROCURATE_ERROR(FormatError);
EUROCURATE_ERROR(ReportError);
EUROCURATE_ERROR(TemplateError);
EUROCURATE_ERROR(VerdictError);
EUROCURATE_ERROR(AggregateError);
EUROCURATE_ERROR(CorrelationError);
EUROCURATE_ERROR(JudgeUnavailable);
EUROCURATE_ERROR(JudgeProtocolError);
EUROCURATE_ERROR(ConfigError);

#undef EUROCURATE_ERROR

/// Malformed record syntax; `offset` is the byte position in the line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A record violates its schema; `field` names the offending key.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ArpaError : public Error {
public:
    /// Count mismatch between the \data\ header and a section body.
    ArpaError(int order, std::size_t expected, std::size_t found)
        : Error("ARPA " + std::to_string(order) + "-gram count mismatch: header declares " +
                std::to_string(expected) + ", body has " + std::to_string(found)),
          order_(order), expected_(expected), found_(found) {}
    /// Malformed line.
    ArpaError(std::size_t line, const std::string& what)
        : Error("ARPA line " + std::to_string(line) + ": " + what), line_(line) {}

    int order() const noexcept { return order_; }
    std::size_t expected() const noexcept { return expected_; }
    std::size_t found() const noexcept { return found_; }
    std::size_t line() const noexcept { return line_; }

private:
    int order_ = 0;
    std::size_t expected_ = 0;
    std::size_t found_ = 0;
    std::size_t line_ = 0;
};

class BudgetShortfall : public Error {
public:
    explicit BudgetShortfall(std::int64_t emitted)
        : Error("all sources exhausted after " + std::to_string(emitted) + " tokens"),
          emitted_(emitted) {}
    std::int64_t tokens_emitted() const noexcept { return emitted_; }

private:
    std::int64_t emitted_;
};

class PackError : public Error {
public:
    explicit PackError(std::string doc_id)
        : Error("document has no tokens: " + doc_id), doc_id_(std::move(doc_id)) {}
    const std::string& doc_id() const noexcept { return doc_id_; }

private:
    std::string doc_id_;
};

class StripError : public Error {
public:
    explicit StripError(std::size_t position)
        : Error("unmatched trace delimiter at byte " + std::to_string(position)),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace eurocurate
