#pragma once

#include <stdexcept>
#include <string>

namespace agentaudit {

class AuditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Importer errors
class UnknownFormatError : public AuditError {
public:
    using AuditError::AuditError;
};
class MalformedTraceError : public AuditError {
public:
    using AuditError::AuditError;
};

// Template / client errors
class UnknownTemplateError : public AuditError {
public:
    using AuditError::AuditError;
};
class MissingVariableError : public AuditError {
public:
    explicit MissingVariableError(const std::string& placeholder)
        : AuditError("unbound placeholder {" + placeholder + "}"), placeholder_(placeholder) {}
    const std::string& placeholder() const { return placeholder_; }

private:
    std::string placeholder_;
};
class TransientBackendError : public AuditError {
public:
    using AuditError::AuditError;
};
class BackendUnavailableError : public AuditError {
public:
    using AuditError::AuditError;
};
class FixtureMissError : public AuditError {
public:
    using AuditError::AuditError;
};

// Extraction errors
class ShapeMismatchError : public AuditError {
public:
    using AuditError::AuditError;
};
class ExtractionParseFailure : public AuditError {
public:
    using AuditError::AuditError;
};
class MissingTaskDescriptionError : public AuditError {
public:
    using AuditError::AuditError;
};
class MissingInitStateError : public AuditError {
public:
    using AuditError::AuditError;
};

// Evaluation errors
class JudgeParseFailure : public AuditError {
public:
    using AuditError::AuditError;
};
class DependencyMissingError : public AuditError {
public:
    using AuditError::AuditError;
};

// Aggregation / reporting errors
class NoIncludedEvaluatorsError : public AuditError {
public:
    using AuditError::AuditError;
};
class EmptyInputError : public AuditError {
public:
    using AuditError::AuditError;
};
class NoRewardDataError : public AuditError {
public:
    using AuditError::AuditError;
};

}  // namespace agentaudit
