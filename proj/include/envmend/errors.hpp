// envmend/errors.hpp - error types thrown across the pipeline
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace envmend {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A binding set did not match a template's placeholders.
struct MissingPlaceholderError : Error {
    explicit MissingPlaceholderError(const std::string& placeholder)
        : Error("placeholder not satisfied: " + placeholder), placeholder(placeholder) {}
    std::string placeholder;
};

// The text-generation service could not be reached or rejected the request.
struct BackendError : Error {
    using Error::Error;
};

// The backend kept returning output that does not parse against the schema.
struct MalformedReplyError : Error {
    MalformedReplyError(const std::string& what, std::string last_raw)
        : Error(what), last_raw_text(std::move(last_raw)) {}
    std::string last_raw_text;
};

// Every admissible version for a module has already been tried.
struct VersionsExhaustedError : Error {
    explicit VersionsExhaustedError(const std::string& module)
        : Error("all catalog versions tried for module: " + module), module(module) {}
    std::string module;
};

// The registry has no package under the requested install name.
struct UnknownPackageError : Error {
    explicit UnknownPackageError(const std::string& name)
        : Error("package not found on registry: " + name), install_name(name) {}
    std::string install_name;
};

struct RegistryUnavailableError : Error {
    using Error::Error;
};

// No admissible candidate edit remains for a module.
struct CandidateSpaceExhaustedError : Error {
    explicit CandidateSpaceExhaustedError(const std::string& module)
        : Error("candidate space exhausted at module: " + module), module(module) {}
    std::string module;
};

// The container engine itself is missing or broken (not a candidate failure).
struct EngineUnavailableError : Error {
    using Error::Error;
};

struct UnsupportedInterpreterError : Error {
    explicit UnsupportedInterpreterError(const std::string& series)
        : Error("unsupported interpreter series: " + series), series(series) {}
    std::string series;
};

}  // namespace envmend
