// envmend/error_class.hpp - the error taxonomy used for triage and scoring
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace envmend {

enum class ErrorClass {
    VersionNotFound,
    DependencyConflict,
    ImportError,
    ModuleNotFound,
    AttributeError,
    InvalidVersion,
    NonZeroCode,
    SyntaxError,
};

inline constexpr std::array<ErrorClass, 8> kAllErrorClasses = {
    ErrorClass::VersionNotFound, ErrorClass::DependencyConflict, ErrorClass::ImportError,
    ErrorClass::ModuleNotFound,  ErrorClass::AttributeError,     ErrorClass::InvalidVersion,
    ErrorClass::NonZeroCode,     ErrorClass::SyntaxError,
};

inline std::string to_string(ErrorClass c) {
    switch (c) {
        case ErrorClass::VersionNotFound: return "VersionNotFound";
        case ErrorClass::DependencyConflict: return "DependencyConflict";
        case ErrorClass::ImportError: return "ImportError";
        case ErrorClass::ModuleNotFound: return "ModuleNotFound";
        case ErrorClass::AttributeError: return "AttributeError";
        case ErrorClass::InvalidVersion: return "InvalidVersion";
        case ErrorClass::NonZeroCode: return "NonZeroCode";
        case ErrorClass::SyntaxError: return "SyntaxError";
    }
    return "NonZeroCode";
}

inline std::optional<ErrorClass> error_class_from_string(std::string_view name) {
    for (ErrorClass c : kAllErrorClasses)
        if (to_string(c) == name) return c;
    return std::nullopt;
}

}  // namespace envmend
