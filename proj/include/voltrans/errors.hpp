#pragma once

#include <stdexcept>
#include <string>

namespace voltrans {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported file contents (bad magic, version, truncation).
struct FormatError : Error {
    using Error::Error;
};

/// Mismatched grid/image resolutions or channel counts between operands.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid configuration value; carries the offending file and field.
struct ConfigError : Error {
    ConfigError(const std::string& file, const std::string& field, const std::string& what_)
        : Error("config error in '" + file + "', field '" + field + "': " + what_),
          file_name(file), field_name(field) {}
    std::string file_name;
    std::string field_name;
};

/// Non-finite value where the contract requires finite data (NaN gradient etc).
struct NumericError : Error {
    using Error::Error;
};

} // namespace voltrans
