#pragma once

#include <stdexcept>
#include <string>

namespace svariv {

enum class ErrorKind {
    Parse,
    Integrity,
    Domain,
    Alignment,
    SingularDesign,
    SampleSize,
    OrderCondition,
    Identification,
    Degenerate,
    Stability,
    Parameter,
    NotImplemented,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

// Every library failure carries the module that raised it so the CLI can
// report "<module>: <message>" and map the kind onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& message)
        : std::runtime_error(module + ": " + message), kind_(kind), module_(std::move(module)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

}  // namespace svariv
