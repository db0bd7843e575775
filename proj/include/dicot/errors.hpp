#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dicot {

// Base for all typed errors. `kind()` is stable and machine-parsable; the CLI
// prints failures as "ERROR <kind>: <detail>".
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& detail)
        : std::runtime_error(detail), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& d) : Error("ShapeError", d) {}
};

struct ContractError : Error {
    explicit ContractError(const std::string& d) : Error("ContractError", d) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& d) : Error("ConfigError", d) {}
};

struct NumericsError : Error {
    explicit NumericsError(const std::string& d) : Error("NumericsError", d) {}
};

struct InvalidPartition : Error {
    explicit InvalidPartition(const std::string& d) : Error("InvalidPartition", d) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& d) : Error("FormatError", d) {}
};

struct BudgetError : Error {
    explicit BudgetError(const std::string& d) : Error("BudgetError", d) {}
};

}  // namespace dicot
