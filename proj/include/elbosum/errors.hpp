#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elbosum {

// Iterative routine exceeded its iteration cap without meeting tolerance.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds a hard enumeration/size cap (e.g. SBN latent count).
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// A mixture component lost all responsibility mass during an M-step.
class DegenerateComponentError : public std::runtime_error {
public:
    explicit DegenerateComponentError(std::size_t index)
        : std::runtime_error("mixture component " + std::to_string(index) +
                             " has no effective responsibility mass"),
          index_(index) {}
    std::size_t component_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace elbosum
