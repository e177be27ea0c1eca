#pragma once

#include <stdexcept>
#include <string>

namespace jcrm {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteObjective : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidAssociation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KeyMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace jcrm
