// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mpcs
{

enum class ErrorKind
{
    domain,
    integration_diverged,
    quadrature,
    sampling,
    coincidence,
    tangent,
    truncation,
    model,
    evaluation,
    experiment,
    config,
};

const char* to_string(ErrorKind kind);

//! Single exception type for the library; the kind says which contract broke.
class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind)
    {
        case ErrorKind::domain: return "domain";
        case ErrorKind::integration_diverged: return "integration-diverged";
        case ErrorKind::quadrature: return "quadrature";
        case ErrorKind::sampling: return "sampling";
        case ErrorKind::coincidence: return "coincidence";
        case ErrorKind::tangent: return "tangent";
        case ErrorKind::truncation: return "truncation";
        case ErrorKind::model: return "model";
        case ErrorKind::evaluation: return "evaluation";
        case ErrorKind::experiment: return "experiment";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

}  // namespace mpcs
