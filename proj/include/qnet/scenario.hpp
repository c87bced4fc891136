#pragma once

#include <string>
#include <vector>

#include "qnet/common.hpp"
#include "qnet/stack.hpp"

namespace qnet::cli {

/// Line-oriented scenario files: `section.key = value` records, `#` starts a
/// comment. Sections:
///
///   scenario.name | scenario.seed | scenario.m_max
///   network.<id>.devices | .clients | .router | .repeaters | .layout | .symmetrized
///   client.<id> = <switch>
///   region.<id>.members | .copies
///   request.<id>.edges (a:b, ...) | .target | .copies | .at
///   failure.<id>.device | .at
///   check.<id>.network | .size | .budget | .lost
///   route.routers
///   costs.c | costs.m
///
/// Lists are comma separated. Entities keep the order of their first line.

struct ParseIssue {
    int line = 0;
    ErrorCode code = ErrorCode::syntax_error;
    std::string message;
};

/// Thrown by parse_scenario with every problem found; code() is the code of
/// the first issue and what() lists them all as "line N: message".
class ScenarioError : public Error {
  public:
    explicit ScenarioError(std::vector<ParseIssue> issues);

    const std::vector<ParseIssue> &issues() const {
        return issues_;
    }

  private:
    std::vector<ParseIssue> issues_;
};

stack::Scenario parse_scenario(const std::string &text);
stack::Scenario load_scenario(const std::string &path);
std::string serialize_scenario(const stack::Scenario &s);

}  // namespace qnet::cli
