#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qnet/stack.hpp"

namespace qnet::cli {

enum class Format { text, records };

/// One report line. Text output prints the fields as `key=value`; records
/// output prefixes them with `kind=<kind>`. Fields with an empty key print
/// their value verbatim.
struct Record {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;
};

struct Report {
    std::vector<Record> records;
    /// False when an oracle check or an audit failed.
    bool ok = true;

    std::string render(Format f) const;
};

Report run_costs(const stack::Scenario &s);
Report run_route(const stack::Scenario &s);
Report run_drill(const stack::Scenario &s);
Report run_e2e(const stack::Scenario &s);
Report run_verify(const stack::Scenario &s);

/// Dispatches on "costs", "route", "drill", "e2e" or "verify".
Report run_verb(const std::string &verb, const stack::Scenario &s);

const std::vector<std::string> &verbs();

}  // namespace qnet::cli
