#include "qnet/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace qnet::cli {

namespace {

std::string join_issues(const std::vector<ParseIssue> &issues) {
    std::vector<std::string> lines;
    for (const auto &i : issues) {
        lines.push_back(i.line > 0 ? fmt::format("line {}: {}", i.line, i.message) : i.message);
    }
    return fmt::format("{}", fmt::join(lines, "; "));
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string &v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

struct Bad {
    ErrorCode code;
    std::string message;
};

template <class T>
T number(const std::string &v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw Bad{ErrorCode::syntax_error, "not an integer: '" + v + "'"};
    return out;
}

std::vector<int> numbers(const std::string &v) {
    std::vector<int> out;
    for (const auto &x : split_list(v)) out.push_back(number<int>(x));
    return out;
}

net::Layout layout(const std::string &v) {
    if (v == "plain") return net::Layout::plain;
    if (v == "shielded") return net::Layout::shielded;
    throw Bad{ErrorCode::syntax_error, "layout must be plain or shielded, not '" + v + "'"};
}

template <class T>
T &entity(std::vector<T> &items, std::map<std::string, std::size_t> &index, const std::string &id) {
    auto it = index.find(id);
    if (it != index.end()) return items[it->second];
    index[id] = items.size();
    items.emplace_back();
    return items.back();
}

}  // namespace

ScenarioError::ScenarioError(std::vector<ParseIssue> issues)
    : Error(issues.empty() ? ErrorCode::syntax_error : issues.front().code, join_issues(issues)),
      issues_(std::move(issues)) {}

stack::Scenario parse_scenario(const std::string &text) {
    stack::Scenario s;
    std::vector<ParseIssue> issues;
    std::map<std::string, std::size_t> nets, regions, requests, failures, checks;
    std::vector<std::string> failure_ids;
    std::set<std::string> keys;
    // Line of the first record of each referenced entity, for error reports.
    std::map<std::string, int> request_line, region_line, failure_line, check_line, client_line, route_line;

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        auto body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            issues.push_back({line, ErrorCode::syntax_error, "expected 'section.key = value'"});
            continue;
        }
        auto key = trim(body.substr(0, eq));
        auto value = trim(body.substr(eq + 1));
        if (!keys.insert(key).second) {
            issues.push_back({line, ErrorCode::duplicate_id, "duplicate key " + key});
            continue;
        }
        auto dot = key.find('.');
        auto last = key.rfind('.');
        if (dot == std::string::npos || dot == 0 || last + 1 == key.size()) {
            issues.push_back({line, ErrorCode::syntax_error, "malformed key '" + key + "'"});
            continue;
        }
        auto section = key.substr(0, dot);
        auto rest = key.substr(dot + 1);
        // Sections keyed by id use the last dot to split id and field.
        auto id = last > dot ? key.substr(dot + 1, last - dot - 1) : std::string{};
        auto field = key.substr(last + 1);
        try {
            auto need_id = [&] {
                if (id.empty()) throw Bad{ErrorCode::syntax_error, "missing id in '" + key + "'"};
            };
            auto unknown = [&] { throw Bad{ErrorCode::syntax_error, "unknown key '" + key + "'"}; };
            if (section == "scenario") {
                if (rest == "name") {
                    s.name = value;
                } else if (rest == "seed") {
                    s.seed = number<std::uint64_t>(value);
                } else if (rest == "m_max") {
                    s.m_max = number<int>(value);
                } else {
                    unknown();
                }
            } else if (section == "network") {
                need_id();
                auto &n = entity(s.networks, nets, id);
                n.id = id;
                if (field == "devices") {
                    n.devices = split_list(value);
                } else if (field == "clients") {
                    n.clients = numbers(value);
                } else if (field == "router") {
                    n.router = value;
                } else if (field == "repeaters") {
                    n.repeaters = split_list(value);
                } else if (field == "layout") {
                    n.layout = layout(value);
                } else if (field == "symmetrized") {
                    n.symmetrized = number<int>(value);
                } else {
                    unknown();
                }
            } else if (section == "client") {
                if (value.empty()) throw Bad{ErrorCode::syntax_error, "client " + rest + " needs a device"};
                s.clients.push_back({rest, value});
                client_line[rest] = line;
            } else if (section == "region") {
                need_id();
                auto &r = entity(s.regions, regions, id);
                r.id = id;
                region_line.try_emplace(id, line);
                if (field == "members") {
                    r.members = split_list(value);
                    region_line[id] = line;
                } else if (field == "copies") {
                    r.copies = number<int>(value);
                } else {
                    unknown();
                }
            } else if (section == "request") {
                need_id();
                auto &q = entity(s.requests, requests, id);
                q.id = id;
                request_line.try_emplace(id, line);
                if (field == "edges") {
                    q.edges.clear();
                    for (const auto &e : split_list(value)) {
                        auto colon = e.find(':');
                        if (colon == std::string::npos) throw Bad{ErrorCode::syntax_error, "edge '" + e + "' needs a:b"};
                        q.edges.emplace_back(trim(e.substr(0, colon)), trim(e.substr(colon + 1)));
                    }
                    request_line[id] = line;
                } else if (field == "target") {
                    q.target = value;
                } else if (field == "copies") {
                    q.copies = number<int>(value);
                } else if (field == "at") {
                    q.at = number<std::int64_t>(value);
                } else {
                    unknown();
                }
            } else if (section == "failure") {
                need_id();
                auto &f = entity(s.failures, failures, id);
                if (failure_ids.size() < s.failures.size()) failure_ids.push_back(id);
                failure_line.try_emplace(id, line);
                if (field == "device") {
                    f.device = value;
                    failure_line[id] = line;
                } else if (field == "at") {
                    f.at = number<std::int64_t>(value);
                } else {
                    unknown();
                }
            } else if (section == "check") {
                need_id();
                auto &c = entity(s.checks, checks, id);
                c.id = id;
                check_line.try_emplace(id, line);
                if (field == "network") {
                    c.network = value;
                    check_line[id] = line;
                } else if (field == "size") {
                    c.size = number<int>(value);
                } else if (field == "budget") {
                    c.budget = number<int>(value);
                } else if (field == "lost") {
                    c.lost = value;
                } else {
                    unknown();
                }
            } else if (section == "route") {
                if (rest != "routers") unknown();
                s.route = split_list(value);
                route_line["route"] = line;
            } else if (section == "costs") {
                if (rest == "c") {
                    s.cost_c = numbers(value);
                } else if (rest == "m") {
                    s.cost_m = numbers(value);
                } else {
                    unknown();
                }
            } else {
                throw Bad{ErrorCode::syntax_error, "unknown section '" + section + "'"};
            }
        } catch (const Bad &b) {
            issues.push_back({line, b.code, b.message});
        }
    }
    if (!issues.empty()) throw ScenarioError(std::move(issues));

    // Cross references, reported at the line that makes them.
    std::set<std::string> clients, routers, devices, net_ids;
    for (const auto &n : s.networks) {
        net_ids.insert(n.id);
        devices.insert(n.devices.begin(), n.devices.end());
        devices.insert(n.repeaters.begin(), n.repeaters.end());
        if (!n.router.empty()) routers.insert(n.router);
    }
    for (const auto &c : s.clients) {
        clients.insert(c.id);
        if (!devices.count(c.device)) {
            issues.push_back({client_line[c.id], ErrorCode::unknown_reference,
                              fmt::format("client {} attached to unknown device {}", c.id, c.device)});
        }
    }
    for (const auto &r : s.regions) {
        for (const auto &m : r.members) {
            if (!routers.count(m)) {
                issues.push_back({region_line[r.id], ErrorCode::unknown_reference,
                                  fmt::format("region {} member {} is not a router", r.id, m)});
            }
        }
    }
    for (const auto &q : s.requests) {
        for (const auto &[a, b] : q.edges) {
            for (const auto &c : {a, b}) {
                if (!clients.count(c)) {
                    issues.push_back({request_line[q.id], ErrorCode::unknown_reference,
                                      fmt::format("request {} names unknown client {}", q.id, c)});
                }
            }
        }
    }
    for (std::size_t i = 0; i < s.failures.size(); ++i) {
        const auto &f = s.failures[i];
        if (!devices.count(f.device) && !clients.count(f.device)) {
            issues.push_back({failure_line[failure_ids[i]], ErrorCode::unknown_reference,
                              fmt::format("failure of unknown device {}", f.device)});
        }
    }
    for (const auto &c : s.checks) {
        if (!net_ids.count(c.network)) {
            issues.push_back({check_line[c.id], ErrorCode::unknown_reference,
                              fmt::format("check {} names unknown network {}", c.id, c.network)});
        }
    }
    for (const auto &r : s.route) {
        if (!routers.count(r)) {
            issues.push_back({route_line["route"], ErrorCode::unknown_reference, fmt::format("{} is not a router", r)});
        }
    }
    if (!issues.empty()) throw ScenarioError(std::move(issues));
    try {
        stack::validate(s);
    } catch (const Error &e) {
        throw ScenarioError({{0, e.code(), e.what()}});
    }
    return s;
}

stack::Scenario load_scenario(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::not_found, "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_scenario(const stack::Scenario &s) {
    std::string out;
    auto line = [&](const std::string &k, const std::string &v) { out += k + " = " + v + "\n"; };
    if (!s.name.empty()) line("scenario.name", s.name);
    if (s.seed) line("scenario.seed", std::to_string(*s.seed));
    if (s.m_max != 0) line("scenario.m_max", std::to_string(s.m_max));
    for (const auto &n : s.networks) {
        auto k = "network." + n.id + ".";
        line(k + "devices", fmt::format("{}", fmt::join(n.devices, ", ")));
        line(k + "clients", fmt::format("{}", fmt::join(n.clients, ", ")));
        if (!n.router.empty()) line(k + "router", n.router);
        if (!n.repeaters.empty()) line(k + "repeaters", fmt::format("{}", fmt::join(n.repeaters, ", ")));
        if (n.layout != net::Layout::plain) line(k + "layout", "shielded");
        if (n.symmetrized != 0) line(k + "symmetrized", std::to_string(n.symmetrized));
    }
    for (const auto &c : s.clients) line("client." + c.id, c.device);
    for (const auto &r : s.regions) {
        line("region." + r.id + ".members", fmt::format("{}", fmt::join(r.members, ", ")));
        line("region." + r.id + ".copies", std::to_string(r.copies));
    }
    for (const auto &q : s.requests) {
        std::vector<std::string> edges;
        for (const auto &[a, b] : q.edges) edges.push_back(a + ":" + b);
        auto k = "request." + q.id + ".";
        line(k + "edges", fmt::format("{}", fmt::join(edges, ", ")));
        if (!q.target.empty()) line(k + "target", q.target);
        line(k + "copies", std::to_string(q.copies));
        line(k + "at", std::to_string(q.at));
    }
    for (std::size_t i = 0; i < s.failures.size(); ++i) {
        auto k = fmt::format("failure.f{}.", i + 1);
        line(k + "device", s.failures[i].device);
        line(k + "at", std::to_string(s.failures[i].at));
    }
    for (const auto &c : s.checks) {
        auto k = "check." + c.id + ".";
        line(k + "network", c.network);
        line(k + "size", std::to_string(c.size));
        line(k + "budget", std::to_string(c.budget));
        if (!c.lost.empty()) line(k + "lost", c.lost);
    }
    if (!s.route.empty()) line("route.routers", fmt::format("{}", fmt::join(s.route, ", ")));
    if (!s.cost_c.empty()) line("costs.c", fmt::format("{}", fmt::join(s.cost_c, ", ")));
    if (!s.cost_m.empty()) line("costs.m", fmt::format("{}", fmt::join(s.cost_m, ", ")));
    return out;
}

}  // namespace qnet::cli
