#include "qnet/common.hpp"

#include <cctype>

namespace qnet {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_size: return "invalid-size";
        case ErrorCode::invalid_labels: return "invalid-labels";
        case ErrorCode::not_found: return "not-found";
        case ErrorCode::invalid_special_neighbor: return "invalid-special-neighbor";
        case ErrorCode::invalid_pair: return "invalid-pair";
        case ErrorCode::would_create_loop: return "would-create-loop";
        case ErrorCode::unsupported_shape: return "unsupported-shape";
        case ErrorCode::capacity_exceeded: return "capacity-exceeded";
        case ErrorCode::label_error: return "label-error";
        case ErrorCode::impossible_outcome: return "impossible-outcome";
        case ErrorCode::invalid_spec: return "invalid-spec";
        case ErrorCode::not_shielded: return "not-shielded";
        case ErrorCode::unknown_device: return "unknown-device";
        case ErrorCode::no_route: return "no-route";
        case ErrorCode::insufficient_resources: return "insufficient-resources";
        case ErrorCode::malformed_tree: return "malformed-tree";
        case ErrorCode::device_down: return "device-down";
        case ErrorCode::syntax_error: return "syntax-error";
        case ErrorCode::unknown_reference: return "unknown-reference";
        case ErrorCode::duplicate_id: return "duplicate-id";
        case ErrorCode::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {
}

std::strong_ordering natural_compare(std::string_view a, std::string_view b) {
    size_t i = 0;
    size_t j = 0;
    auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    while (i < a.size() && j < b.size()) {
        if (is_digit(a[i]) && is_digit(b[j])) {
            size_t i_end = i;
            size_t j_end = j;
            while (i_end < a.size() && is_digit(a[i_end])) ++i_end;
            while (j_end < b.size() && is_digit(b[j_end])) ++j_end;
            // Strip leading zeros, then longer run means larger number.
            size_t i0 = i;
            size_t j0 = j;
            while (i0 + 1 < i_end && a[i0] == '0') ++i0;
            while (j0 + 1 < j_end && b[j0] == '0') ++j0;
            size_t len_a = i_end - i0;
            size_t len_b = j_end - j0;
            if (len_a != len_b) {
                return len_a <=> len_b;
            }
            if (auto c = a.substr(i0, len_a).compare(b.substr(j0, len_b)); c != 0) {
                return c <=> 0;
            }
            // Equal value: fewer leading zeros first keeps the order total.
            if ((i_end - i) != (j_end - j)) {
                return (i_end - i) <=> (j_end - j);
            }
            i = i_end;
            j = j_end;
            continue;
        }
        if (a[i] != b[j]) {
            return static_cast<unsigned char>(a[i]) <=> static_cast<unsigned char>(b[j]);
        }
        ++i;
        ++j;
    }
    return (a.size() - i) <=> (b.size() - j);
}

std::string QubitId::str() const {
    return device + "#" + std::to_string(index);
}

std::ostream &operator<<(std::ostream &out, const QubitId &q) {
    return out << q.str();
}

}  // namespace qnet
