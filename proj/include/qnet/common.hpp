#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qnet {

/// Stable error codes. The string form (see `to_string`) is part of the CLI
/// contract and must not change.
enum class ErrorCode {
    invalid_size,
    invalid_labels,
    not_found,
    invalid_special_neighbor,
    invalid_pair,
    would_create_loop,
    unsupported_shape,
    capacity_exceeded,
    label_error,
    impossible_outcome,
    invalid_spec,
    not_shielded,
    unknown_device,
    no_route,
    insufficient_resources,
    malformed_tree,
    device_down,
    syntax_error,
    unknown_reference,
    duplicate_id,
    invalid_argument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept {
        return code_;
    }

  private:
    ErrorCode code_;
};

/// Orders strings so that embedded digit runs compare numerically
/// ("N2" < "N10"). Used for every device/router id in the project.
std::strong_ordering natural_compare(std::string_view a, std::string_view b);

struct NaturalLess {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const {
        return natural_compare(a, b) < 0;
    }
};

using DeviceId = std::string;

/// A qubit is named by the device holding it and a per-device index.
struct QubitId {
    DeviceId device;
    std::uint32_t index = 0;

    friend bool operator==(const QubitId &, const QubitId &) = default;
    friend std::strong_ordering operator<=>(const QubitId &a, const QubitId &b) {
        if (auto c = natural_compare(a.device, b.device); c != 0) {
            return c;
        }
        return a.index <=> b.index;
    }

    std::string str() const;
};

std::ostream &operator<<(std::ostream &out, const QubitId &q);

}  // namespace qnet

template <>
struct std::hash<qnet::QubitId> {
    size_t operator()(const qnet::QubitId &q) const noexcept {
        return std::hash<std::string>{}(q.device) * 31u + q.index;
    }
};
