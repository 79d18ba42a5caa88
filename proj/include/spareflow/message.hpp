#pragma once

#include <cstdint>

namespace spareflow {

// Opaque word-sized token carried by channels, typically a pointer to
// shared-memory data.
using Payload = std::uintptr_t;

template <typename T>
Payload to_payload(T* ptr) noexcept {
    return reinterpret_cast<Payload>(ptr);
}

template <typename T>
T* from_payload(Payload p) noexcept {
    return reinterpret_cast<T*>(p);
}

// Unit of transfer on every channel. Control markers are tagged, so every
// Payload value (including 0) is a legal user token.
struct Message {
    enum class Kind : std::uint8_t { data, eos, ack };

    Payload word = 0;
    Kind kind = Kind::data;

    static constexpr Message data(Payload p) noexcept { return {p, Kind::data}; }
    static constexpr Message eos() noexcept { return {0, Kind::eos}; }
    static constexpr Message ack() noexcept { return {0, Kind::ack}; }

    constexpr bool is_data() const noexcept { return kind == Kind::data; }
    constexpr bool is_eos() const noexcept { return kind == Kind::eos; }
    constexpr bool is_ack() const noexcept { return kind == Kind::ack; }

    friend constexpr bool operator==(const Message&, const Message&) = default;
};

}  // namespace spareflow
