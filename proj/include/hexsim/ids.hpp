#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

#include "json.hpp"

namespace hexsim {

// Strongly typed numeric identifier. Tags keep slice, UE and bearer ids apart.
template <typename Tag>
struct Id {
  std::uint32_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(const Id&, const Id&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value; }
};

template <typename Tag>
void to_json(nlohmann::json& j, const Id<Tag>& id) {
  j = id.value;
}

template <typename Tag>
void from_json(const nlohmann::json& j, Id<Tag>& id) {
  id.value = j.get<std::uint32_t>();
}

using SliceId = Id<struct SliceTag>;
using UeId = Id<struct UeTag>;
using DrbId = Id<struct DrbTag>;

}  // namespace hexsim

template <typename Tag>
struct std::hash<hexsim::Id<Tag>> {
  std::size_t operator()(const hexsim::Id<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
