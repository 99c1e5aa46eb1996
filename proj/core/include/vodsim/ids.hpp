#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace vodsim {

using PeerId = std::uint32_t;
inline constexpr PeerId kNoPeer = std::numeric_limits<PeerId>::max();

struct BlockRef {
  std::uint32_t piece = 0;
  std::uint32_t block = 0;

  friend constexpr auto operator<=>(const BlockRef&, const BlockRef&) = default;
};

}  // namespace vodsim
