#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vodsim/ids.hpp"
#include "vodsim/random.hpp"

namespace vodsim {

enum class PieceState { Missing, Partial, Held };

/// Block-granular possession map for one peer.
class Bitfield {
 public:
  Bitfield() = default;
  Bitfield(std::uint32_t piece_count, std::uint32_t blocks_per_piece);
  static Bitfield full(std::uint32_t piece_count, std::uint32_t blocks_per_piece);

  std::uint32_t piece_count() const { return piece_count_; }
  std::uint32_t blocks_per_piece() const { return blocks_per_piece_; }

  bool has_block(BlockRef b) const { return blocks_[index(b)] != 0; }
  bool has_piece(std::uint32_t piece) const { return held_[piece] == blocks_per_piece_; }
  std::uint32_t blocks_held(std::uint32_t piece) const { return held_[piece]; }
  PieceState state(std::uint32_t piece) const;

  /// Marks a block as held. Returns true when it completes its piece.
  /// Throws std::logic_error if the block is already held.
  bool add_block(BlockRef b);
  void add_piece(std::uint32_t piece);

  std::uint32_t pieces_held() const { return pieces_held_; }
  bool complete() const { return pieces_held_ == piece_count_; }

  /// Length of the run of held pieces starting at `piece`.
  std::uint32_t contiguity_from(std::uint32_t piece) const;

 private:
  std::size_t index(BlockRef b) const {
    return static_cast<std::size_t>(b.piece) * blocks_per_piece_ + b.block;
  }

  std::uint32_t piece_count_ = 0;
  std::uint32_t blocks_per_piece_ = 0;
  std::uint32_t pieces_held_ = 0;
  std::vector<std::uint8_t> blocks_;
  std::vector<std::uint32_t> held_;
};

/// Blocks with an outstanding request.
class BlockSet {
 public:
  BlockSet() = default;
  BlockSet(std::uint32_t piece_count, std::uint32_t blocks_per_piece)
      : blocks_per_piece_(blocks_per_piece),
        bits_(static_cast<std::size_t>(piece_count) * blocks_per_piece, 0) {}

  bool contains(BlockRef b) const { return bits_[idx(b)] != 0; }
  bool insert(BlockRef b);
  bool erase(BlockRef b);
  std::size_t size() const { return size_; }

 private:
  std::size_t idx(BlockRef b) const {
    return static_cast<std::size_t>(b.piece) * blocks_per_piece_ + b.block;
  }
  std::uint32_t blocks_per_piece_ = 0;
  std::vector<std::uint8_t> bits_;
  std::size_t size_ = 0;
};

/// Reproduction window ahead of the playback point.
struct AdwisWindow {
  std::uint32_t base_piece = 0;
  std::uint32_t size = 7;
  std::uint32_t initial_size = 7;
  std::uint32_t theta = 3;
  std::uint32_t piece_count = 0;

  static AdwisWindow make(std::uint32_t piece_count, std::uint32_t w_init, std::uint32_t theta);

  std::uint32_t last_piece() const;
  bool contains(std::uint32_t piece) const {
    return piece >= base_piece && piece <= last_piece();
  }
};

enum class WindowEvent { PieceCompleted, PlaybackAdvanced, Jump, Stall };

/// Moves the base to `playback_piece` and applies the size rule: grow by one
/// on PieceCompleted when the held run from the base reaches theta, reset to
/// the initial size on Jump or Stall. Size never exceeds the pieces left.
AdwisWindow update_window(AdwisWindow window, const Bitfield& local, WindowEvent event,
                          std::uint32_t playback_piece);

/// Number of bitfields in the neighborhood that hold `piece`.
std::uint32_t rarity(std::uint32_t piece, std::span<const Bitfield* const> neighborhood);

/// Per-piece rarity for the whole file.
std::vector<std::uint32_t> availability(std::uint32_t piece_count,
                                        std::span<const Bitfield* const> neighborhood);

/// Picks the next block to request from `remote`.
///
/// Priority: (1) missing blocks of locally partial pieces, lowest piece first;
/// (2) untouched pieces inside the window, by (rarity, index); (3) untouched
/// pieces outside the window, rarest first with a uniform random tiebreak.
/// Held and in-flight blocks are never returned.
std::optional<BlockRef> next_request(const Bitfield& local, const AdwisWindow& window,
                                     const Bitfield& remote, const BlockSet& inflight,
                                     std::span<const std::uint32_t> availability, Rng& rng);

/// True when `remote` holds at least one piece `local` lacks.
bool is_interesting(const Bitfield& local, const Bitfield& remote);

}  // namespace vodsim
