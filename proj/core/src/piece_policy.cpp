#include "vodsim/piece_policy.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace vodsim {

Bitfield::Bitfield(std::uint32_t piece_count, std::uint32_t blocks_per_piece)
    : piece_count_(piece_count),
      blocks_per_piece_(blocks_per_piece),
      blocks_(static_cast<std::size_t>(piece_count) * blocks_per_piece, 0),
      held_(piece_count, 0) {}

Bitfield Bitfield::full(std::uint32_t piece_count, std::uint32_t blocks_per_piece) {
  Bitfield b(piece_count, blocks_per_piece);
  std::fill(b.blocks_.begin(), b.blocks_.end(), 1);
  std::fill(b.held_.begin(), b.held_.end(), blocks_per_piece);
  b.pieces_held_ = piece_count;
  return b;
}

PieceState Bitfield::state(std::uint32_t piece) const {
  auto h = held_[piece];
  if (h == 0) return PieceState::Missing;
  return h == blocks_per_piece_ ? PieceState::Held : PieceState::Partial;
}

bool Bitfield::add_block(BlockRef b) {
  auto& slot = blocks_[index(b)];
  if (slot) throw std::logic_error("duplicate block delivery");
  slot = 1;
  if (++held_[b.piece] == blocks_per_piece_) {
    ++pieces_held_;
    return true;
  }
  return false;
}

void Bitfield::add_piece(std::uint32_t piece) {
  for (std::uint32_t k = 0; k < blocks_per_piece_; ++k)
    if (!has_block({piece, k})) add_block({piece, k});
}

std::uint32_t Bitfield::contiguity_from(std::uint32_t piece) const {
  std::uint32_t run = 0;
  while (piece + run < piece_count_ && has_piece(piece + run)) ++run;
  return run;
}

bool BlockSet::insert(BlockRef b) {
  auto& bit = bits_[idx(b)];
  if (bit) return false;
  bit = 1;
  ++size_;
  return true;
}

bool BlockSet::erase(BlockRef b) {
  auto& bit = bits_[idx(b)];
  if (!bit) return false;
  bit = 0;
  --size_;
  return true;
}

AdwisWindow AdwisWindow::make(std::uint32_t piece_count, std::uint32_t w_init,
                              std::uint32_t theta) {
  AdwisWindow w;
  w.piece_count = piece_count;
  w.initial_size = std::max<std::uint32_t>(1, w_init);
  w.size = std::min(w.initial_size, std::max<std::uint32_t>(1, piece_count));
  w.theta = theta;
  return w;
}

std::uint32_t AdwisWindow::last_piece() const {
  if (piece_count == 0) return 0;
  std::uint64_t last = static_cast<std::uint64_t>(base_piece) + size - 1;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(last, piece_count - 1));
}

AdwisWindow update_window(AdwisWindow window, const Bitfield& local, WindowEvent event,
                          std::uint32_t playback_piece) {
  window.base_piece = std::min(playback_piece, window.piece_count - 1);
  const std::uint32_t remaining = window.piece_count - window.base_piece;
  switch (event) {
    case WindowEvent::PieceCompleted:
      if (local.contiguity_from(window.base_piece) >= window.theta) ++window.size;
      break;
    case WindowEvent::Jump:
    case WindowEvent::Stall:
      window.size = window.initial_size;
      break;
    case WindowEvent::PlaybackAdvanced:
      break;
  }
  window.size = std::clamp<std::uint32_t>(window.size, 1, remaining);
  return window;
}

std::uint32_t rarity(std::uint32_t piece, std::span<const Bitfield* const> neighborhood) {
  std::uint32_t n = 0;
  for (const auto* b : neighborhood)
    if (b->has_piece(piece)) ++n;
  return n;
}

std::vector<std::uint32_t> availability(std::uint32_t piece_count,
                                        std::span<const Bitfield* const> neighborhood) {
  std::vector<std::uint32_t> out(piece_count, 0);
  for (const auto* b : neighborhood)
    for (std::uint32_t p = 0; p < piece_count; ++p)
      if (b->has_piece(p)) ++out[p];
  return out;
}

namespace {

std::optional<BlockRef> free_block(const Bitfield& local, const BlockSet& inflight,
                                   std::uint32_t piece) {
  for (std::uint32_t k = 0; k < local.blocks_per_piece(); ++k) {
    BlockRef b{piece, k};
    if (!local.has_block(b) && !inflight.contains(b)) return b;
  }
  return std::nullopt;
}

}  // namespace

std::optional<BlockRef> next_request(const Bitfield& local, const AdwisWindow& window,
                                     const Bitfield& remote, const BlockSet& inflight,
                                     std::span<const std::uint32_t> avail, Rng& rng) {
  const std::uint32_t n = local.piece_count();

  for (std::uint32_t p = 0; p < n; ++p) {
    if (local.state(p) != PieceState::Partial || !remote.has_piece(p)) continue;
    if (auto b = free_block(local, inflight, p)) return b;
  }

  if (n > 0) {
    std::optional<BlockRef> best;
    std::uint32_t best_rarity = std::numeric_limits<std::uint32_t>::max();
    for (std::uint32_t p = window.base_piece; p <= window.last_piece(); ++p) {
      if (local.state(p) != PieceState::Missing || !remote.has_piece(p)) continue;
      if (avail[p] >= best_rarity) continue;
      if (auto b = free_block(local, inflight, p)) {
        best = b;
        best_rarity = avail[p];
      }
    }
    if (best) return best;
  }

  std::vector<BlockRef> ties;
  std::uint32_t best_rarity = std::numeric_limits<std::uint32_t>::max();
  for (std::uint32_t p = 0; p < n; ++p) {
    if (window.contains(p)) continue;
    if (local.state(p) != PieceState::Missing || !remote.has_piece(p)) continue;
    if (avail[p] > best_rarity) continue;
    auto b = free_block(local, inflight, p);
    if (!b) continue;
    if (avail[p] < best_rarity) {
      ties.clear();
      best_rarity = avail[p];
    }
    ties.push_back(*b);
  }
  if (ties.empty()) return std::nullopt;
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

bool is_interesting(const Bitfield& local, const Bitfield& remote) {
  for (std::uint32_t p = 0; p < local.piece_count(); ++p)
    if (remote.has_piece(p) && !local.has_piece(p)) return true;
  return false;
}

}  // namespace vodsim
