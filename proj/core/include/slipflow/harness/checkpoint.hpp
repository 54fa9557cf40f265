/// @file checkpoint.hpp
/// @brief Versioned binary checkpoints.
///
/// Layout: the 8-byte magic "SLPFCKPT", a little-endian uint64 header length,
/// a JSON header, then the payload of little-endian float64 values: rho over
/// interior cells, followed by m_x, m_y, m_z over the faces 0..N along their
/// own axis and interior cells across, all x fastest.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

#include "slipflow/eos.hpp"
#include "slipflow/solver.hpp"
#include "slipflow/state.hpp"

namespace slipflow::harness {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  FlowState state;
  EosParams eos;
  std::uint64_t config_hash = 0;
  RunningIntegrals integrals;
  /// (energy, dissipation integral) of the last emitted sample.
  std::optional<std::pair<double, double>> sampler_previous;
};

/// Writes to a temporary sibling and renames it over `path`.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws CheckpointError on a bad magic, unsupported version, malformed
/// header or a payload whose length disagrees with the header. Ghosts of the
/// returned state are filled.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace slipflow::harness
