#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ers/config.hpp"

namespace ers::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags or config
inline constexpr int kExitRuntime = 2;  // training/eval/io failure

// Runs the full ensemble pipeline and writes checkpoints, the dataset, the
// entropy-state stream, and a digest manifest into `out_dir`, which must be
// fresh (missing or empty). Partial member failure still exits 0, with the
// failures recorded as manifest warnings; total failure exits 2.
int cmd_train(const RunConfig& config, const std::string& out_dir,
              std::ostream& log);

// Evaluates the given checkpoints against the config's dataset and writes a
// report bundle (per-member predictions, bundle tables, manifest) into
// `out_dir`. Refuses checkpoints whose dataset digest does not match.
int cmd_eval(const RunConfig& config,
             const std::vector<std::string>& checkpoint_paths,
             const std::string& out_dir, std::ostream& log);

// Prints a summary of an existing bundle and regenerates its per-metric CSV
// flat files next to it. Pure: same bundle, same bytes.
int cmd_report(const std::string& bundle_dir, std::ostream& out);

// Finite-difference verification of every loss-term gradient; prints one
// line per term and exits 0 only if all stay under the tolerance.
int cmd_grad_check(std::uint64_t seed, std::size_t trials, std::ostream& out);

}  // namespace ers::cli
