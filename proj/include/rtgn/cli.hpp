#pragma once

// Command implementations behind the `rtgn` binary. Each command writes its
// artifacts to the given paths; diagnostics go to the `log` stream.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rtgn/config.hpp"
#include "rtgn/eval.hpp"
#include "rtgn/model.hpp"

namespace rtgn::cli {

namespace fs = std::filesystem;

data::EventDataset cmd_synth(const RunConfig& config, const fs::path& out);

Model cmd_train(const RunConfig& config, const fs::path& data_csv, const fs::path& checkpoint,
                const fs::path& loss_csv, std::ostream* log = nullptr);

eval::ExperimentResult cmd_evaluate(const RunConfig& config, const std::vector<fs::path>& checkpoints,
                                    const fs::path& data_csv, const fs::path& report_csv);

// Scores train + validation + test in one stream and writes the trace CSV and
// a `<out>.boundaries` sidecar holding the first validation and first test
// timestamps. With a noise ratio, noise is injected into the test part.
std::vector<eval::ScoredEvent> cmd_trace(const RunConfig& config, const fs::path& checkpoint,
                                         const fs::path& data_csv, const fs::path& out,
                                         std::optional<double> noise_ratio = std::nullopt);

fs::path boundaries_path(const fs::path& trace);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rtgn::cli
