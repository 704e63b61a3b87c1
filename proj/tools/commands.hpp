#pragma once

// Subcommand wiring for the cmfnet CLI. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 runtime failure.

namespace CLI {
class App;
}

namespace cmftool {

void register_synth(CLI::App& app);
void register_scribble(CLI::App& app);
void register_train(CLI::App& app);
void register_infer(CLI::App& app);
void register_eval(CLI::App& app);
void register_ablate(CLI::App& app);
void register_plot(CLI::App& app);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

}  // namespace cmftool
