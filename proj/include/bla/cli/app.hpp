#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bla/cli/run_config.hpp"

namespace bla::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point shared by the executable and the tests. args[0] is the program
/// name. Returns the process exit code: 0 on success, 2 parse, 3 schema,
/// 4 contract/config/range/metric, 5 I/O.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The commands behind `synth`, `train`, `predict`, `eval` and `explain`.
void cmd_synth(RunConfig config, std::ostream& log);
void cmd_train(RunConfig config, std::ostream& log);
void cmd_predict(RunConfig config, std::ostream& log);
void cmd_eval(RunConfig config, std::ostream& log);
void cmd_explain(RunConfig config, std::ostream& log);

}  // namespace bla::cli
