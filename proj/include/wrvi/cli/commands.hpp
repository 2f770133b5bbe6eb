#pragma once

#include <optional>
#include <string>

namespace wrvi::cli {

// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

struct CommonOptions {
  std::string config_path;
  std::string checkpoint_path;
  std::string resume_path;
  std::string input_path;
  std::string output_path;
  std::string direction = "forward";
  std::string out_dir_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> n_draws_override;
  std::optional<int> n_samples_override;
};

int cmd_train(const CommonOptions& opt);
int cmd_eval(const CommonOptions& opt);
int cmd_predict(const CommonOptions& opt);
int cmd_observe_train(const CommonOptions& opt);
int cmd_observe_infer(const CommonOptions& opt);
int cmd_scan(const CommonOptions& opt);
int cmd_sweep(const CommonOptions& opt);

}  // namespace wrvi::cli
