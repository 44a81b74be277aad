#ifndef TXGC_CORE_PIPELINE_HPP
#define TXGC_CORE_PIPELINE_HPP

#include <string>

#include <nlohmann/json.hpp>

namespace txgc {

// Stage entry points shared by the CLI and the shared-library API. Each
// takes an options object, performs its file IO, and returns a report.
// Errors surface as ConfigError / DataError / InternalError, which map to
// exit codes 2 / 3 / 4.
nlohmann::json run_synth(const nlohmann::json& options);
nlohmann::json run_ingest(const nlohmann::json& options);
nlohmann::json run_features(const nlohmann::json& options);
nlohmann::json run_rank(const nlohmann::json& options);
nlohmann::json run_attack(const nlohmann::json& options);
nlohmann::json run_focus(const nlohmann::json& options);
nlohmann::json run_coarsen(const nlohmann::json& options);
nlohmann::json run_sample(const nlohmann::json& options);
nlohmann::json run_stats(const nlohmann::json& options);
nlohmann::json run_detect(const nlohmann::json& options);
nlohmann::json run_pipeline(const nlohmann::json& options);

// Dispatch by stage name; unknown stage is a ConfigError.
nlohmann::json run_stage(const std::string& stage, const nlohmann::json& options);

}  // namespace txgc

#endif
