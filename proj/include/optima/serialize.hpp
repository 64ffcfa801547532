#pragma once

#include "optima/metrics.hpp"
#include "optima/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace optima {

inline constexpr int kFormatVersion = 1;

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

std::string rng_state(const Rng& rng);
Rng rng_from_state(const std::string& text);

/// Weight snapshot: format tag, version, seed, shapes and all matrices.
nlohmann::json weights_to_json(const BackboneWeights& weights, std::uint64_t seed);
BackboneWeights weights_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const TrainState& state);
TrainState state_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

nlohmann::json aggregate_to_json(const AggregateReport& report);
/// One row per method: method, runs, units, accuracy mean/std, F1 mean/std,
/// t statistic and p-value against the reference, completeness.
std::string aggregate_to_csv(const AggregateReport& report);

nlohmann::json log_record_to_json(const LogRecord& record);

/// Writes through a temporary file and renames, so readers never see a
/// partial file. Creates parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace optima
