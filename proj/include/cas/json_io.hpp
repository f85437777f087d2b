#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cas/agreement.hpp"
#include "cas/evaluation.hpp"
#include "cas/simulator.hpp"
#include "cas/training.hpp"
#include "cas/types.hpp"

namespace cas {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

// ADL serializers (field names match the documented formats exactly)
void to_json(nlohmann::json& j, const RatingHistogram& h);
void from_json(const nlohmann::json& j, RatingHistogram& h);
void to_json(nlohmann::json& j, const SerpItem& it);
void from_json(const nlohmann::json& j, SerpItem& it);
void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);
void to_json(nlohmann::json& j, const CasParams& p);
void from_json(const nlohmann::json& j, CasParams& p);
void to_json(nlohmann::json& j, const ModelVariant& v);
void from_json(const nlohmann::json& j, ModelVariant& v);
void to_json(nlohmann::json& j, const FeatureNormalization& n);
void from_json(const nlohmann::json& j, FeatureNormalization& n);
void to_json(nlohmann::json& j, const RatingRecord& r);
void from_json(const nlohmann::json& j, RatingRecord& r);

// --- JSONL -------------------------------------------------------------------

// One Session per line. Malformed lines raise Error with the line number.
std::vector<Session> read_sessions_jsonl(const std::string& path);
void write_sessions_jsonl(const std::string& path,
                          std::span<const Session> sessions);

void write_truth_jsonl(const std::string& path,
                       std::span<const SessionTruth> truth);

std::vector<RatingRecord> read_ratings_jsonl(const std::string& path);
void write_ratings_jsonl(const std::string& path,
                         std::span<const RatingRecord> records);

// --- model files ---------------------------------------------------------

// Tagged single-model file ({"model_type": "cas" | "pbm" | "ubm" | "random"
// | "dcg", "format_version": 1, ...}).
void save_model(const std::string& path, const AnyModel& model,
                const std::string& manifest_ref = "");
AnyModel load_model(const std::string& path);

// External UBM parameter file (the uUBM slot): same layout as the ubm model
// type; sat calibration is refit locally.
UbmParams load_ubm_params(const std::string& path);

// --- configs and reports ---------------------------------------------------

nlohmann::json sim_config_to_json(const SimConfig& c);
SimConfig sim_config_from_json(const nlohmann::json& j);
SimConfig load_sim_config(const std::string& path);

nlohmann::json fit_result_to_json(const FitResult& r);
nlohmann::json eval_report_to_json(const EvalReport& r,
                                   const std::string& manifest_ref = "");
nlohmann::json hetero_report_to_json(const HeteroReport& r);
nlohmann::json agreement_report_to_json(const AgreementReport& r);

// Flat rows, one per model x fold. Schema (frozen, versioned by the
// schema_version column): schema_version, repetition, fold, model, external,
// test_size, click_loglik, sat_loglik, pearson_vs_sat, spearman_vs_sat.
// Absent values are empty fields.
void write_eval_report_csv(const std::string& path, const EvalReport& r);

// generic helpers
nlohmann::json load_json(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

}  // namespace cas
