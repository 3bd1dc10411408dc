#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "mcflab/ambient.hpp"
#include "mcflab/error.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/functionals.hpp"
#include "mcflab/harness.hpp"

namespace mcflab {

/// Strict view of one JSON object. Every accessor marks its key as used;
/// finish() rejects the remaining keys with ParseError. Type and range
/// problems raise ValidationError naming the dotted field path.
class JsonReader {
public:
  JsonReader(const nlohmann::json& object, std::string path);

  bool has(const std::string& key) const;
  std::string field(const std::string& key) const;
  const std::string& path() const { return path_; }

  const nlohmann::json& raw(const std::string& key);
  double number(const std::string& key, double fallback);
  std::optional<double> optional_number(const std::string& key);
  int integer(const std::string& key, int fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key, const std::string& fallback);
  std::optional<Vec> optional_vector(const std::string& key);
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
  /// Child object; an absent key yields an empty object.
  JsonReader object(const std::string& key);

  void finish() const;

private:
  const nlohmann::json* json_;
  std::string path_;
  std::set<std::string> used_;
  static const nlohmann::json kEmpty;
};

/// Re-raises an Error from a nested validate() as ValidationError under `prefix`.
template <class F>
void validate_under(const std::string& prefix, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ValidationError) throw;
    fail(ErrorCode::ValidationError, prefix.empty() ? e.detail() : prefix + "." + e.detail());
  }
}

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json to_json(const AmbientSpace& ambient);
AmbientSpace ambient_from_json(JsonReader in, int default_dim = 3);

nlohmann::json to_json(const FlowConfig& config);
FlowConfig flow_config_from_json(JsonReader in);

nlohmann::json to_json(const EntropyOptions& opt);
EntropyOptions entropy_options_from_json(JsonReader in);

nlohmann::json to_json(const EntropyResult& result);
nlohmann::json to_json(const ExtinctionClassification& cls);
nlohmann::json to_json(const PiecewiseFlowLog& log);

}  // namespace mcflab
