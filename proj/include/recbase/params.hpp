#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include <json.hpp>

namespace recbase {

/// One hyper-parameter value: real, integer, categorical label or flag.
using ParamValue = std::variant<double, std::int64_t, std::string, bool>;

/// Named hyper-parameter assignment, ordered by name.
using Configuration = std::map<std::string, ParamValue>;

nlohmann::json to_json(const ParamValue& v);
nlohmann::json to_json(const Configuration& c);
ParamValue param_from_json(const nlohmann::json& j);
Configuration configuration_from_json(const nlohmann::json& j);

std::string to_string(const ParamValue& v);

/// Typed reads with conversions between the numeric alternatives and between
/// "true"/"false" labels and flags. Throw InvalidConfig on type mismatch.
double as_real(const ParamValue& v, const std::string& name);
std::int64_t as_integer(const ParamValue& v, const std::string& name);
std::string as_label(const ParamValue& v, const std::string& name);
bool as_flag(const ParamValue& v, const std::string& name);

}  // namespace recbase
