#include "recbase/params.hpp"

#include <cmath>
#include <sstream>

#include "recbase/errors.hpp"

namespace recbase {

nlohmann::json to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

nlohmann::json to_json(const Configuration& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : c) j[name] = to_json(value);
  return j;
}

ParamValue param_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw InvalidConfig("unsupported parameter value " + j.dump());
}

Configuration configuration_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidConfig("parameters must be an object");
  Configuration c;
  for (const auto& [name, value] : j.items()) c[name] = param_from_json(value);
  return c;
}

std::string to_string(const ParamValue& v) { return to_json(v).dump(); }

double as_real(const ParamValue& v, const std::string& name) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw InvalidConfig("parameter '" + name + "' must be a number");
}

std::int64_t as_integer(const ParamValue& v, const std::string& name) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::isfinite(*d) && std::floor(*d) == *d) return static_cast<std::int64_t>(*d);
  }
  throw InvalidConfig("parameter '" + name + "' must be an integer");
}

std::string as_label(const ParamValue& v, const std::string& name) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  throw InvalidConfig("parameter '" + name + "' must be a string");
}

bool as_flag(const ParamValue& v, const std::string& name) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  if (const auto* s = std::get_if<std::string>(&v)) {
    if (*s == "true") return true;
    if (*s == "false") return false;
  }
  throw InvalidConfig("parameter '" + name + "' must be true or false");
}

}  // namespace recbase
