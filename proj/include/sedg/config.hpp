#pragma once

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "sedg/common.hpp"

namespace sedg {

/// Throws ConfigError when `j` is not an object or holds a key outside `allowed`.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& what);

/// j[key] converted to T, or `fallback` when absent. Type mismatches raise ConfigError.
template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

/// Prints "warning: <msg>" to stderr unless warnings are disabled.
void log_warning(const std::string& msg);
void set_warnings_enabled(bool on);

}  // namespace sedg
