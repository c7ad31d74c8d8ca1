#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "voltrans/camera.hpp"
#include "voltrans/render.hpp"

namespace voltrans {

nlohmann::json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const nlohmann::json& j);

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& file, const std::string& field);
nlohmann::json vec3_to_json(const Vec3& v);

Camera camera_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json camera_to_json(const Camera& cam);

LightConfig light_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json light_to_json(const LightConfig& light);

/// Fetches j[field] with ConfigError context; `fallback` handles optionals.
template <class T>
T json_get(const nlohmann::json& j, const std::string& file, const std::string& field) {
    if (!j.contains(field)) throw ConfigError(file, field, "missing");
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(file, field, e.what());
    }
}

template <class T>
T json_get_or(const nlohmann::json& j, const std::string& file, const std::string& field,
              T fallback) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(file, field, e.what());
    }
}

} // namespace voltrans
