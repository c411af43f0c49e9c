#pragma once

#include <string>

#include <json.hpp>

#include "zonempc/plant_model.hpp"

namespace zonempc {

// JSON building description. Zone ids and adjacency pairs are 1-based.
// Resistances are read in `resistance_unit` ("degC_h_per_J" or "degC_per_W"),
// flows in kg/h.
BuildingModel building_from_json(const nlohmann::json& j);
nlohmann::json building_to_json(const BuildingModel& model);

BuildingModel load_building(const std::string& path);
void save_building(const BuildingModel& model, const std::string& path);

}  // namespace zonempc
