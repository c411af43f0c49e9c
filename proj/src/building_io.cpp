#include "zonempc/building_io.hpp"

#include <fstream>

#include "zonempc/errors.hpp"

namespace zonempc {

using nlohmann::json;

namespace {

double resistance_scale(const std::string& unit) {
  if (unit == "degC_h_per_J") return kSecondsPerHour;
  if (unit == "degC_per_W") return 1.0;
  throw ModelConfigurationError("unknown resistance_unit '" + unit + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

BuildingModel building_from_json(const json& j) {
  try {
    BuildingModel b;
    const double scale = resistance_scale(get_or<std::string>(j, "resistance_unit", "degC_h_per_J"));
    const double c_default = get_or<double>(j, "heat_capacity", 1005.4);
    const auto& zones = j.at("zones");
    for (std::size_t i = 0; i < zones.size(); ++i) {
      const auto& zj = zones[i];
      ZoneThermalParams z;
      z.zone_id = get_or<int>(zj, "id", static_cast<int>(i) + 1);
      if (z.zone_id != static_cast<int>(i) + 1)
        throw ModelConfigurationError("zone ids must be 1..n in order");
      z.air_mass = zj.at("air_mass").get<double>();
      z.heat_capacity = get_or<double>(zj, "heat_capacity", c_default);
      z.r_walls_out = zj.at("r_walls_out").get<double>() * scale;
      z.r_walls_in = zj.at("r_walls_in").get<double>() * scale;
      z.r_outdoor = zj.at("r_outdoor").get<double>() * scale;
      z.r_indoor = zj.at("r_indoor").get<double>() * scale;
      z.r_window = zj.at("r_window").get<double>() * scale;
      z.m_outdoor = zj.at("m_outdoor").get<double>();
      z.m_indoor = zj.at("m_indoor").get<double>();
      z.m_window = zj.at("m_window").get<double>();
      z.m_ac = zj.at("m_ac").get<double>();
      z.initial_temperature = get_or<double>(zj, "initial_temperature", 10.0);
      b.zones.push_back(z);
    }
    for (const auto& pj : j.at("adjacency")) {
      int a = pj.at(0).get<int>() - 1;
      int c = pj.at(1).get<int>() - 1;
      b.adjacency.emplace_back(std::min(a, c), std::max(a, c));
    }
    const double pair_default = get_or<double>(j, "interface_initial_temperature", 10.0);
    if (j.contains("pair_init")) {
      b.pair_init = j.at("pair_init").get<std::vector<double>>();
    } else {
      b.pair_init.assign(b.adjacency.size(), pair_default);
    }
    const std::string closure = get_or<std::string>(j, "interface_closure", "mean");
    if (closure == "mean") {
      b.closure = InterfaceClosure::kMean;
    } else if (closure == "fixed") {
      b.closure = InterfaceClosure::kFixed;
    } else {
      throw ModelConfigurationError("unknown interface_closure '" + closure + "'");
    }
    for (const auto& cj : j.at("components")) {
      Component c;
      c.id = cj.at("id").get<std::string>();
      c.kind = component_kind_from_string(cj.at("kind").get<std::string>());
      if (c.kind == ComponentKind::kIndoorDoor) {
        const auto zs = cj.at("zones").get<std::vector<int>>();
        if (zs.size() != 2) throw ModelConfigurationError("internal door needs two zones");
        c.zone = zs[0] - 1;
        c.other_zone = zs[1] - 1;
      } else {
        c.zone = cj.at("zone").get<int>() - 1;
      }
      const bool open = cj.at("open").get<bool>();
      c.wf = open;
      c.wc = c.kind == ComponentKind::kHeater ? false : !open;
      b.weights.components.push_back(c);
    }
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw ModelConfigurationError(std::string("malformed building description: ") + e.what());
  }
}

json building_to_json(const BuildingModel& b) {
  json j;
  j["resistance_unit"] = "degC_per_W";
  j["interface_closure"] = b.closure == InterfaceClosure::kMean ? "mean" : "fixed";
  j["pair_init"] = b.pair_init;
  json zones = json::array();
  for (const auto& z : b.zones) {
    zones.push_back({{"id", z.zone_id},
                     {"air_mass", z.air_mass},
                     {"heat_capacity", z.heat_capacity},
                     {"r_walls_out", z.r_walls_out},
                     {"r_walls_in", z.r_walls_in},
                     {"r_outdoor", z.r_outdoor},
                     {"r_indoor", z.r_indoor},
                     {"r_window", z.r_window},
                     {"m_outdoor", z.m_outdoor},
                     {"m_indoor", z.m_indoor},
                     {"m_window", z.m_window},
                     {"m_ac", z.m_ac},
                     {"initial_temperature", z.initial_temperature}});
  }
  j["zones"] = zones;
  json adj = json::array();
  for (const auto& [a, c] : b.adjacency) adj.push_back({a + 1, c + 1});
  j["adjacency"] = adj;
  json comps = json::array();
  for (const auto& c : b.weights.components) {
    json cj{{"id", c.id}, {"kind", to_string(c.kind)}, {"open", c.wf}};
    if (c.kind == ComponentKind::kIndoorDoor) {
      cj["zones"] = {c.zone + 1, c.other_zone + 1};
    } else {
      cj["zone"] = c.zone + 1;
    }
    comps.push_back(cj);
  }
  j["components"] = comps;
  return j;
}

BuildingModel load_building(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelConfigurationError("cannot open building file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelConfigurationError("cannot parse building file '" + path + "': " + e.what());
  }
  return building_from_json(j);
}

void save_building(const BuildingModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelConfigurationError("cannot write building file '" + path + "'");
  out << building_to_json(model).dump(2) << "\n";
}

}  // namespace zonempc
