#pragma once

// Scene-frame JSON artifacts: reconstructed buildings and generator truth.

#include <string>
#include <vector>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/pipeline/synth.hpp"
#include "twin/scene/building.hpp"

namespace twin::io {

using ojson = nlohmann::ordered_json;

inline ojson ring_json(const geo::Ring& r) {
  ojson out = ojson::array();
  for (const auto& p : r) out.push_back({p.x, p.y});
  return out;
}

inline geo::Ring ring_from_json(const ojson& j) {
  geo::Ring r;
  for (const auto& p : j) r.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return r;
}

inline ojson mesh_json(const geo::Mesh& m) {
  ojson v = ojson::array();
  for (const auto& p : m.vertices) {
    v.push_back(p.x);
    v.push_back(p.y);
    v.push_back(p.z);
  }
  return {{"vertices", std::move(v)}, {"indices", m.indices}};
}

inline geo::Mesh mesh_from_json(const ojson& j) {
  geo::Mesh m;
  const auto& v = j.at("vertices");
  if (v.size() % 3 != 0) throw Error(Errc::parse, "mesh vertex list must hold xyz triples");
  for (std::size_t i = 0; i < v.size(); i += 3)
    m.vertices.push_back({v[i].get<double>(), v[i + 1].get<double>(), v[i + 2].get<double>()});
  m.indices = j.at("indices").get<std::vector<std::uint32_t>>();
  for (auto i : m.indices)
    if (i >= m.vertices.size()) throw Error(Errc::parse, "mesh index out of range");
  return m;
}

/// LOD2 buildings in scene coordinates; doubles round-trip exactly.
inline std::string buildings_json(const std::vector<scene::Lod2Building>& bs) {
  ojson list = ojson::array();
  for (const auto& b : bs) {
    list.push_back({{"id", b.id},
                    {"footprint", {{"id", b.footprint.id}, {"area", b.footprint.area}, {"exterior", ring_json(b.footprint.polygon.exterior)}}},
                    {"base_elevation", b.base_elevation},
                    {"attributes",
                     {{"county", b.attributes.county},
                      {"municipality", b.attributes.municipality},
                      {"hazard_tags", b.attributes.hazard_tags}}},
                    {"roof", mesh_json(b.roof_mesh)},
                    {"walls", mesh_json(b.wall_mesh)},
                    {"base", mesh_json(b.base_mesh)}});
  }
  return ojson{{"buildings", std::move(list)}}.dump() + "\n";
}

inline std::vector<scene::Lod2Building> parse_buildings_json(const std::string& text) {
  std::vector<scene::Lod2Building> out;
  try {
    const auto doc = ojson::parse(text);
    for (const auto& j : doc.at("buildings")) {
      scene::Lod2Building b;
      b.id = j.at("id").get<std::uint64_t>();
      const auto& f = j.at("footprint");
      b.footprint.id = f.at("id").get<std::uint64_t>();
      b.footprint.area = f.at("area").get<double>();
      b.footprint.polygon.exterior = ring_from_json(f.at("exterior"));
      b.base_elevation = j.at("base_elevation").get<double>();
      const auto& a = j.at("attributes");
      b.attributes = {a.at("county").get<std::string>(), a.at("municipality").get<std::string>(),
                      a.at("hazard_tags").get<std::vector<std::string>>()};
      b.roof_mesh = mesh_from_json(j.at("roof"));
      b.wall_mesh = mesh_from_json(j.at("walls"));
      b.base_mesh = mesh_from_json(j.at("base"));
      out.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed buildings file: ") + e.what());
  }
  return out;
}

inline std::string truth_json(const synth::SynthScene& s) {
  ojson list = ojson::array();
  for (const auto& b : s.buildings) {
    list.push_back({{"id", b.id},
                    {"roof", b.roof == synth::RoofType::Flat ? "flat" : "gable"},
                    {"center", {b.center.x, b.center.y}},
                    {"width", b.width},
                    {"length", b.length},
                    {"angle", b.angle},
                    {"ground_z", b.ground_z},
                    {"eave_z", b.eave_z},
                    {"ridge_z", b.ridge_z},
                    {"footprint", ring_json(b.footprint.exterior)}});
  }
  return ojson{{"seed", s.params.seed}, {"extent_m", s.params.extent_m}, {"buildings", std::move(list)}}.dump(1) + "\n";
}

inline std::vector<synth::TruthBuilding> parse_truth_json(const std::string& text) {
  std::vector<synth::TruthBuilding> out;
  try {
    const auto doc = ojson::parse(text);
    for (const auto& j : doc.at("buildings")) {
      synth::TruthBuilding b;
      b.id = j.at("id").get<std::uint64_t>();
      b.roof = j.at("roof").get<std::string>() == "flat" ? synth::RoofType::Flat : synth::RoofType::Gable;
      b.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
      b.width = j.at("width").get<double>();
      b.length = j.at("length").get<double>();
      b.angle = j.at("angle").get<double>();
      b.ground_z = j.at("ground_z").get<double>();
      b.eave_z = j.at("eave_z").get<double>();
      b.ridge_z = j.at("ridge_z").get<double>();
      b.footprint.exterior = ring_from_json(j.at("footprint"));
      out.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed truth file: ") + e.what());
  }
  return out;
}

}  // namespace twin::io
