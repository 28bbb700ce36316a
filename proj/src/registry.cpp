#include "probemine/registry.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "probemine/error.hpp"
#include "probemine/text.hpp"

namespace probemine {

DeploymentRegistry::DeploymentRegistry(std::vector<RegistryNode> nodes) : nodes_(std::move(nodes)) {
  index_.fill(-1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& slot = index_[static_cast<unsigned char>(nodes_[i].building.value())];
    if (slot >= 0) {
      throw RegistryError(fmt::format("duplicate building '{}'", nodes_[i].building.value()));
    }
    slot = static_cast<int>(i);
  }
}

DeploymentRegistry DeploymentRegistry::standard() {
  std::vector<RegistryNode> nodes = {
      {BuildingId('A'), Category::Mall, Area::Facility},
      {BuildingId('B'), Category::Mall, Area::Facility},
      {BuildingId('C'), Category::Mall, Area::Facility},
      {BuildingId('D'), Category::Mall, Area::Facility},
      {BuildingId('H'), Category::Hospital, Area::Facility},
      {BuildingId('I'), Category::Institute, Area::Facility},
  };
  for (char c = 'a'; c <= 'n'; ++c) {
    nodes.push_back({BuildingId(c), Category::Residential, Area::Residential});
  }
  return DeploymentRegistry(std::move(nodes));
}

DeploymentRegistry DeploymentRegistry::parse(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw RegistryError("registry table is empty (header required)");
  std::vector<RegistryNode> nodes;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = text::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = text::split(text, ',');
    if (fields.size() != 3 || text::trim(fields[0]).size() != 1) {
      throw RegistryError(fmt::format("registry line {}: want building_id,category,area", lineno));
    }
    try {
      nodes.push_back({BuildingId(text::trim(fields[0]).front()),
                       parse_category(text::trim(fields[1])), parse_area(text::trim(fields[2]))});
    } catch (const MalformedInput& e) {
      throw RegistryError(fmt::format("registry line {}: {}", lineno, e.what()));
    }
    if (nodes.back().category == Category::Residential && nodes.back().area != Area::Residential) {
      throw RegistryError(fmt::format("registry line {}: residential building outside residential area", lineno));
    }
  }
  return DeploymentRegistry(std::move(nodes));
}

DeploymentRegistry DeploymentRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open registry '{}'", path.string()));
  return parse(in);
}

std::string DeploymentRegistry::to_text() const {
  std::string out = "building_id,category,area\n";
  for (const auto& n : nodes_) {
    out += fmt::format("{},{},{}\n", n.building.value(), to_string(n.category), to_string(n.area));
  }
  return out;
}

std::optional<std::size_t> DeploymentRegistry::find(BuildingId b) const {
  const int i = index_[static_cast<unsigned char>(b.value())];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

std::size_t DeploymentRegistry::index_of(BuildingId b) const {
  if (auto i = find(b)) return *i;
  throw RegistryError(fmt::format("building '{}' not in registry", b.value()));
}

std::vector<BuildingId> DeploymentRegistry::buildings_in(Category c) const {
  std::vector<BuildingId> out;
  for (const auto& n : nodes_) {
    if (n.category == c) out.push_back(n.building);
  }
  return out;
}

std::vector<BuildingId> DeploymentRegistry::buildings_in(Area a) const {
  std::vector<BuildingId> out;
  for (const auto& n : nodes_) {
    if (n.area == a) out.push_back(n.building);
  }
  return out;
}

}  // namespace probemine
