#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "probemine/core.hpp"

namespace probemine {

struct RegistryNode {
  BuildingId building;
  Category category = Category::Residential;
  Area area = Area::Residential;
};

/// The deployment's buildings in a fixed order. That order is the row/column
/// order of every node-indexed matrix and histogram.
class DeploymentRegistry {
 public:
  /// Throws RegistryError on duplicate buildings.
  explicit DeploymentRegistry(std::vector<RegistryNode> nodes);

  /// Six Facility buildings (Malls 1-4 as A-D, Hospital H, Institute I) and
  /// fourteen Residential blocks a-n.
  static DeploymentRegistry standard();
  /// Table with header line, then `building_id,category,area` rows.
  static DeploymentRegistry parse(std::istream& in);
  static DeploymentRegistry load(const std::filesystem::path& path);
  std::string to_text() const;

  std::size_t size() const { return nodes_.size(); }
  const std::vector<RegistryNode>& nodes() const { return nodes_; }
  const RegistryNode& node(std::size_t i) const { return nodes_.at(i); }

  std::optional<std::size_t> find(BuildingId b) const;
  /// Throws RegistryError for buildings not in the registry.
  std::size_t index_of(BuildingId b) const;
  Category category_of(BuildingId b) const { return nodes_[index_of(b)].category; }
  std::vector<BuildingId> buildings_in(Category c) const;
  std::vector<BuildingId> buildings_in(Area a) const;

 private:
  std::vector<RegistryNode> nodes_;
  std::array<int, 256> index_{};
};

}  // namespace probemine
