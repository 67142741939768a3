#pragma once

#include <set>
#include <string>
#include <vector>

#include "solarqm/error.hpp"

namespace solarqm {

struct RegionRow {
  int region_id;
  std::string region_name;
  double centroid_lat;
  double centroid_lon;
};

/// Climate regions with representative centroids, loaded from CSV.
struct RegionTable {
  std::vector<RegionRow> rows;

  void validate() const {
    if (rows.empty()) throw InvalidInput("region table must have at least one row");
    std::set<int> seen;
    for (const RegionRow& r : rows)
      if (!seen.insert(r.region_id).second)
        throw InvalidInput("duplicate region_id " + std::to_string(r.region_id) +
                           " in region table");
  }
};

}  // namespace solarqm
