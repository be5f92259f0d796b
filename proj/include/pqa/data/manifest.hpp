#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqa::data {

enum class Split { train, test };

struct ManifestRow {
  std::string image_id;
  std::string image_path;  // resolved against the manifest's directory
  double mos = 0.0;
  Split split = Split::train;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;

  std::vector<ManifestRow> split_rows(Split s) const {
    std::vector<ManifestRow> out;
    for (const auto& r : rows)
      if (r.split == s) out.push_back(r);
    return out;
  }
};

// Validation failure carrying one entry per offending row.
struct ManifestError : std::runtime_error {
  ManifestError(const std::string& msg, std::vector<std::string> item_list)
      : std::runtime_error(msg), items(std::move(item_list)) {}
  std::vector<std::string> items;
};

// CSV with header image_id,image_path,mos[,split]; split is train|test|auto
// (missing column means auto). Auto rows are assigned by a seeded shuffle so
// that round(train_fraction * n_auto) of them land in train. Duplicate ids,
// unparseable mos values, and missing files are itemized in ManifestError.
DatasetManifest load_manifest(const std::string& path, uint64_t split_seed,
                              double train_fraction = 0.8);

// Writes image_id,image_path,mos,split with split rendered as `auto` when
// requested (the synthetic generator leaves splitting to the loader).
void save_manifest(const std::string& path, const DatasetManifest& m, bool split_auto);

}  // namespace pqa::data
