#include "pqa/data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pqa/core/rng.hpp"

namespace fs = std::filesystem;

namespace pqa::data {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path, uint64_t split_seed,
                              double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("load_manifest: train_fraction must be in (0, 1)");
  std::ifstream in(path);
  if (!in) throw ManifestError("manifest not readable", {path});
  const fs::path base = fs::path(path).parent_path();

  std::string header;
  if (!std::getline(in, header))
    throw ManifestError("manifest is empty: " + path, {path});
  auto cols = split_csv_line(header);
  const bool has_split = cols.size() == 4 && cols[3] == "split";
  if (!((cols.size() == 3 || has_split) && cols[0] == "image_id" && cols[1] == "image_path" &&
        cols[2] == "mos"))
    throw ManifestError("manifest header must be image_id,image_path,mos[,split]", {header});

  DatasetManifest m;
  std::vector<std::string> problems;
  std::set<std::string> seen_ids;
  std::vector<size_t> auto_rows;
  std::string line;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != cols.size()) {
      problems.push_back("line " + std::to_string(lineno) + ": expected " +
                         std::to_string(cols.size()) + " columns");
      continue;
    }
    ManifestRow row;
    row.image_id = cells[0];
    if (!seen_ids.insert(row.image_id).second)
      problems.push_back("duplicate image_id: " + row.image_id);

    fs::path p = cells[1];
    if (p.is_relative()) p = base / p;
    row.image_path = p.string();
    if (!fs::exists(p)) problems.push_back("missing file for " + row.image_id + ": " + row.image_path);

    try {
      size_t used = 0;
      row.mos = std::stod(cells[2], &used);
      if (used != cells[2].size() || !std::isfinite(row.mos))
        throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      problems.push_back("unparseable mos for " + row.image_id + ": '" + cells[2] + "'");
    }

    std::string sp = has_split ? cells[3] : "auto";
    if (sp == "train") {
      row.split = Split::train;
    } else if (sp == "test") {
      row.split = Split::test;
    } else if (sp == "auto") {
      auto_rows.push_back(m.rows.size());
    } else {
      problems.push_back("bad split for " + row.image_id + ": '" + sp + "'");
    }
    m.rows.push_back(row);
  }
  if (!problems.empty())
    throw ManifestError("manifest validation failed (" + std::to_string(problems.size()) +
                            " problems)",
                        problems);
  if (m.rows.empty()) throw ManifestError("manifest has no data rows: " + path, {path});

  if (!auto_rows.empty()) {
    Rng rng(Rng::mix(split_seed, 0x73706c6974ULL));  // "split"
    // Fisher-Yates over the auto rows, then the first chunk trains.
    for (size_t i = auto_rows.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(i)));
      std::swap(auto_rows[i - 1], auto_rows[j]);
    }
    const auto n_train = static_cast<size_t>(
        std::llround(train_fraction * static_cast<double>(auto_rows.size())));
    for (size_t i = 0; i < auto_rows.size(); ++i)
      m.rows[auto_rows[i]].split = i < n_train ? Split::train : Split::test;
  }
  return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m, bool split_auto) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "image_id,image_path,mos,split\n";
  const fs::path base = fs::path(path).parent_path();
  for (const auto& r : m.rows) {
    fs::path p = r.image_path;
    std::error_code ec;
    fs::path rel = fs::relative(p, base, ec);
    if (!ec && !rel.empty()) p = rel;
    char mos[64];
    std::snprintf(mos, sizeof(mos), "%.17g", r.mos);
    out << r.image_id << ',' << p.string() << ',' << mos << ','
        << (split_auto ? "auto" : (r.split == Split::train ? "train" : "test")) << '\n';
  }
}

}  // namespace pqa::data
