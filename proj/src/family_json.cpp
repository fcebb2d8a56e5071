#include "adaptlqr/family_json.hpp"

#include <fstream>
#include <string>

namespace adaptlqr {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

EntrySpec entry_from_json(const json& j, bool graph_zero, const std::string& where) {
  EntrySpec e;
  if (j.is_string()) {
    if (j.get<std::string>() != "zero") config_error(where + ": unknown entry spec '" + j.get<std::string>() + "'");
    e = EntrySpec::zero();
  } else if (j.is_object() && j.contains("fixed")) {
    if (!j["fixed"].is_number()) config_error(where + ": fixed value must be a number");
    e = EntrySpec::fixed(j["fixed"].get<double>());
  } else if (j.is_object() && j.contains("free")) {
    const json& box = j["free"];
    if (!box.is_array() || box.size() != 2 || !box[0].is_number() || !box[1].is_number())
      config_error(where + ": free needs [lo, hi]");
    e = EntrySpec::free(box[0].get<double>(), box[1].get<double>());
  } else {
    config_error(where + ": entry must be {\"fixed\": v}, {\"free\": [lo, hi]} or \"zero\"");
  }
  if (graph_zero && e.kind == EntrySpec::Kind::Fixed && e.value == 0.0) return EntrySpec::zero();
  if (!graph_zero && e.kind == EntrySpec::Kind::ZeroByGraph) return EntrySpec::fixed(0.0);
  return e;
}

json entry_to_json(const EntrySpec& e) {
  switch (e.kind) {
    case EntrySpec::Kind::Fixed: return json{{"fixed", e.value}};
    case EntrySpec::Kind::Free: return json{{"free", {e.lo, e.hi}}};
    case EntrySpec::Kind::ZeroByGraph: return "zero";
  }
  return "zero";
}

template <typename T>
std::vector<T> get_vector(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) config_error(std::string("missing array '") + key + "'");
  try {
    return doc[key].get<std::vector<T>>();
  } catch (const json::exception& e) {
    config_error(std::string(key) + ": " + e.what());
  }
}

std::vector<EntrySpec> specs_from_json(const json& doc, const char* key, const InfoStructure& info,
                                       std::size_t cols, bool is_b) {
  const std::size_t n = info.n();
  if (!doc.contains(key) || !doc[key].is_array() || doc[key].size() != n)
    config_error(std::string(key) + " must have " + std::to_string(n) + " rows");
  std::vector<EntrySpec> out;
  out.reserve(n * cols);
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = doc[key][i];
    if (!row.is_array() || row.size() != cols)
      config_error(std::string(key) + " row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t owner_col = is_b ? info.input_owner(j) : info.state_owner(j);
      const bool gz = info.plant_adj[info.state_owner(i)][owner_col] == 0;
      out.push_back(entry_from_json(row[j], gz, std::string(key) + "(" + std::to_string(i) + "," + std::to_string(j) + ")"));
    }
  }
  return out;
}

}  // namespace

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Mat mat_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) config_error(std::string(what) + " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) config_error(std::string(what) + " is ragged");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) config_error(std::string(what) + " entries must be numbers");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

PlantFamily family_from_json(const json& doc) {
  if (!doc.is_object()) config_error("family document must be a JSON object");
  try {
    const bool self_knowledge = doc.value("self_knowledge", true);
    InfoStructure info = make_info(get_vector<std::size_t>(doc, "state_dims"), get_vector<std::size_t>(doc, "input_dims"),
                                   get_vector<std::vector<int>>(doc, "plant_adj"),
                                   get_vector<std::vector<int>>(doc, "design_adj"), self_knowledge);
    PlantFamily f;
    f.a_spec = specs_from_json(doc, "A", info, info.n(), false);
    f.b_spec = specs_from_json(doc, "B", info, info.m(), true);
    if (!doc.contains("Q") || !doc.contains("R")) config_error("Q and R are required");
    f.q = mat_from_json(doc["Q"], "Q");
    f.r = mat_from_json(doc["R"], "R");
    f.info = std::move(info);
    validate_family(f);
    if (doc.contains("nominal")) {
      const json& nom = doc["nominal"];
      if (!nom.is_object() || !nom.contains("A") || !nom.contains("B")) config_error("nominal needs A and B");
      Mat a = mat_from_json(nom["A"], "nominal.A");
      Mat b = mat_from_json(nom["B"], "nominal.B");
      if (!family_contains(f, a, b)) config_error("nominal plant is not a member of the family");
      f.nominal = make_plant(std::move(a), std::move(b), f.q, f.r, f.info);
    }
    return f;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(e.what());
  }
}

PlantFamily load_family(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open family file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return family_from_json(doc);
}

json family_to_json(const PlantFamily& f) {
  json doc;
  doc["state_dims"] = f.info.state_dims;
  doc["input_dims"] = f.info.input_dims;
  doc["plant_adj"] = f.info.plant_adj;
  doc["design_adj"] = f.info.design_adj;
  bool self = true;
  for (std::size_t i = 0; i < f.info.n_subsystems(); ++i) self = self && f.info.design_adj[i][i] == 1;
  doc["self_knowledge"] = self;
  const std::size_t n = f.n();
  const std::size_t m = f.m();
  json a = json::array();
  json b = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    json ra = json::array();
    json rb = json::array();
    for (std::size_t j = 0; j < n; ++j) ra.push_back(entry_to_json(f.a_entry(i, j)));
    for (std::size_t j = 0; j < m; ++j) rb.push_back(entry_to_json(f.b_entry(i, j)));
    a.push_back(std::move(ra));
    b.push_back(std::move(rb));
  }
  doc["A"] = std::move(a);
  doc["B"] = std::move(b);
  doc["Q"] = mat_to_json(f.q);
  doc["R"] = mat_to_json(f.r);
  if (f.nominal) doc["nominal"] = json{{"A", mat_to_json(f.nominal->a)}, {"B", mat_to_json(f.nominal->b)}};
  return doc;
}

}  // namespace adaptlqr
