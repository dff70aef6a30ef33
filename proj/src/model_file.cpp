#include "posgrowth/model_file.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace posgrowth {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::InvalidModel, "model file: " + what);
}

Eigen::MatrixXd matrix_from(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) invalid(std::string(name) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) invalid(std::string(name) + " rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      invalid(std::string(name) + " is ragged");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) invalid(std::string(name) + " has a non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

json matrix_to(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

void check_n(const json& j, Eigen::Index n) {
  if (!j.contains("n")) return;
  if (!j["n"].is_number_integer() || j["n"].get<long>() != n) {
    invalid("\"n\" does not match the matrix dimension");
  }
}

}  // namespace

ControlSet parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("JSON parse error: ") + e.what());
  }
  if (!j.is_object()) invalid("top level must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) invalid("missing \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "segment") {
    if (!j.contains("G") || !j.contains("F") || !j.contains("range")) {
      invalid("segment needs \"G\", \"F\" and \"range\"");
    }
    const Eigen::MatrixXd G = matrix_from(j["G"], "G");
    const Eigen::MatrixXd F = matrix_from(j["F"], "F");
    const json& r = j["range"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
      invalid("\"range\" must be [a, A]");
    }
    check_n(j, G.rows());
    return ControlSet::segment(G, F, r[0].get<double>(), r[1].get<double>());
  }
  if (kind == "vertices") {
    if (!j.contains("matrices") || !j["matrices"].is_array()) invalid("missing \"matrices\"");
    std::vector<MetzlerMatrix> list;
    for (const json& m : j["matrices"]) list.push_back(validate_metzler(matrix_from(m, "matrix")));
    if (!list.empty()) check_n(j, list.front().dim());
    return ControlSet::vertices(std::move(list));
  }
  invalid("unknown kind \"" + kind + "\"");
}

ControlSet read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string model_to_json(const ControlSet& cs) {
  json j;
  j["n"] = cs.dim();
  if (cs.is_segment()) {
    const Segment& s = cs.as_segment();
    j["kind"] = "segment";
    j["G"] = matrix_to(s.G);
    j["F"] = matrix_to(s.F);
    j["range"] = {s.a, s.A};
  } else {
    j["kind"] = "vertices";
    json list = json::array();
    for (const auto& m : cs.vertex_matrices()) list.push_back(matrix_to(m.entries()));
    j["matrices"] = list;
  }
  return j.dump(2);
}

}  // namespace posgrowth
