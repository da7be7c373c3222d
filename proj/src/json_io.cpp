#include "pnorm/json_io.hpp"

#include <fstream>
#include <utility>

#include <json.hpp>

#include "pnorm/errors.hpp"

namespace pnorm {

namespace {

using nlohmann::json;

json vec_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd vec_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInputError("instance json: expected an array");
  VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& [t, h] : g.edges()) edges.push_back(json::array({t, h}));
  return json{{"n", g.vertex_count()}, {"edges", std::move(edges)}};
}

Graph graph_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const json& e : j.at("edges"))
    edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return Graph(n, std::move(edges));
}

json matrix_to_json(const SparseMatrix& a) {
  json entries = json::array();
  for (const Triplet& t : a.triplets())
    entries.push_back(json::array({t.row, t.col, t.value}));
  return json{{"rows", a.rows()}, {"cols", a.cols()}, {"entries", std::move(entries)}};
}

SparseMatrix matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  std::vector<Triplet> entries;
  for (const json& e : j.at("entries"))
    entries.push_back(
        {e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
  return SparseMatrix::from_triplets(rows, cols, std::move(entries));
}

}  // namespace

std::string instance_to_json_text(const GeneratedInstance& inst) {
  json j;
  j["kind"] = inst.kind;
  if (inst.kind == "flow") {
    j["p"] = inst.flow.p;
    j["graph"] = graph_to_json(inst.flow.graph);
    j["gradient"] = vec_to_json(inst.flow.gradient);
    j["r2"] = vec_to_json(inst.flow.r2);
    j["sp"] = vec_to_json(inst.flow.sp);
    j["demands"] = vec_to_json(inst.demands);
  } else if (inst.kind == "voltage") {
    j["p"] = inst.voltage.p;
    j["graph"] = graph_to_json(inst.voltage.graph);
    j["w2"] = vec_to_json(inst.voltage.w2);
    j["sp"] = vec_to_json(inst.voltage.sp);
    j["demands"] = vec_to_json(inst.voltage.demands);
  } else if (inst.kind == "matrix") {
    j["p"] = inst.matrix.p;
    j["a"] = matrix_to_json(inst.matrix.a);
    j["m"] = matrix_to_json(inst.matrix.m);
    j["n"] = matrix_to_json(inst.matrix.n);
    j["b"] = vec_to_json(inst.matrix.b);
    j["c"] = vec_to_json(inst.matrix.c);
  } else {
    throw InvalidInputError("instance json: unknown kind '" + inst.kind + "'");
  }
  return j.dump(2) + "\n";
}

GeneratedInstance instance_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("instance json: parse failure: ") + e.what());
  }
  try {
    GeneratedInstance out;
    out.kind = j.at("kind").get<std::string>();
    if (out.kind == "flow") {
      out.flow.graph = graph_from_json(j.at("graph"));
      out.flow.gradient = vec_from_json(j.at("gradient"));
      out.flow.r2 = vec_from_json(j.at("r2"));
      out.flow.sp = vec_from_json(j.at("sp"));
      out.flow.p = j.at("p").get<double>();
      out.demands = vec_from_json(j.at("demands"));
      out.flow.validate();
    } else if (out.kind == "voltage") {
      out.voltage.graph = graph_from_json(j.at("graph"));
      out.voltage.w2 = vec_from_json(j.at("w2"));
      out.voltage.sp = vec_from_json(j.at("sp"));
      out.voltage.demands = vec_from_json(j.at("demands"));
      out.voltage.p = j.at("p").get<double>();
      out.voltage.validate();
    } else if (out.kind == "matrix") {
      out.matrix.a = matrix_from_json(j.at("a"));
      out.matrix.m = matrix_from_json(j.at("m"));
      out.matrix.n = matrix_from_json(j.at("n"));
      out.matrix.b = vec_from_json(j.at("b"));
      out.matrix.c = vec_from_json(j.at("c"));
      out.matrix.p = j.at("p").get<double>();
      out.matrix.validate();
    } else {
      throw InvalidInputError("instance json: unknown kind '" + out.kind + "'");
    }
    return out;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("instance json: bad structure: ") + e.what());
  }
}

void save_instance(const GeneratedInstance& inst, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_instance: cannot open " + path);
  f << instance_to_json_text(inst);
  if (!f) throw Error("save_instance: write failure on " + path);
}

GeneratedInstance load_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInputError("load_instance: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return instance_from_json_text(text);
}

}  // namespace pnorm
