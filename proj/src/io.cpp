#include "posred/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace posred::io {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  const std::string who = std::string(what) + ": ";
  if (!j.is_array()) throw ValidationError(who + "expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j[0].is_array()) throw ValidationError(who + "expected an array of rows");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ValidationError(who + "ragged rows");
    }
    for (Index k = 0; k < cols; ++k) {
      const json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw ValidationError(who + "non-numeric entry");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ValidationError(who + "non-finite entry");
      m(i, k) = d;
    }
  }
  return m;
}

json system_to_json(const StateSpaceSystem& sys) {
  return json{{"A", matrix_to_json(sys.A())},
              {"B", matrix_to_json(sys.B())},
              {"C", matrix_to_json(sys.C())}};
}

StateSpaceSystem system_from_json(const json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("B") || !j.contains("C")) {
    throw ValidationError("system: expected an object with A, B and C");
  }
  Matrix a = matrix_from_json(j["A"], "system.A");
  Matrix b = matrix_from_json(j["B"], "system.B");
  Matrix c = matrix_from_json(j["C"], "system.C");
  // An empty nested array loses its column count; recover it from A.
  if (b.size() == 0) b = Matrix(a.rows(), 0);
  if (c.size() == 0) c = Matrix(0, a.rows());
  return {std::move(a), std::move(b), std::move(c)};
}

json clustering_to_json(const Clustering& c) {
  json out = json::array();
  for (const auto& cluster : c.clusters) out.push_back(cluster);
  return out;
}

Clustering clustering_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("clusters: expected an array of arrays");
  Clustering c;
  for (const json& cluster : j) {
    if (!cluster.is_array()) throw ValidationError("clusters: expected an array of arrays");
    std::vector<int> members;
    for (const json& v : cluster) {
      if (!v.is_number_integer()) throw ValidationError("clusters: node ids must be integers");
      members.push_back(v.get<int>());
    }
    c.clusters.push_back(std::move(members));
  }
  return c;
}

json network_to_json(const NetworkFile& net) {
  json edges = json::array();
  for (const Edge& e : net.graph.edges) edges.push_back(json::array({e.from, e.to, e.weight}));
  json out{{"n", net.graph.node_count},
           {"edges", std::move(edges)},
           {"inputs", net.inputs},
           {"outputs", net.outputs}};
  if (net.clusters) out["clusters"] = clustering_to_json(*net.clusters);
  if (net.seed) out["seed"] = *net.seed;
  return out;
}

namespace {

std::vector<int> int_list(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + ": expected an array");
  std::vector<int> out;
  for (const json& v : j) {
    if (!v.is_number_integer()) throw ValidationError(std::string(what) + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

NetworkFile network_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges")) {
    throw ValidationError("graph: expected an object with n and edges");
  }
  NetworkFile net;
  if (!j["n"].is_number_integer()) throw ValidationError("graph: n must be an integer");
  net.graph.node_count = j["n"].get<int>();
  for (const json& e : j["edges"]) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number()) {
      throw ValidationError("graph: each edge must be [from, to, weight]");
    }
    net.graph.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  net.graph.validate();
  if (j.contains("inputs")) net.inputs = int_list(j["inputs"], "graph.inputs");
  if (j.contains("outputs")) net.outputs = int_list(j["outputs"], "graph.outputs");
  if (j.contains("clusters") && !j["clusters"].is_null()) {
    net.clusters = clustering_from_json(j["clusters"]);
  }
  if (j.contains("seed") && !j["seed"].is_null()) net.seed = j["seed"].get<std::uint64_t>();
  return net;
}

json masks_to_json(const StructureMasks& masks) {
  auto block = [](const BlockMask& m) {
    return json{{"zero", matrix_to_json(m.zero)}, {"nonneg", matrix_to_json(m.nonneg)}};
  };
  return json{{"A", block(masks.a)}, {"B", block(masks.b)}, {"C", block(masks.c)}};
}

StructureMasks masks_from_json(const json& j) {
  auto block = [&](const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("masks: missing ") + key);
    const json& b = j[key];
    return BlockMask{matrix_from_json(b.at("zero"), "masks.zero"),
                     matrix_from_json(b.at("nonneg"), "masks.nonneg")};
  };
  return {block("A"), block("B"), block("C")};
}

std::string trace_csv(const std::vector<RalmTraceRow>& trace) {
  std::ostringstream out;
  out << "outer_iter,L,F,max_violation,rho,eps,distance,subsolver_iters_used\n";
  char buf[512];
  for (const RalmTraceRow& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.outer_iter,
                  r.lagrangian, r.cost, r.max_violation, r.rho, r.eps, r.distance,
                  r.subsolver_iters);
    out << buf;
  }
  return out.str();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace posred::io
