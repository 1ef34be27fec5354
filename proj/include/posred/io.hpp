#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "posred/network.hpp"
#include "posred/ralm.hpp"

namespace posred::io {

using nlohmann::json;

// Row-major nested arrays of finite doubles.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const char* what = "matrix");

// {"A": [[...]], "B": [[...]], "C": [[...]]}
json system_to_json(const StateSpaceSystem& sys);
StateSpaceSystem system_from_json(const json& j);

// Graph file: {"n", "edges": [[from, to, weight], ...], "inputs", "outputs",
// "clusters" (optional), "seed" (optional)}. Node indices are 1-based.
struct NetworkFile {
  WeightedDigraph graph;
  std::vector<int> inputs;
  std::vector<int> outputs;
  std::optional<Clustering> clusters;
  std::optional<std::uint64_t> seed;
};

json network_to_json(const NetworkFile& net);
NetworkFile network_from_json(const json& j);

json clustering_to_json(const Clustering& c);
Clustering clustering_from_json(const json& j);

// {"A": {"zero": [[..]], "nonneg": [[..]]}, "B": ..., "C": ...}
json masks_to_json(const StructureMasks& masks);
StructureMasks masks_from_json(const json& j);

std::string trace_csv(const std::vector<RalmTraceRow>& trace);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace posred::io
