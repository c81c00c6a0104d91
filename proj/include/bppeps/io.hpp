#pragma once

#include <string>

#include <json.hpp>

#include "bppeps/bp.hpp"
#include "bppeps/cluster.hpp"
#include "bppeps/peps.hpp"

namespace bppeps {

using nlohmann::json;

// graph: {"vertices": N, "edges": [[u, v], ...]} with u < v
json graph_to_json(const Graph& g);
Graph graph_from_json(const json& j);

// tensor: {"shape": [...], "data": [[re, im], ...]} row-major; round trips
// bit exactly (shortest round-trip double formatting)
json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const json& j);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

// network: {"graph": ..., "bond_dim": D, "phys_dim": d,
//           "tensors": {"<vertex>": tensor, ...}}
json network_to_json(const PepsNetwork& net);
PepsNetwork network_from_json(const json& j);

// messages: {"messages": {"<src>-><dst>": matrix, ...}}
json messages_to_json(const Graph& g, const MessageSet& msgs);
MessageSet messages_from_json(const Graph& g, const json& j);

std::string rational_to_string(const Rational& r);  // "p/q"

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

// FNV-1a over the serialized bytes, for input provenance in reports
std::string content_hash(const std::string& bytes);

}  // namespace bppeps
