#include "bppeps/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bppeps {

json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  return json{{"vertices", g.num_vertices()}, {"edges", edges}};
}

Graph graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
    throw std::invalid_argument("graph json: need vertices and edges");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph json: bad edge");
    const std::size_t u = e[0].get<std::size_t>(), v = e[1].get<std::size_t>();
    if (u >= v) throw std::invalid_argument("graph json: edges must satisfy u < v");
    edges.push_back({u, v});
  }
  return Graph(j.at("vertices").get<std::size_t>(), std::move(edges));
}

json tensor_to_json(const Tensor& t) {
  json data = json::array();
  for (const cplx& x : t.data()) data.push_back({x.real(), x.imag()});
  return json{{"shape", t.shape()}, {"data", data}};
}

Tensor tensor_from_json(const json& j) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data"))
    throw std::invalid_argument("tensor json: need shape and data");
  Tensor t(j.at("shape").get<std::vector<std::size_t>>());
  const auto& data = j.at("data");
  if (data.size() != t.size()) throw std::invalid_argument("tensor json: data size mismatch");
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& x = data[k];
    if (!x.is_array() || x.size() != 2) throw std::invalid_argument("tensor json: bad entry");
    t[k] = cplx{x[0].get<double>(), x[1].get<double>()};
  }
  return t;
}

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (const cplx& x : m.data()) data.push_back({x.real(), x.imag()});
  return json{{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
  Tensor t = tensor_from_json(j);
  if (t.rank() != 2) throw std::invalid_argument("matrix json: rank must be 2");
  Matrix m(t.shape()[0], t.shape()[1]);
  m.data() = t.data();
  return m;
}

json network_to_json(const PepsNetwork& net) {
  json tensors = json::object();
  for (std::size_t v = 0; v < net.site.size(); ++v)
    tensors[std::to_string(v)] = tensor_to_json(net.site[v]);
  return json{{"graph", graph_to_json(net.graph)},
              {"bond_dim", net.bond_dim},
              {"phys_dim", net.phys_dim},
              {"tensors", tensors}};
}

PepsNetwork network_from_json(const json& j) {
  if (!j.is_object() || !j.contains("graph") || !j.contains("bond_dim") ||
      !j.contains("phys_dim") || !j.contains("tensors"))
    throw std::invalid_argument("network json: missing fields");
  PepsNetwork net{graph_from_json(j.at("graph")), j.at("bond_dim").get<std::size_t>(),
                  j.at("phys_dim").get<std::size_t>(), {}};
  for (std::size_t v = 0; v < net.graph.num_vertices(); ++v) {
    const std::string key = std::to_string(v);
    if (!j.at("tensors").contains(key))
      throw std::invalid_argument("network json: missing tensor for vertex " + key);
    net.site.push_back(tensor_from_json(j.at("tensors").at(key)));
  }
  net.validate();
  return net;
}

json messages_to_json(const Graph& g, const MessageSet& msgs) {
  json m = json::object();
  for (std::size_t d = 0; d < msgs.size(); ++d) {
    const std::string key =
        std::to_string(g.dir_src(d)) + "->" + std::to_string(g.dir_dst(d));
    m[key] = matrix_to_json(msgs[d]);
  }
  return json{{"messages", m}};
}

MessageSet messages_from_json(const Graph& g, const json& j) {
  if (!j.is_object() || !j.contains("messages"))
    throw std::invalid_argument("messages json: missing 'messages'");
  MessageSet msgs(2 * g.num_edges());
  std::size_t found = 0;
  for (std::size_t d = 0; d < msgs.size(); ++d) {
    const std::string key =
        std::to_string(g.dir_src(d)) + "->" + std::to_string(g.dir_dst(d));
    if (!j.at("messages").contains(key))
      throw std::invalid_argument("messages json: missing " + key);
    msgs[d] = matrix_from_json(j.at("messages").at(key));
    ++found;
  }
  if (j.at("messages").size() != found)
    throw std::invalid_argument("messages json: unexpected extra entries");
  return msgs;
}

std::string rational_to_string(const Rational& r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::ios_base::failure("write failed: " + path);
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x00000100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace bppeps
