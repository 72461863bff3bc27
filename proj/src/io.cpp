#include "ged/io.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ged {

namespace pt = boost::property_tree;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write file: " + path);
  out << content;
}

namespace {

pt::ptree parse_xml(const std::string& text, const char* what) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::Parse, std::string(what) + " parse error at line " +
                                      std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

const pt::ptree* find_child(const pt::ptree& tree, const std::string& name) {
  auto it = tree.find(name);
  return it == tree.not_found() ? nullptr : &it->second;
}

double parse_attr_value(const pt::ptree& attr) {
  for (const auto& [tag, value] : attr) {
    if (tag == "<xmlattr>") continue;
    if (tag == "float" || tag == "int" || tag == "double")
      return std::stod(value.get_value<std::string>());
    throw Error(ErrorCode::Parse, "unsupported GXL attribute type <" + tag + ">");
  }
  throw Error(ErrorCode::Parse, "GXL <attr> without a typed value");
}

}  // namespace

Graph parse_gxl(const std::string& text) {
  pt::ptree tree = parse_xml(text, "GXL");
  const pt::ptree* root = find_child(tree, "gxl");
  const pt::ptree* graph = root ? find_child(*root, "graph") : find_child(tree, "graph");
  if (!graph) throw Error(ErrorCode::Parse, "GXL: no <graph> element");

  std::string id = graph->get<std::string>("<xmlattr>.id", "");
  std::vector<std::string> attr_names;  // declared by the first node, in file order
  std::map<std::string, int> node_index;
  std::vector<std::vector<double>> nodes;
  std::vector<std::pair<int, int>> edges;

  for (const auto& [tag, elem] : *graph) {
    if (tag == "node") {
      std::string nid = elem.get<std::string>("<xmlattr>.id", "");
      std::map<std::string, double> values;
      std::vector<std::string> order;
      for (const auto& [ctag, child] : elem) {
        if (ctag != "attr") continue;
        std::string name = child.get<std::string>("<xmlattr>.name", "");
        values[name] = parse_attr_value(child);
        order.push_back(name);
      }
      if (attr_names.empty()) attr_names = order;
      std::vector<double> vec;
      for (const auto& name : attr_names) {
        auto it = values.find(name);
        if (it == values.end())
          throw Error(ErrorCode::Parse, "GXL node '" + nid + "' missing attribute '" + name + "'");
        vec.push_back(it->second);
      }
      if (!node_index.emplace(nid, static_cast<int>(nodes.size())).second)
        throw Error(ErrorCode::Integrity, "GXL: duplicate node id '" + nid + "'");
      nodes.push_back(std::move(vec));
    } else if (tag == "edge") {
      std::string from = elem.get<std::string>("<xmlattr>.from", "");
      std::string to = elem.get<std::string>("<xmlattr>.to", "");
      auto fi = node_index.find(from);
      auto ti = node_index.find(to);
      if (fi == node_index.end() || ti == node_index.end())
        throw Error(ErrorCode::Integrity,
                    "GXL: edge references unknown node '" + (fi == node_index.end() ? from : to) + "'");
      edges.emplace_back(fi->second, ti->second);
    }
  }
  // Directed edge modes fold to undirected here; make_graph drops the duplicates.
  return make_graph(std::move(nodes), std::move(edges), {}, std::move(id), /*dedupe=*/true);
}

Graph parse_graph_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("JSON graph parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw Error(ErrorCode::Parse, "JSON graph must contain 'nodes' and 'edges'");
  std::vector<std::vector<double>> nodes;
  for (const auto& row : j["nodes"]) {
    std::vector<double> attr;
    for (const auto& v : row) attr.push_back(v.get<double>());
    if (!nodes.empty() && attr.size() != nodes[0].size())
      throw Error(ErrorCode::Dimension, "JSON graph: ragged node attribute vectors");
    nodes.push_back(std::move(attr));
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2)
      throw Error(ErrorCode::Parse, "JSON graph: edge must be a pair");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  std::vector<std::vector<double>> edge_attrs;
  if (j.contains("edge_attrs"))
    for (const auto& row : j["edge_attrs"]) {
      std::vector<double> attr;
      for (const auto& v : row) attr.push_back(v.get<double>());
      edge_attrs.push_back(std::move(attr));
    }
  std::string id = j.value("id", "");
  return make_graph(std::move(nodes), std::move(edges), std::move(edge_attrs), std::move(id));
}

std::string serialize_graph_json(const Graph& g) {
  json j;
  j["nodes"] = g.nodes;
  j["edges"] = json::array();
  for (auto [a, b] : g.edges) j["edges"].push_back({a, b});
  if (!g.edge_attrs.empty()) j["edge_attrs"] = g.edge_attrs;
  if (!g.id.empty()) j["id"] = g.id;
  return j.dump();
}

Graph load_graph_file(const std::string& path) {
  std::string text = read_file(path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".gxl") return parse_gxl(text);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return parse_graph_json(text);
  throw Error(ErrorCode::Usage, "unknown graph file extension: " + path);
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

std::vector<LabeledGraph> load_manifest_tsv(const std::string& manifest_path) {
  std::string text = read_file(manifest_path);
  std::string base = std::filesystem::path(manifest_path).parent_path().string();
  std::vector<LabeledGraph> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorCode::Parse, manifest_path + ":" + std::to_string(lineno) +
                                        ": expected 'path<TAB>label'");
    std::string path = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    out.push_back({load_graph_file(resolve(base, path)), label});
  }
  return out;
}

std::vector<LabeledGraph> load_manifest_cxl(const std::string& cxl_path) {
  pt::ptree tree = parse_xml(read_file(cxl_path), "CXL");
  std::string base = std::filesystem::path(cxl_path).parent_path().string();
  std::vector<LabeledGraph> out;
  // <print file class> entries can sit at any depth.
  std::function<void(const pt::ptree&)> walk = [&](const pt::ptree& node) {
    for (const auto& [tag, child] : node) {
      if (tag == "print") {
        std::string file = child.get<std::string>("<xmlattr>.file", "");
        std::string cls = child.get<std::string>("<xmlattr>.class", "");
        out.push_back({load_graph_file(resolve(base, file)), cls});
      } else if (tag != "<xmlattr>") {
        walk(child);
      }
    }
  };
  walk(tree);
  if (out.empty()) throw Error(ErrorCode::Parse, "CXL: no <print> entries in " + cxl_path);
  return out;
}

std::vector<LabeledGraph> load_manifest(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".cxl") return load_manifest_cxl(path);
  return load_manifest_tsv(path);
}

}  // namespace ged
