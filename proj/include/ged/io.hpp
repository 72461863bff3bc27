#pragma once

#include <string>
#include <vector>

#include "ged/graph.hpp"

namespace ged {

/// Parses the GXL subset used by the IAM-style graph repositories:
/// one <graph> with <node id><attr name="..."><float|int>, <edge from to>.
/// Directed edge modes are folded to undirected (duplicates dropped).
Graph parse_gxl(const std::string& text);

/// {"nodes": [[f,...],...], "edges": [[i,j],...], "edge_attrs": optional, "id": optional}
Graph parse_graph_json(const std::string& text);
std::string serialize_graph_json(const Graph& g);

Graph load_graph_file(const std::string& path);  // dispatches on .gxl/.json

/// One `path<TAB>label` per line; blank lines and '#' comments skipped.
/// Relative paths resolve against the manifest's directory.
std::vector<LabeledGraph> load_manifest_tsv(const std::string& manifest_path);

/// IAM CXL split file: <print file="..." class="..."/> entries.
std::vector<LabeledGraph> load_manifest_cxl(const std::string& cxl_path);

std::vector<LabeledGraph> load_manifest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ged
