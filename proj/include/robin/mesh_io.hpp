#pragma once

// Line-oriented mesh text format:
//
//   mesh 2d
//   node <id> <x> <y>
//   tri <id> <n1> <n2> <n3>
//   bedge <id> <n1> <n2> <label>
//
// Indices are 0-based; floating point is written with 17 significant digits.

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "robin/geometry.hpp"

namespace robin {

inline void write_mesh(std::ostream& os, const TriangleMesh& mesh) {
  os << "mesh 2d\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.nodes().size(); ++i)
    os << "node " << i << ' ' << mesh.nodes()[i].x << ' ' << mesh.nodes()[i].y << '\n';
  for (std::size_t i = 0; i < mesh.triangles().size(); ++i) {
    const auto& t = mesh.triangles()[i];
    os << "tri " << i << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  for (std::size_t i = 0; i < mesh.boundary_edges().size(); ++i) {
    const auto& e = mesh.boundary_edges()[i];
    os << "bedge " << i << ' ' << e.nodes[0] << ' ' << e.nodes[1] << ' ' << e.label << '\n';
  }
}

inline TriangleMesh read_mesh(std::istream& is) {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ParseError, "mesh line " + std::to_string(lineno) + ": " + why);
  };
  bool header = false;
  std::vector<Point> nodes;
  std::vector<Triangle> tris;
  std::vector<std::pair<std::array<int, 2>, std::string>> bedges;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (!header) {
      std::string dim;
      if (kw != "mesh" || !(ls >> dim) || dim != "2d") fail("expected header 'mesh 2d'");
      header = true;
      continue;
    }
    std::size_t id = 0;
    if (!(ls >> id)) fail("missing id");
    if (kw == "node") {
      Point p;
      if (!(ls >> p.x >> p.y)) fail("bad node record");
      if (id != nodes.size()) fail("node ids must be consecutive from 0");
      nodes.push_back(p);
    } else if (kw == "tri") {
      Triangle t;
      if (!(ls >> t[0] >> t[1] >> t[2])) fail("bad tri record");
      if (id != tris.size()) fail("tri ids must be consecutive from 0");
      tris.push_back(t);
    } else if (kw == "bedge") {
      std::array<int, 2> e;
      std::string label;
      if (!(ls >> e[0] >> e[1] >> label)) fail("bad bedge record");
      if (id != bedges.size()) fail("bedge ids must be consecutive from 0");
      bedges.push_back({e, label});
    } else {
      fail("unknown record '" + kw + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing tokens");
  }
  if (!header) fail("empty input");
  return TriangleMesh::assemble(std::move(nodes), std::move(tris), std::move(bedges));
}

inline void save_mesh(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream os(path);
  ROBIN_THROW_IF(!os, ErrorCode::IoError, "cannot open " + path);
  write_mesh(os, mesh);
}

inline TriangleMesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  ROBIN_THROW_IF(!is, ErrorCode::IoError, "cannot open " + path);
  return read_mesh(is);
}

}  // namespace robin
