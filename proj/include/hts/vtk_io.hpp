// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hts/mesh.hpp"
#include "hts/types.hpp"

namespace hts {

namespace detail {

inline void vtk_header(std::ofstream& os, const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

inline std::ofstream vtk_open(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(12);
  return os;
}

inline void vtk_points_cells(std::ofstream& os, const std::vector<Vec3>& pts,
                             const std::vector<std::array<int, 4>>& tets) {
  os << "POINTS " << pts.size() << " double\n";
  for (const auto& p : pts) os << p.x() << " " << p.y() << " " << p.z() << "\n";
  os << "CELLS " << tets.size() << " " << tets.size() * 5 << "\n";
  for (const auto& t : tets) os << "4 " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  os << "CELL_TYPES " << tets.size() << "\n";
  for (std::size_t i = 0; i < tets.size(); ++i) os << "10\n";
}

} // namespace detail

/// Legacy ASCII VTK export of the mesh with region tags as cell data.
inline void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
  auto os = detail::vtk_open(path);
  detail::vtk_header(os, "hts mesh");
  detail::vtk_points_cells(os, mesh.vertices, mesh.cells);
  os << "CELL_DATA " << mesh.n_cells() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < mesh.n_cells(); ++c) os << static_cast<int>(mesh.region[c]) << "\n";
}

/// Per-cell vector data (e.g. cell-averaged edge fields) on the full mesh.
inline void write_cell_vectors_vtk(const Mesh& mesh, const std::vector<Vec3>& cell_vec,
                                   const std::string& name, const std::string& path) {
  if (cell_vec.size() != static_cast<std::size_t>(mesh.n_cells()))
    throw std::invalid_argument("write_cell_vectors_vtk: size mismatch");
  auto os = detail::vtk_open(path);
  detail::vtk_header(os, "hts cell field");
  detail::vtk_points_cells(os, mesh.vertices, mesh.cells);
  os << "CELL_DATA " << mesh.n_cells() << "\nVECTORS " << name << " double\n";
  for (const auto& v : cell_vec) os << v.x() << " " << v.y() << " " << v.z() << "\n";
}

/// Per-cell scalar data (e.g. multiplier magnitudes) on the full mesh.
inline void write_cell_scalars_vtk(const Mesh& mesh, const std::vector<double>& cell_val,
                                   const std::string& name, const std::string& path) {
  if (cell_val.size() != static_cast<std::size_t>(mesh.n_cells()))
    throw std::invalid_argument("write_cell_scalars_vtk: size mismatch");
  auto os = detail::vtk_open(path);
  detail::vtk_header(os, "hts cell field");
  detail::vtk_points_cells(os, mesh.vertices, mesh.cells);
  os << "CELL_DATA " << mesh.n_cells() << "\nSCALARS " << name
     << " double 1\nLOOKUP_TABLE default\n";
  for (double v : cell_val) os << v << "\n";
}

namespace detail {

inline void vtk_b_submesh(std::ofstream& os, const Mesh& mesh) {
  std::vector<Vec3> pts(mesh.b_vertex_count());
  for (int i = 0; i < mesh.b_vertex_count(); ++i) pts[i] = mesh.b_vertex_coord(i);
  std::vector<std::array<int, 4>> tets;
  for (int c : mesh.cells_inside_b()) {
    std::array<int, 4> t;
    for (int a = 0; a < 4; ++a) t[a] = mesh.global_to_b_vertex(mesh.cells[c][a]);
    tets.push_back(t);
  }
  vtk_points_cells(os, pts, tets);
}

} // namespace detail

/// Vertex scalar field on the B sub-lattice (level-set function).
inline void write_b_scalar_vtk(const Mesh& mesh, const VecX& phi, const std::string& name,
                               const std::string& path) {
  auto os = detail::vtk_open(path);
  detail::vtk_header(os, "hts B field");
  detail::vtk_b_submesh(os, mesh);
  os << "POINT_DATA " << mesh.b_vertex_count() << "\nSCALARS " << name
     << " double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < mesh.b_vertex_count(); ++i) os << phi[i] << "\n";
}

/// Vertex vector field on the B sub-lattice (descent directions).
inline void write_b_vectors_vtk(const Mesh& mesh, const std::vector<Vec3>& v,
                                const std::string& name, const std::string& path) {
  auto os = detail::vtk_open(path);
  detail::vtk_header(os, "hts B field");
  detail::vtk_b_submesh(os, mesh);
  os << "POINT_DATA " << mesh.b_vertex_count() << "\nVECTORS " << name << " double\n";
  for (const auto& p : v) os << p.x() << " " << p.y() << " " << p.z() << "\n";
}

} // namespace hts
