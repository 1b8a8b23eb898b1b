#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "shapelab/criticality.hpp"
#include "shapelab/optimizer.hpp"
#include "shapelab/reference.hpp"

namespace shapelab::io {

using nlohmann::json;

/// {vertices, triangles, period, boundary: [{component, edges: [[a, b], ...]}],
/// periodic_map}. Cylinder seams are identified by construction, so the
/// periodic map lists pairs of (vertex, image) only for meshes that carry
/// duplicated seam vertices; ours do not and the list is empty.
json mesh_to_json(const geometry::TriMesh& mesh);
geometry::TriMesh mesh_from_json(const json& j);

json eigen_to_json(const eigensolve::EigenCluster& c);
json shape_derivative_to_json(const shapecalc::ShapeDerivativeReport& r);
json fd_to_json(const shapecalc::FdResult& r);
json strong_to_json(const criticality::StrongReport& r);
json criticality_to_json(const criticality::CriticalityReport& r);
json expansion_to_json(const shapecalc::VolumeExpansionReport& r);
json weinberger_to_json(const reference::WeinbergerReport& r);
json ball_to_json(const reference::BallEigenData& b);
json cylinder_to_json(const reference::CylinderEigenData& c);
json flow_record_to_json(const optimizer::FlowRecord& r);
json matrix_to_json(const Eigen::MatrixXd& m);

/// Legacy VTK ASCII UNSTRUCTURED_GRID with optional point scalars. Cylinder
/// meshes are written in the chart (t, x, 0); seam triangles reference the
/// identified vertices, so viewers draw them across the strip.
void write_vtk(std::ostream& os, const geometry::TriMesh& mesh,
               const std::map<std::string, assembly::Vector>& point_scalars = {});
/// Boundary as POLYDATA lines with per-edge cell scalars and vectors.
void write_vtk_boundary(std::ostream& os, const geometry::TriMesh& mesh,
                        const std::map<std::string, std::vector<double>>& cell_scalars = {},
                        const std::map<std::string, std::vector<Vec2>>& point_vectors = {});

/// Writes `j` with two-space indentation and a trailing newline. Output is a
/// pure function of `j`.
void write_json(const std::filesystem::path& path, const json& j);
/// Opens `path` for writing, creating parent directories; throws Internal.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace shapelab::io
