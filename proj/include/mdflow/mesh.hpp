#pragma once

// Reference triangulation of the unit disk, its image under the flow map, and
// the Taylor-Hood (P2 velocity / P1 pressure) numbering on top of it.
//
// Geometry is affine: every triangle is the straight triangle spanned by its
// three (moved) vertices. Edge-midpoint nodes are advected by the flow as well
// and kept in the MovedMesh, but the P2 Lagrange node of an edge is the
// midpoint of the straight edge.

#include "mdflow/flowmap.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>

namespace mdflow {

struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    /// Vertex pairs (lo, hi), numbered in order of first appearance.
    std::vector<std::array<int, 2>> edges;
    /// Local edge k of a triangle joins local vertices k and (k+1)%3.
    std::vector<std::array<int, 3>> triangle_edges;
    std::vector<std::uint8_t> boundary_vertex;
    std::vector<std::uint8_t> boundary_edge;
    std::vector<Vec2> midpoints;
    double h = 0.0;
    std::uint64_t id = 0;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_edges() const { return edges.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
    /// Quadratic nodes: vertices first, then edge midpoints.
    std::size_t num_nodes() const { return vertices.size() + edges.size(); }
    Vec2 node(std::size_t i) const {
        return i < vertices.size() ? vertices[i] : midpoints[i - vertices.size()];
    }
    std::vector<Vec2> nodes() const;

    double signed_area(std::size_t tri) const;
    double area() const;
};

/// Builds edges, midpoints, boundary flags and the mesh size from a vertex
/// list and positively oriented triangles.
std::shared_ptr<const Mesh> make_mesh(std::vector<Vec2> vertices,
                                      std::vector<std::array<int, 3>> triangles);

inline constexpr std::size_t kDefaultVertexBudget = 2'000'000;

/// Quasi-uniform triangulation of the unit disk by concentric rings, with
/// maximum edge length <= h_target.
std::shared_ptr<const Mesh> build_disk_mesh(double h_target,
                                            std::size_t vertex_budget = kDefaultVertexBudget);

/// Image of a reference mesh under Phi_t. Carries the flow-map sample of all
/// quadratic nodes so that it can be advanced further in time.
struct MovedMesh {
    std::shared_ptr<const Mesh> base;
    FlowMapSample nodes;  // nodes.points are reference nodes, nodes.phi moved ones

    double time() const { return nodes.t; }
    std::size_t num_vertices() const { return base->num_vertices(); }
    std::size_t num_triangles() const { return base->num_triangles(); }
    const Vec2& vertex(std::size_t i) const { return nodes.phi[i]; }
    const Vec2& advected_midpoint(std::size_t edge) const {
        return nodes.phi[base->num_vertices() + edge];
    }
    const Mat2& node_jacobian(std::size_t node) const { return nodes.jac[node]; }

    /// Lagrange node position of the straight-edged P2 element.
    Vec2 fe_node(std::size_t node) const;
    std::vector<Vec2> fe_nodes() const;
    std::array<Vec2, 3> triangle_vertices(std::size_t tri) const;

    double signed_area(std::size_t tri) const;
    double area() const;
};

/// The reference mesh as a MovedMesh at t = 0.
MovedMesh reference_configuration(std::shared_ptr<const Mesh> mesh);

/// Advects every node by the flow map from 0 to t. Throws GeometryError if a
/// triangle is inverted.
MovedMesh move_mesh(std::shared_ptr<const Mesh> mesh, const VelocityField& field, double t,
                    int substeps, double holdall_radius = kDefaultHoldAllRadius);

/// Continues the advection of an already moved mesh from from.time() to t.
MovedMesh move_mesh(const MovedMesh& from, const VelocityField& field, double t, int substeps,
                    double holdall_radius = kDefaultHoldAllRadius);

// --- Taylor-Hood numbering -----------------------------------------------------

struct DofMaps {
    std::size_t num_nodes = 0;
    std::size_t num_velocity_dofs = 0;
    std::size_t num_pressure_dofs = 0;
    /// Local P2 nodes of each triangle: v0, v1, v2, e01, e12, e20.
    std::vector<std::array<int, 6>> cell_nodes;
    std::vector<int> boundary_velocity_dofs;
    std::vector<std::uint8_t> velocity_boundary_mask;

    /// Component-blocked numbering: all x-components, then all y-components.
    int velocity_dof(int node, int component) const {
        return component * static_cast<int>(num_nodes) + node;
    }
};

DofMaps taylor_hood(const Mesh& mesh);

// --- element machinery ---------------------------------------------------------

/// Quadrature point on a triangle in barycentric coordinates; weights sum to 1
/// and are scaled by the triangle area at use.
struct QuadraturePoint {
    std::array<double, 3> bary;
    double weight;
};

/// 7-point rule, exact for polynomials of degree <= 5.
const std::array<QuadraturePoint, 7>& triangle_rule();

/// Affine triangle data.
struct ElementGeometry {
    std::array<Vec2, 3> vertices;
    double area = 0.0;                  // signed
    std::array<Vec2, 3> grad_lambda;    // gradients of barycentric coordinates

    explicit ElementGeometry(const std::array<Vec2, 3>& v);
    Vec2 point(const std::array<double, 3>& bary) const;
    std::array<double, 3> barycentric(const Vec2& x) const;
};

std::array<double, 6> p2_values(const std::array<double, 3>& bary);
std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& bary,
                                 const std::array<Vec2, 3>& grad_lambda);
std::array<double, 3> p1_values(const std::array<double, 3>& bary);

/// Finds the triangle of a MovedMesh containing a point.
class PointLocator {
public:
    explicit PointLocator(const MovedMesh& mesh);

    struct Hit {
        int triangle;
        std::array<double, 3> bary;
    };

    /// Triangle containing x (barycentric tolerance 1e-10), if any.
    std::optional<Hit> locate(const Vec2& x) const;
    /// As locate, but falls back to the closest triangle with clamped
    /// barycentric coordinates for points just outside the polygonal boundary.
    Hit locate_or_nearest(const Vec2& x) const;

private:
    std::vector<int> candidates(const Vec2& x) const;

    const MovedMesh* mesh_;
    Vec2 lo_, hi_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace mdflow
