#pragma once

// Finite element matrices and vectors of one update step on a moved mesh.
//
// Velocity dofs are component-blocked (see DofMaps); every velocity matrix is
// block diagonal in the two components except where noted. All integrals use
// the 7-point rule on straight triangles.

#include "mdflow/mesh.hpp"
#include "mdflow/transforms.hpp"

#include <Eigen/Sparse>

namespace mdflow {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class Space { Velocity, Pressure };

/// A discrete field on a moved mesh. mesh_id is the id of the reference mesh
/// and time the time of the configuration the dofs live on.
struct FEFunction {
    Vector values;
    Space space = Space::Velocity;
    double time = 0.0;
    std::uint64_t mesh_id = 0;
};

FEFunction make_velocity(const MovedMesh& mesh, const DofMaps& dofs, Vector values);
FEFunction make_pressure(const MovedMesh& mesh, const DofMaps& dofs, Vector values);

/// Block system
///   [ A  B^T  0 ] [u]   [rhs_u]
///   [ B  0    m ] [p] = [rhs_p]
///   [ 0  m^T  0 ] [mu]  [0    ]
/// The multiplier row is dropped when m is empty.
struct SaddleSystem {
    SparseMatrix A;
    SparseMatrix B;
    Vector m;
    Vector rhs_u;
    Vector rhs_p;
    std::vector<std::uint8_t> boundary_mask;  // per velocity dof

    std::size_t num_velocity() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t num_pressure() const { return static_cast<std::size_t>(B.rows()); }
};

SparseMatrix assemble_mass(const MovedMesh& mesh, const DofMaps& dofs);
/// Scalar P1 mass matrix on the pressure space.
SparseMatrix assemble_pressure_mass(const MovedMesh& mesh, const DofMaps& dofs);
SparseMatrix assemble_stiffness(const MovedMesh& mesh, const DofMaps& dofs);

using VectorFunction = std::function<Vec2(const Vec2&)>;

/// Entry (i, j) = int (beta . grad phi_j) . phi_i. With skew = true the
/// form 1/2 [ ((beta.grad) u, v) - ((beta.grad) v, u) ] is assembled instead.
/// An empty beta gives the zero matrix.
SparseMatrix assemble_convection(const MovedMesh& mesh, const DofMaps& dofs,
                                 const VectorFunction& beta, bool skew = false);

struct DivergenceBlocks {
    SparseMatrix B;  // (k, j) = int psi_k div phi_j
    Vector m;        // m_k = int psi_k
};

DivergenceBlocks assemble_div(const MovedMesh& mesh, const DofMaps& dofs);

/// M(t_n) u_old, the right-hand side of the update step. Throws GeometryError
/// if u_old does not live on old_mesh or the meshes do not share a reference.
Vector cross_mass_rhs(const MovedMesh& old_mesh, const FEFunction& u_old, const MovedMesh& new_mesh,
                      const DofMaps& dofs);

/// Load vector int f . phi_i.
Vector assemble_load(const MovedMesh& mesh, const DofMaps& dofs, const VectorFunction& f);

/// Replaces boundary rows and columns of A by identity, zeroes the matching
/// right-hand side entries and the matching columns of B.
SaddleSystem apply_dirichlet(SaddleSystem system);

// --- evaluation of discrete fields ------------------------------------------

/// Velocity dofs of the nodal interpolant of f at the P2 nodes of mesh.
Vector interpolate_velocity(const MovedMesh& mesh, const DofMaps& dofs, const VectorFunction& f);
Vector interpolate_pressure(const MovedMesh& mesh, const DofMaps& dofs,
                            const std::function<double(const Vec2&)>& f);

Vec2 velocity_at(const DofMaps& dofs, const Vector& u, int triangle, const std::array<double, 3>& bary);
/// (Du)_{ij} = d_j u_i within a triangle.
Mat2 velocity_gradient_at(const MovedMesh& mesh, const DofMaps& dofs, const Vector& u, int triangle,
                          const std::array<double, 3>& bary);
double pressure_at(const DofMaps& dofs, const Vector& p, int triangle, const std::array<double, 3>& bary);

/// A discrete velocity as a field on the moved mesh, located by PointLocator.
/// Points just outside the polygonal boundary use the nearest triangle.
PointwiseField velocity_field(std::shared_ptr<const MovedMesh> mesh, const DofMaps& dofs, Vector u);

}  // namespace mdflow
