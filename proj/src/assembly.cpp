#include "mdflow/assembly.hpp"

#include <cmath>
#include <sstream>

namespace mdflow {

using Triplet = Eigen::Triplet<double>;

FEFunction make_velocity(const MovedMesh& mesh, const DofMaps& dofs, Vector values) {
    if (static_cast<std::size_t>(values.size()) != dofs.num_velocity_dofs) {
        throw InvalidArgument("velocity vector length does not match the dof count");
    }
    return FEFunction{std::move(values), Space::Velocity, mesh.time(), mesh.base->id};
}

FEFunction make_pressure(const MovedMesh& mesh, const DofMaps& dofs, Vector values) {
    if (static_cast<std::size_t>(values.size()) != dofs.num_pressure_dofs) {
        throw InvalidArgument("pressure vector length does not match the dof count");
    }
    return FEFunction{std::move(values), Space::Pressure, mesh.time(), mesh.base->id};
}

namespace {

// Calls visit(geometry, phi, grad_phi, weight) at every quadrature point of
// triangle t, weight already including the area.
template <class Visit>
void for_each_point(const MovedMesh& mesh, std::size_t t, Visit&& visit) {
    const ElementGeometry g(mesh.triangle_vertices(t));
    for (const auto& q : triangle_rule()) {
        const auto phi = p2_values(q.bary);
        const auto grad = p2_gradients(q.bary, g.grad_lambda);
        visit(g, q.bary, phi, grad, q.weight * g.area);
    }
}

// Copies the upper triangle into the lower one, so that assembled matrices
// are symmetric bit for bit.
Eigen::Matrix<double, 6, 6> symmetrized(Eigen::Matrix<double, 6, 6> e) {
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < i; ++j) e(i, j) = e(j, i);
    }
    return e;
}

// Scalar 6x6 element matrices scattered into both velocity components.
template <class Local>
SparseMatrix assemble_blocked(const MovedMesh& mesh, const DofMaps& dofs, Local&& local) {
    std::vector<Triplet> trips;
    trips.reserve(mesh.num_triangles() * 72);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix<double, 6, 6> e = local(t);
        const auto& nodes = dofs.cell_nodes[t];
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    trips.emplace_back(dofs.velocity_dof(nodes[i], c), dofs.velocity_dof(nodes[j], c),
                                       e(i, j));
                }
            }
        }
    }
    SparseMatrix m(dofs.num_velocity_dofs, dofs.num_velocity_dofs);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

}  // namespace

SparseMatrix assemble_mass(const MovedMesh& mesh, const DofMaps& dofs) {
    return assemble_blocked(mesh, dofs, [&](std::size_t t) {
        Eigen::Matrix<double, 6, 6> e = Eigen::Matrix<double, 6, 6>::Zero();
        for_each_point(mesh, t, [&](auto&, auto&, const auto& phi, auto&, double w) {
            for (int i = 0; i < 6; ++i) {
                for (int j = i; j < 6; ++j) e(i, j) += w * phi[i] * phi[j];
            }
        });
        return symmetrized(e);
    });
}

SparseMatrix assemble_pressure_mass(const MovedMesh& mesh, const DofMaps& dofs) {
    std::vector<Triplet> trips;
    trips.reserve(mesh.num_triangles() * 9);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& nodes = dofs.cell_nodes[t];
        Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
        for_each_point(mesh, t, [&](auto&, const auto& bary, auto&, auto&, double w) {
            const auto psi = p1_values(bary);
            for (int i = 0; i < 3; ++i) {
                for (int j = i; j < 3; ++j) e(i, j) += w * psi[i] * psi[j];
            }
        });
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) trips.emplace_back(nodes[i], nodes[j], i <= j ? e(i, j) : e(j, i));
        }
    }
    SparseMatrix m(dofs.num_pressure_dofs, dofs.num_pressure_dofs);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

SparseMatrix assemble_stiffness(const MovedMesh& mesh, const DofMaps& dofs) {
    return assemble_blocked(mesh, dofs, [&](std::size_t t) {
        Eigen::Matrix<double, 6, 6> e = Eigen::Matrix<double, 6, 6>::Zero();
        for_each_point(mesh, t, [&](auto&, auto&, auto&, const auto& grad, double w) {
            for (int i = 0; i < 6; ++i) {
                for (int j = i; j < 6; ++j) e(i, j) += w * grad[i].dot(grad[j]);
            }
        });
        return symmetrized(e);
    });
}

SparseMatrix assemble_convection(const MovedMesh& mesh, const DofMaps& dofs,
                                 const VectorFunction& beta, bool skew) {
    if (!beta) return SparseMatrix(dofs.num_velocity_dofs, dofs.num_velocity_dofs);
    SparseMatrix c = assemble_blocked(mesh, dofs, [&](std::size_t t) {
        Eigen::Matrix<double, 6, 6> e = Eigen::Matrix<double, 6, 6>::Zero();
        for_each_point(mesh, t, [&](const ElementGeometry& g, const auto& bary, const auto& phi,
                                    const auto& grad, double w) {
            const Vec2 b = beta(g.point(bary));
            for (int j = 0; j < 6; ++j) {
                const double adv = w * b.dot(grad[j]);
                for (int i = 0; i < 6; ++i) e(i, j) += adv * phi[i];
            }
        });
        return e;
    });
    if (skew) {
        SparseMatrix ct = c.transpose();
        c = 0.5 * (c - ct);
    }
    return c;
}

DivergenceBlocks assemble_div(const MovedMesh& mesh, const DofMaps& dofs) {
    std::vector<Triplet> trips;
    trips.reserve(mesh.num_triangles() * 36);
    Vector m = Vector::Zero(dofs.num_pressure_dofs);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        Eigen::Matrix<double, 3, 12> e = Eigen::Matrix<double, 3, 12>::Zero();
        Eigen::Vector3d me = Eigen::Vector3d::Zero();
        for_each_point(mesh, t, [&](auto&, const auto& bary, auto&, const auto& grad, double w) {
            const auto psi = p1_values(bary);
            for (int k = 0; k < 3; ++k) {
                me[k] += w * psi[k];
                for (int j = 0; j < 6; ++j) {
                    e(k, j) += w * psi[k] * grad[j].x();
                    e(k, 6 + j) += w * psi[k] * grad[j].y();
                }
            }
        });
        const auto& nodes = dofs.cell_nodes[t];
        for (int k = 0; k < 3; ++k) {
            m[nodes[k]] += me[k];
            for (int c = 0; c < 2; ++c) {
                for (int j = 0; j < 6; ++j) {
                    trips.emplace_back(nodes[k], dofs.velocity_dof(nodes[j], c), e(k, 6 * c + j));
                }
            }
        }
    }
    SparseMatrix b(dofs.num_pressure_dofs, dofs.num_velocity_dofs);
    b.setFromTriplets(trips.begin(), trips.end());
    return {std::move(b), std::move(m)};
}

Vector cross_mass_rhs(const MovedMesh& old_mesh, const FEFunction& u_old, const MovedMesh& new_mesh,
                      const DofMaps& dofs) {
    if (old_mesh.base != new_mesh.base || old_mesh.base->id != new_mesh.base->id) {
        throw GeometryError("cross-mesh mass term needs meshes built from one reference mesh");
    }
    if (u_old.space != Space::Velocity || u_old.mesh_id != old_mesh.base->id
        || std::abs(u_old.time - old_mesh.time()) > 1e-12 * (1.0 + std::abs(old_mesh.time()))) {
        std::ostringstream os;
        os << "velocity labelled t = " << u_old.time << " does not live on the mesh at t = "
           << old_mesh.time();
        throw GeometryError(os.str());
    }
    if (static_cast<std::size_t>(u_old.values.size()) != dofs.num_velocity_dofs) {
        throw InvalidArgument("velocity vector length does not match the dof count");
    }
    return assemble_mass(old_mesh, dofs) * u_old.values;
}

Vector assemble_load(const MovedMesh& mesh, const DofMaps& dofs, const VectorFunction& f) {
    Vector out = Vector::Zero(dofs.num_velocity_dofs);
    if (!f) return out;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& nodes = dofs.cell_nodes[t];
        for_each_point(mesh, t, [&](const ElementGeometry& g, const auto& bary, const auto& phi,
                                    auto&, double w) {
            const Vec2 v = f(g.point(bary));
            for (int i = 0; i < 6; ++i) {
                out[dofs.velocity_dof(nodes[i], 0)] += w * v.x() * phi[i];
                out[dofs.velocity_dof(nodes[i], 1)] += w * v.y() * phi[i];
            }
        });
    }
    return out;
}

SaddleSystem apply_dirichlet(SaddleSystem s) {
    const auto& mask = s.boundary_mask;
    if (mask.size() != s.num_velocity()) throw InvalidArgument("boundary mask has the wrong length");
    s.A.prune([&](Eigen::Index row, Eigen::Index col, double) { return !mask[row] && !mask[col]; });
    std::vector<Triplet> diag;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            diag.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
            s.rhs_u[static_cast<Eigen::Index>(i)] = 0.0;
        }
    }
    SparseMatrix d(s.A.rows(), s.A.cols());
    d.setFromTriplets(diag.begin(), diag.end());
    s.A += d;
    s.B.prune([&](Eigen::Index, Eigen::Index col, double) { return !mask[col]; });
    return s;
}

// ---------------------------------------------------------------------------

Vector interpolate_velocity(const MovedMesh& mesh, const DofMaps& dofs, const VectorFunction& f) {
    Vector out(dofs.num_velocity_dofs);
    for (std::size_t n = 0; n < dofs.num_nodes; ++n) {
        const Vec2 v = f(mesh.fe_node(n));
        out[dofs.velocity_dof(static_cast<int>(n), 0)] = v.x();
        out[dofs.velocity_dof(static_cast<int>(n), 1)] = v.y();
    }
    return out;
}

Vector interpolate_pressure(const MovedMesh& mesh, const DofMaps& dofs,
                            const std::function<double(const Vec2&)>& f) {
    Vector out(dofs.num_pressure_dofs);
    for (std::size_t v = 0; v < dofs.num_pressure_dofs; ++v) out[v] = f(mesh.vertex(v));
    return out;
}

Vec2 velocity_at(const DofMaps& dofs, const Vector& u, int triangle, const std::array<double, 3>& bary) {
    const auto phi = p2_values(bary);
    const auto& nodes = dofs.cell_nodes[triangle];
    Vec2 v = Vec2::Zero();
    for (int i = 0; i < 6; ++i) {
        v.x() += phi[i] * u[dofs.velocity_dof(nodes[i], 0)];
        v.y() += phi[i] * u[dofs.velocity_dof(nodes[i], 1)];
    }
    return v;
}

Mat2 velocity_gradient_at(const MovedMesh& mesh, const DofMaps& dofs, const Vector& u, int triangle,
                          const std::array<double, 3>& bary) {
    const ElementGeometry g(mesh.triangle_vertices(triangle));
    const auto grad = p2_gradients(bary, g.grad_lambda);
    const auto& nodes = dofs.cell_nodes[triangle];
    Mat2 d = Mat2::Zero();
    for (int i = 0; i < 6; ++i) {
        d.row(0) += u[dofs.velocity_dof(nodes[i], 0)] * grad[i].transpose();
        d.row(1) += u[dofs.velocity_dof(nodes[i], 1)] * grad[i].transpose();
    }
    return d;
}

double pressure_at(const DofMaps& dofs, const Vector& p, int triangle, const std::array<double, 3>& bary) {
    const auto& nodes = dofs.cell_nodes[triangle];
    return bary[0] * p[nodes[0]] + bary[1] * p[nodes[1]] + bary[2] * p[nodes[2]];
}

PointwiseField velocity_field(std::shared_ptr<const MovedMesh> mesh, const DofMaps& dofs, Vector u) {
    auto locator = std::make_shared<const PointLocator>(*mesh);
    auto shared_dofs = std::make_shared<const DofMaps>(dofs);
    auto values = std::make_shared<const Vector>(std::move(u));
    auto value = [mesh, locator, shared_dofs, values](const Vec2& x) {
        const auto hit = locator->locate_or_nearest(x);
        return velocity_at(*shared_dofs, *values, hit.triangle, hit.bary);
    };
    auto jacobian = [mesh, locator, shared_dofs, values](const Vec2& x) {
        const auto hit = locator->locate_or_nearest(x);
        return velocity_gradient_at(*mesh, *shared_dofs, *values, hit.triangle, hit.bary);
    };
    return make_pointwise(std::move(value), std::move(jacobian), mesh->time());
}

}  // namespace mdflow
