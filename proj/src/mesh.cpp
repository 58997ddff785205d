#include "mdflow/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace mdflow {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

double signed_area_of(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Mesh

std::vector<Vec2> Mesh::nodes() const {
    std::vector<Vec2> out(vertices);
    out.insert(out.end(), midpoints.begin(), midpoints.end());
    return out;
}

double Mesh::signed_area(std::size_t tri) const {
    const auto& t = triangles[tri];
    return signed_area_of(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

double Mesh::area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < triangles.size(); ++i) a += signed_area(i);
    return a;
}

std::shared_ptr<const Mesh> make_mesh(std::vector<Vec2> vertices,
                                      std::vector<std::array<int, 3>> triangles) {
    auto mesh = std::make_shared<Mesh>();
    mesh->vertices = std::move(vertices);
    mesh->triangles = std::move(triangles);
    mesh->id = next_mesh_id.fetch_add(1);

    std::map<std::pair<int, int>, int> edge_index;
    std::vector<int> edge_count;
    mesh->triangle_edges.resize(mesh->triangles.size());
    for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
        const auto& tri = mesh->triangles[t];
        for (int v : tri) {
            if (v < 0 || static_cast<std::size_t>(v) >= mesh->vertices.size()) {
                throw InvalidArgument("triangle references a missing vertex");
            }
        }
        if (!(mesh->signed_area(t) > 0.0)) {
            std::ostringstream os;
            os << "triangle " << t << " is not positively oriented";
            throw GeometryError(os.str());
        }
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k];
            const int b = tri[(k + 1) % 3];
            const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
            auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(mesh->edges.size()));
            if (inserted) {
                mesh->edges.push_back({key.first, key.second});
                edge_count.push_back(0);
            }
            ++edge_count[it->second];
            mesh->triangle_edges[t][k] = it->second;
        }
    }

    mesh->boundary_vertex.assign(mesh->vertices.size(), 0);
    mesh->boundary_edge.assign(mesh->edges.size(), 0);
    mesh->midpoints.resize(mesh->edges.size());
    double h = 0.0;
    for (std::size_t e = 0; e < mesh->edges.size(); ++e) {
        const auto [a, b] = mesh->edges[e];
        if (edge_count[e] > 2) throw GeometryError("edge shared by more than two triangles");
        if (edge_count[e] == 1) {
            mesh->boundary_edge[e] = 1;
            mesh->boundary_vertex[a] = 1;
            mesh->boundary_vertex[b] = 1;
        }
        mesh->midpoints[e] = 0.5 * (mesh->vertices[a] + mesh->vertices[b]);
        h = std::max(h, (mesh->vertices[a] - mesh->vertices[b]).norm());
    }
    mesh->h = h;
    return mesh;
}

namespace {

// Vertices of ring k (k >= 1) sit at radius k/n, 6k per ring.
struct RingLayout {
    int rings;
    std::vector<int> first;  // index of the first vertex of each ring
};

std::vector<std::array<int, 3>> stitch_rings(int inner_first, int inner_count, int outer_first,
                                             int outer_count, const std::vector<Vec2>& v) {
    std::vector<std::array<int, 3>> tris;
    tris.reserve(inner_count + outer_count);
    int i = 0, j = 0;
    auto inner = [&](int k) { return inner_first + (k % inner_count); };
    auto outer = [&](int k) { return outer_first + (k % outer_count); };
    while (i < inner_count || j < outer_count) {
        const double s_inner = double(i + 1) / inner_count;
        const double s_outer = double(j + 1) / outer_count;
        std::array<int, 3> tri;
        if (j >= outer_count || (i < inner_count && s_inner <= s_outer)) {
            tri = {inner(i), outer(j), inner(i + 1)};
            ++i;
        } else {
            tri = {inner(i), outer(j), outer(j + 1)};
            ++j;
        }
        if (signed_area_of(v[tri[0]], v[tri[1]], v[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
        tris.push_back(tri);
    }
    return tris;
}

std::pair<std::vector<Vec2>, std::vector<std::array<int, 3>>> ring_disk(int n) {
    std::vector<Vec2> v;
    std::vector<std::array<int, 3>> tris;
    v.emplace_back(0.0, 0.0);
    std::vector<int> first(n + 1, 0);
    for (int k = 1; k <= n; ++k) {
        first[k] = static_cast<int>(v.size());
        const int m = 6 * k;
        const double r = double(k) / n;
        for (int j = 0; j < m; ++j) {
            const double a = 2.0 * std::numbers::pi * j / m;
            v.emplace_back(r * std::cos(a), r * std::sin(a));
        }
    }
    for (int j = 0; j < 6; ++j) {
        std::array<int, 3> tri{0, first[1] + j, first[1] + (j + 1) % 6};
        tris.push_back(tri);
    }
    for (int k = 2; k <= n; ++k) {
        auto ring = stitch_rings(first[k - 1], 6 * (k - 1), first[k], 6 * k, v);
        tris.insert(tris.end(), ring.begin(), ring.end());
    }
    // Boundary vertices land exactly on the unit circle.
    for (int j = first[n]; j < static_cast<int>(v.size()); ++j) v[j].normalize();
    return {std::move(v), std::move(tris)};
}

double max_edge(const std::vector<Vec2>& v, const std::vector<std::array<int, 3>>& tris) {
    double h = 0.0;
    for (const auto& t : tris) {
        for (int k = 0; k < 3; ++k) h = std::max(h, (v[t[k]] - v[t[(k + 1) % 3]]).norm());
    }
    return h;
}

}  // namespace

std::shared_ptr<const Mesh> build_disk_mesh(double h_target, std::size_t vertex_budget) {
    if (!(h_target > 0.0 && h_target < 1.0)) {
        throw InvalidArgument("mesh size must lie in (0, 1)");
    }
    int n = std::max(1, static_cast<int>(std::ceil(1.0 / h_target)));
    for (;;) {
        const std::size_t count = 1 + 3 * static_cast<std::size_t>(n) * (n + 1);
        if (count > vertex_budget) {
            std::ostringstream os;
            os << "mesh size " << h_target << " needs " << count
               << " vertices, above the budget of " << vertex_budget;
            throw ResourceError(os.str());
        }
        auto [v, tris] = ring_disk(n);
        if (max_edge(v, tris) <= h_target) return make_mesh(std::move(v), std::move(tris));
        ++n;
    }
}

// ---------------------------------------------------------------------------
// MovedMesh

Vec2 MovedMesh::fe_node(std::size_t node) const {
    const std::size_t nv = base->num_vertices();
    if (node < nv) return nodes.phi[node];
    const auto [a, b] = base->edges[node - nv];
    return 0.5 * (nodes.phi[a] + nodes.phi[b]);
}

std::vector<Vec2> MovedMesh::fe_nodes() const {
    std::vector<Vec2> out(base->num_nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fe_node(i);
    return out;
}

std::array<Vec2, 3> MovedMesh::triangle_vertices(std::size_t tri) const {
    const auto& t = base->triangles[tri];
    return {nodes.phi[t[0]], nodes.phi[t[1]], nodes.phi[t[2]]};
}

double MovedMesh::signed_area(std::size_t tri) const {
    const auto v = triangle_vertices(tri);
    return signed_area_of(v[0], v[1], v[2]);
}

double MovedMesh::area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < num_triangles(); ++i) a += signed_area(i);
    return a;
}

MovedMesh reference_configuration(std::shared_ptr<const Mesh> mesh) {
    MovedMesh m;
    const auto pts = mesh->nodes();
    m.nodes.t = 0.0;
    m.nodes.points = pts;
    m.nodes.phi = pts;
    m.nodes.jac.assign(pts.size(), Mat2::Identity());
    m.nodes.jac_dt.assign(pts.size(), Mat2::Zero());
    m.base = std::move(mesh);
    return m;
}

namespace {

void check_orientation(const MovedMesh& m) {
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        if (!(m.signed_area(t) > 0.0)) {
            std::ostringstream os;
            os << "triangle " << t << " inverted at t = " << m.time();
            throw GeometryError(os.str());
        }
    }
}

}  // namespace

MovedMesh move_mesh(std::shared_ptr<const Mesh> mesh, const VelocityField& field, double t,
                    int substeps, double holdall_radius) {
    MovedMesh m;
    const auto pts = mesh->nodes();
    m.nodes = advance_flowmap(field, pts, t, substeps, holdall_radius);
    m.base = std::move(mesh);
    check_orientation(m);
    return m;
}

MovedMesh move_mesh(const MovedMesh& from, const VelocityField& field, double t, int substeps,
                    double holdall_radius) {
    MovedMesh m;
    m.base = from.base;
    m.nodes = advance_flowmap(field, from.nodes, t, substeps, holdall_radius);
    check_orientation(m);
    return m;
}

// ---------------------------------------------------------------------------
// Taylor-Hood

DofMaps taylor_hood(const Mesh& mesh) {
    DofMaps d;
    const int nv = static_cast<int>(mesh.num_vertices());
    d.num_nodes = mesh.num_nodes();
    d.num_velocity_dofs = 2 * d.num_nodes;
    d.num_pressure_dofs = mesh.num_vertices();
    d.cell_nodes.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& e = mesh.triangle_edges[t];
        d.cell_nodes[t] = {tri[0], tri[1], tri[2], nv + e[0], nv + e[1], nv + e[2]};
    }
    d.velocity_boundary_mask.assign(d.num_velocity_dofs, 0);
    auto mark = [&](int node) {
        for (int c = 0; c < 2; ++c) d.velocity_boundary_mask[d.velocity_dof(node, c)] = 1;
    };
    for (int v = 0; v < nv; ++v) {
        if (mesh.boundary_vertex[v]) mark(v);
    }
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        if (mesh.boundary_edge[e]) mark(nv + static_cast<int>(e));
    }
    for (std::size_t i = 0; i < d.num_velocity_dofs; ++i) {
        if (d.velocity_boundary_mask[i]) d.boundary_velocity_dofs.push_back(static_cast<int>(i));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Element machinery

const std::array<QuadraturePoint, 7>& triangle_rule() {
    static const std::array<QuadraturePoint, 7> rule = [] {
        const double s = std::sqrt(15.0);
        const double a1 = (6.0 - s) / 21.0, b1 = 1.0 - 2.0 * a1, w1 = (155.0 - s) / 1200.0;
        const double a2 = (6.0 + s) / 21.0, b2 = 1.0 - 2.0 * a2, w2 = (155.0 + s) / 1200.0;
        return std::array<QuadraturePoint, 7>{{
            {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
            {{b1, a1, a1}, w1},
            {{a1, b1, a1}, w1},
            {{a1, a1, b1}, w1},
            {{b2, a2, a2}, w2},
            {{a2, b2, a2}, w2},
            {{a2, a2, b2}, w2},
        }};
    }();
    return rule;
}

ElementGeometry::ElementGeometry(const std::array<Vec2, 3>& v) : vertices(v) {
    area = signed_area_of(v[0], v[1], v[2]);
    const double inv2a = 1.0 / (2.0 * area);
    for (int k = 0; k < 3; ++k) {
        const Vec2& p = v[(k + 1) % 3];
        const Vec2& q = v[(k + 2) % 3];
        grad_lambda[k] = Vec2(p.y() - q.y(), q.x() - p.x()) * inv2a;
    }
}

Vec2 ElementGeometry::point(const std::array<double, 3>& b) const {
    return b[0] * vertices[0] + b[1] * vertices[1] + b[2] * vertices[2];
}

std::array<double, 3> ElementGeometry::barycentric(const Vec2& x) const {
    std::array<double, 3> b;
    for (int k = 0; k < 3; ++k) b[k] = grad_lambda[k].dot(x - vertices[(k + 1) % 3]);
    return b;
}

std::array<double, 6> p2_values(const std::array<double, 3>& l) {
    return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
            4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l,
                                 const std::array<Vec2, 3>& g) {
    return {(4 * l[0] - 1) * g[0],
            (4 * l[1] - 1) * g[1],
            (4 * l[2] - 1) * g[2],
            4 * (l[1] * g[0] + l[0] * g[1]),
            4 * (l[2] * g[1] + l[1] * g[2]),
            4 * (l[0] * g[2] + l[2] * g[0])};
}

std::array<double, 3> p1_values(const std::array<double, 3>& l) { return l; }

// ---------------------------------------------------------------------------
// PointLocator

PointLocator::PointLocator(const MovedMesh& mesh) : mesh_(&mesh) {
    lo_ = Vec2::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        lo_ = lo_.cwiseMin(mesh.vertex(v));
        hi_ = hi_.cwiseMax(mesh.vertex(v));
    }
    const int n = std::max(1, static_cast<int>(std::sqrt(double(mesh.num_triangles()) / 2.0)));
    nx_ = ny_ = n;
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto v = mesh.triangle_vertices(t);
        Vec2 a = v[0].cwiseMin(v[1]).cwiseMin(v[2]);
        Vec2 b = v[0].cwiseMax(v[1]).cwiseMax(v[2]);
        const int i0 = std::clamp(int((a.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
        const int i1 = std::clamp(int((b.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
        const int j0 = std::clamp(int((a.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
        const int j1 = std::clamp(int((b.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) buckets_[i * ny_ + j].push_back(static_cast<int>(t));
        }
    }
}

std::vector<int> PointLocator::candidates(const Vec2& x) const {
    const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
    const int i = std::clamp(int((x.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
    const int j = std::clamp(int((x.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
    return buckets_[i * ny_ + j];
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& x) const {
    for (int t : candidates(x)) {
        ElementGeometry g(mesh_->triangle_vertices(t));
        const auto b = g.barycentric(x);
        if (b[0] >= -1e-10 && b[1] >= -1e-10 && b[2] >= -1e-10) return Hit{t, b};
    }
    return std::nullopt;
}

PointLocator::Hit PointLocator::locate_or_nearest(const Vec2& x) const {
    if (auto hit = locate(x)) return *hit;
    Hit best{-1, {}};
    double best_violation = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
        ElementGeometry g(mesh_->triangle_vertices(t));
        const auto b = g.barycentric(x);
        const double violation = -std::min({b[0], b[1], b[2]});
        if (violation < best_violation) {
            best_violation = violation;
            best = Hit{static_cast<int>(t), b};
        }
    }
    double sum = 0.0;
    for (double& l : best.bary) {
        l = std::max(l, 0.0);
        sum += l;
    }
    for (double& l : best.bary) l /= sum;
    return best;
}

}  // namespace mdflow
