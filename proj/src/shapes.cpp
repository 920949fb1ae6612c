#include "simspec/shapes.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

namespace simspec::shapes {

namespace {

Points to_points(const std::vector<Eigen::RowVector3d>& pts) {
    Points out(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t k = 0; k < pts.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = pts[k];
    return out;
}

Faces to_faces(const std::vector<Eigen::RowVector3i>& tris) {
    Faces out(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t f = 0; f < tris.size(); ++f) out.row(static_cast<Eigen::Index>(f)) = tris[f];
    return out;
}

void icosahedron_raw(std::vector<Eigen::RowVector3d>& pts, std::vector<Eigen::RowVector3i>& tris) {
    const double t = std::numbers::phi;
    pts = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
           {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    tris = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
            {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
}

} // namespace

TriMesh icosahedron(double edge) {
    std::vector<Eigen::RowVector3d> pts;
    std::vector<Eigen::RowVector3i> tris;
    icosahedron_raw(pts, tris);
    // Raw edge length is 2.
    for (auto& p : pts) p *= edge / 2.0;
    return make_trimesh(to_points(pts), to_faces(tris));
}

TriMesh icosphere(int level, double radius) {
    std::vector<Eigen::RowVector3d> pts;
    std::vector<Eigen::RowVector3i> tris;
    icosahedron_raw(pts, tris);
    for (auto& p : pts) p.normalize();

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            pts.push_back((pts[a] + pts[b]).normalized());
            const int idx = static_cast<int>(pts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Eigen::RowVector3i> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const int ab = mid(t(0), t(1)), bc = mid(t(1), t(2)), ca = mid(t(2), t(0));
            next.emplace_back(t(0), ab, ca);
            next.emplace_back(t(1), bc, ab);
            next.emplace_back(t(2), ca, bc);
            next.emplace_back(ab, bc, ca);
        }
        tris = std::move(next);
    }
    for (auto& p : pts) p *= radius;
    return make_trimesh(to_points(pts), to_faces(tris));
}

TriMesh cylinder(double radius, double height, int n_around, int n_along) {
    if (n_around < 3 || n_along < 1)
        throw Error(ErrorCode::InvalidArgument, "cylinder needs n_around >= 3 and n_along >= 1");
    std::vector<Eigen::RowVector3d> pts;
    for (int j = 0; j <= n_along; ++j) {
        const double z = -height / 2 + height * j / n_along;
        // Alternate rings are offset by half a step for better-shaped triangles.
        const double shift = (j % 2) * 0.5;
        for (int i = 0; i < n_around; ++i) {
            const double a = 2 * std::numbers::pi * (i + shift) / n_around;
            pts.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
        }
    }
    std::vector<Eigen::RowVector3i> tris;
    for (int j = 0; j < n_along; ++j) {
        const int r0 = j * n_around, r1 = (j + 1) * n_around;
        for (int i = 0; i < n_around; ++i) {
            const int i1 = (i + 1) % n_around;
            if (j % 2 == 0) {
                tris.emplace_back(r0 + i, r0 + i1, r1 + i);
                tris.emplace_back(r0 + i1, r1 + i1, r1 + i);
            } else {
                tris.emplace_back(r0 + i, r1 + i1, r1 + i);
                tris.emplace_back(r0 + i, r0 + i1, r1 + i1);
            }
        }
    }
    return make_trimesh(to_points(pts), to_faces(tris));
}

TriMesh grid(double width, double depth, int nx, int ny, double x0, double y0) {
    if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "grid needs nx, ny >= 1");
    std::vector<Eigen::RowVector3d> pts;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            pts.emplace_back(x0 + width * i / nx, y0 + depth * j / ny, 0.0);
    std::vector<Eigen::RowVector3i> tris;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int a = j * (nx + 1) + i, b = a + 1, c = a + nx + 1, d = c + 1;
            if ((i + j) % 2 == 0) {
                tris.emplace_back(a, b, d);
                tris.emplace_back(a, d, c);
            } else {
                tris.emplace_back(a, b, c);
                tris.emplace_back(b, d, c);
            }
        }
    return make_trimesh(to_points(pts), to_faces(tris));
}

} // namespace simspec::shapes
