#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fxbem {

using Vec3 = Eigen::Vector3d;

class MeshError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Triangular surface mesh. Triangles index into `vertices` and are expected
// to be consistently oriented (outward for closed meshes).
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }

    double triangle_area(int t) const {
        const auto& tri = triangles[t];
        const Vec3 e1   = vertices[tri[1]] - vertices[tri[0]];
        const Vec3 e2   = vertices[tri[2]] - vertices[tri[0]];
        return 0.5 * e1.cross(e2).norm();
    }

    // Largest axis extent of the vertex bounding box. For the unit sphere
    // this equals the true diameter 2; used to form dimensionless kappa.
    double diameter() const {
        if (vertices.empty()) return 0.0;
        Vec3 lo = vertices.front(), hi = vertices.front();
        for (const auto& v : vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        return (hi - lo).maxCoeff();
    }

    struct Topology {
        bool closed     = false;
        bool consistent = false;  // meaningful only when closed
    };

    // Edge-pairing check: closed means every undirected edge as exactly two
    // incident triangles; consistently oriented means each such edge is
    // traversed once in each direction.
    Topology topology() const {
        std::map<std::pair<int, int>, std::pair<int, int>> edges;  // undirected -> (fwd, bwd)
        for (const auto& tri : triangles) {
            for (int e = 0; e < 3; ++e) {
                const int a = tri[e], b = tri[(e + 1) % 3];
                auto& rec = edges[std::minmax(a, b)];
                (a < b ? rec.first : rec.second) += 1;
            }
        }
        Topology topo;
        topo.closed     = true;
        topo.consistent = true;
        for (const auto& [edge, counts] : edges) {
            if (counts.first + counts.second != 2) topo.closed = false;
            if (counts.first > 1 || counts.second > 1) topo.consistent = false;
        }
        if (!topo.closed) topo.consistent = false;
        return topo;
    }

    void validate() const {
        const int nv = num_vertices();
        for (int t = 0; t < num_triangles(); ++t) {
            for (int k = 0; k < 3; ++k) {
                const int idx = triangles[t][k];
                if (idx < 0 || idx >= nv)
                    throw MeshError("triangle " + std::to_string(t) +
                                    " references vertex " + std::to_string(idx) +
                                    " out of range [0," + std::to_string(nv) + ")");
            }
            if (!(triangle_area(t) > 0.0))
                throw MeshError("degenerate triangle " + std::to_string(t) +
                                " (zero area)");
        }
        const Topology topo = topology();
        if (topo.closed && !topo.consistent)
            throw MeshError("closed mesh is not consistently oriented");
    }
};

// One panel per triangle; doubles as a piecewise-constant DOF.
struct Panel {
    int index = -1;
    Vec3 center = Vec3::Zero();     // centroid; stands in for the Chebyshev center
    double diameter = 0.0;          // max edge length
    double area = 0.0;
    Vec3 normal = Vec3::Zero();     // unit, outward for closed meshes
};

inline std::vector<Panel> panels(const TriangleMesh& mesh) {
    std::vector<Panel> out(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec3& v0  = mesh.vertices[tri[0]];
        const Vec3& v1  = mesh.vertices[tri[1]];
        const Vec3& v2  = mesh.vertices[tri[2]];
        Panel& p   = out[t];
        p.index    = t;
        p.center   = (v0 + v1 + v2) / 3.0;
        p.diameter = std::max({(v1 - v0).norm(), (v2 - v1).norm(), (v0 - v2).norm()});
        const Vec3 cr = (v1 - v0).cross(v2 - v0);
        p.area     = 0.5 * cr.norm();
        if (p.area > 0.0) p.normal = cr / cr.norm();
    }
    return out;
}

// --- ASCII OFF reader ---------------------------------------------------

namespace detail {

inline bool next_content_line(std::istream& in, std::string& line, long& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        const auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) { blank = false; break; }
        if (!blank) return true;
    }
    return false;
}

[[noreturn]] inline void off_fail(const std::string& path, long lineno, const std::string& what) {
    throw MeshError(path + ":" + std::to_string(lineno) + ": " + what);
}

} // namespace detail

inline TriangleMesh load_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open OFF file: " + path);

    std::string line;
    long lineno = 0;
    if (!detail::next_content_line(in, line, lineno))
        detail::off_fail(path, lineno, "empty file, expected OFF header");
    {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag != "OFF") detail::off_fail(path, lineno, "expected OFF header, got '" + tag + "'");
    }

    long nv = 0, nf = 0, ne = 0;
    if (!detail::next_content_line(in, line, lineno))
        detail::off_fail(path, lineno, "missing counts line");
    {
        std::istringstream ss(line);
        if (!(ss >> nv >> nf >> ne) || nv < 0 || nf < 0)
            detail::off_fail(path, lineno, "malformed counts line '" + line + "'");
    }

    TriangleMesh mesh;
    mesh.vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        if (!detail::next_content_line(in, line, lineno))
            detail::off_fail(path, lineno, "truncated file: expected vertex " + std::to_string(i));
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z))
            detail::off_fail(path, lineno, "malformed vertex line '" + line + "'");
        mesh.vertices.emplace_back(x, y, z);
    }
    mesh.triangles.reserve(nf);
    for (long i = 0; i < nf; ++i) {
        if (!detail::next_content_line(in, line, lineno))
            detail::off_fail(path, lineno, "truncated file: expected face " + std::to_string(i));
        std::istringstream ss(line);
        long count = 0;
        if (!(ss >> count))
            detail::off_fail(path, lineno, "malformed face line '" + line + "'");
        if (count != 3)
            detail::off_fail(path, lineno, "only triangular faces supported, got " + std::to_string(count) + " vertices");
        long a, b, c;
        if (!(ss >> a >> b >> c))
            detail::off_fail(path, lineno, "malformed face line '" + line + "'");
        if (a < 0 || a >= nv || b < 0 || b >= nv || c < 0 || c >= nv)
            detail::off_fail(path, lineno, "face index out of range");
        mesh.triangles.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
    }

    try {
        mesh.validate();
    } catch (const MeshError& err) {
        throw MeshError(path + ": " + err.what());
    }
    return mesh;
}

inline void save_off(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write OFF file: " + path);
    out.precision(17);
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
    for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

// --- unit sphere via icosahedral subdivision -----------------------------

// 20 * 4^level triangles, all vertices on the unit sphere, outward oriented.
inline TriangleMesh gen_sphere(int level) {
    if (level < 0) throw MeshError("gen_sphere: level must be >= 0");

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {
        {-1, t, 0},  {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
        {0, -1, t},  {0, 1, t},  {0, -1, -t}, {0, 1, -t},
        {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& v : mesh.vertices) v.normalize();
    mesh.triangles = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = (mesh.vertices[a] + mesh.vertices[b]).normalized();
            const int idx = mesh.num_vertices();
            mesh.vertices.push_back(m);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(mesh.triangles.size() * 4);
        for (const auto& tri : mesh.triangles) {
            const int m01 = mid(tri[0], tri[1]);
            const int m12 = mid(tri[1], tri[2]);
            const int m20 = mid(tri[2], tri[0]);
            next.push_back({tri[0], m01, m20});
            next.push_back({tri[1], m12, m01});
            next.push_back({tri[2], m20, m12});
            next.push_back({m01, m12, m20});
        }
        mesh.triangles = std::move(next);
    }
    return mesh;
}

} // namespace fxbem
