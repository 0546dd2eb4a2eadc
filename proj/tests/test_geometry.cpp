#include "fxbem/geometry.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace fxbem;
namespace ft = fxbem::testing;

TEST(LoadOff, SingleTriangle) {
    const auto path = ft::write_text("tri.off",
                                     "OFF\n"
                                     "3 1 0\n"
                                     "0 0 0\n"
                                     "1 0 0\n"
                                     "0 1 0\n"
                                     "3 0 1 2\n");
    const TriangleMesh mesh = load_off(path);
    EXPECT_EQ(mesh.num_vertices(), 3);
    EXPECT_EQ(mesh.num_triangles(), 1);
    EXPECT_NEAR(mesh.triangle_area(0), 0.5, 1e-15);
}

TEST(LoadOff, CommentsAndBlankLines) {
    const auto path = ft::write_text("tri_comments.off",
                                     "# a comment\n"
                                     "OFF\n\n"
                                     "3 1 0\n"
                                     "0 0 0  # origin\n"
                                     "1 0 0\n"
                                     "0 1 0\n"
                                     "\n"
                                     "3 0 1 2\n");
    EXPECT_EQ(load_off(path).num_triangles(), 1);
}

TEST(LoadOff, CubeClosedAndOriented) {
    const TriangleMesh cube = ft::cube_mesh();
    const auto tmp = ft::temp_dir() / "cube.off";
    save_off(cube, tmp.string());
    const TriangleMesh loaded = load_off(tmp.string());
    EXPECT_EQ(loaded.num_vertices(), 8);
    EXPECT_EQ(loaded.num_triangles(), 12);
    const auto topo = loaded.topology();
    EXPECT_TRUE(topo.closed);
    EXPECT_TRUE(topo.consistent);
    EXPECT_GT(ft::signed_volume(loaded), 0.0);  // outward orientation
    EXPECT_NEAR(ft::signed_volume(loaded), 1.0, 1e-12);
}

TEST(LoadOff, TruncatedFileNamesLine) {
    const auto path = ft::write_text("trunc.off",
                                     "OFF\n"
                                     "3 1 0\n"
                                     "0 0 0\n"
                                     "1 0 0\n");
    try {
        load_off(path);
        FAIL() << "expected MeshError";
    } catch (const MeshError& err) {
        EXPECT_NE(std::string(err.what()).find(":4:"), std::string::npos) << err.what();
        EXPECT_NE(std::string(err.what()).find("truncated"), std::string::npos);
    }
}

TEST(LoadOff, BadHeader) {
    const auto path = ft::write_text("bad.off", "PLY\n3 1 0\n");
    EXPECT_THROW(load_off(path), MeshError);
}

TEST(LoadOff, IndexOutOfRange) {
    const auto path = ft::write_text("oob.off",
                                     "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n");
    EXPECT_THROW(load_off(path), MeshError);
}

TEST(LoadOff, DegenerateTriangleNamesId) {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    m.triangles = {{0, 1, 2}};
    try {
        m.validate();
        FAIL() << "expected MeshError";
    } catch (const MeshError& err) {
        EXPECT_NE(std::string(err.what()).find("triangle 0"), std::string::npos);
    }
}

TEST(Validate, FlippedTriangleBreaksOrientation) {
    TriangleMesh cube = ft::cube_mesh();
    std::swap(cube.triangles[0][0], cube.triangles[0][1]);
    EXPECT_THROW(cube.validate(), MeshError);
}

TEST(GenSphere, TriangleCounts) {
    EXPECT_EQ(gen_sphere(0).num_triangles(), 20);
    EXPECT_EQ(gen_sphere(2).num_triangles(), 320);
}

TEST(GenSphere, Level6CountsAndNorms) {
    const TriangleMesh mesh = gen_sphere(6);
    EXPECT_EQ(mesh.num_triangles(), 81920);
    double worst = 0.0;
    for (const auto& v : mesh.vertices) worst = std::max(worst, std::abs(v.norm() - 1.0));
    EXPECT_LE(worst, 1e-12);
    EXPECT_NO_THROW(mesh.validate());
}

TEST(GenSphere, OutwardOrientation) {
    const TriangleMesh mesh = gen_sphere(2);
    const auto topo = mesh.topology();
    EXPECT_TRUE(topo.closed);
    EXPECT_TRUE(topo.consistent);
    EXPECT_GT(ft::signed_volume(mesh), 0.0);
}

TEST(GenSphere, RefinementHalvesMaxEdge) {
    for (int level = 0; level < 4; ++level) {
        auto coarse = panels(gen_sphere(level));
        auto fine   = panels(gen_sphere(level + 1));
        double hc = 0.0, hf = 0.0;
        for (const auto& p : coarse) hc = std::max(hc, p.diameter);
        for (const auto& p : fine) hf = std::max(hf, p.diameter);
        EXPECT_GE(hf / hc, 0.4) << "level " << level;
        EXPECT_LE(hf / hc, 0.6) << "level " << level;
    }
}

TEST(Panels, UnitRightTriangle) {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}};
    const auto ps = panels(m);
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_NEAR((ps[0].center - Vec3(1.0 / 3, 1.0 / 3, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR(ps[0].area, 0.5, 1e-15);
    EXPECT_NEAR(ps[0].diameter, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(ps[0].normal.norm(), 1.0, 1e-12);
    EXPECT_NEAR((ps[0].normal - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(Panels, EquilateralDiameter) {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
    m.triangles = {{0, 1, 2}};
    EXPECT_NEAR(panels(m)[0].diameter, 1.0, 1e-15);
}

TEST(Panels, SphereAreaSum) {
    const auto ps = panels(gen_sphere(3));
    double area = 0.0;
    for (const auto& p : ps) area += p.area;
    EXPECT_NEAR(area, 4.0 * M_PI, 0.02 * 4.0 * M_PI);
}

TEST(Panels, DiameterBoundsPairwiseDistances) {
    const TriangleMesh mesh = ft::blob_mesh(1);
    const auto ps = panels(mesh);
    for (const auto& p : ps) {
        const auto& tri = mesh.triangles[p.index];
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                EXPECT_GE(p.diameter + 1e-15,
                          (mesh.vertices[tri[a]] - mesh.vertices[tri[b]]).norm());
    }
}

// divergence-theorem check: closed surfaces have zero net area vector
TEST(Panels, ClosedMeshAreaVectorCancels) {
    for (const TriangleMesh& mesh : {ft::cube_mesh(), gen_sphere(2), ft::blob_mesh(2)}) {
        const auto ps = panels(mesh);
        Vec3 sum = Vec3::Zero();
        double total = 0.0;
        for (const auto& p : ps) {
            sum += p.area * p.normal;
            total += p.area;
        }
        EXPECT_LE(sum.norm(), 1e-10 * total);
    }
}

TEST(MeshDiameter, SphereIsTwo) {
    EXPECT_NEAR(gen_sphere(3).diameter(), 2.0, 1e-12);
}
