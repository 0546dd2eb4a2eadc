#pragma once

#include "fxbem/geometry.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fxbem {

// Axis-aligned box with the diameter/distance estimates used by the
// admissibility criterion.
struct BoundingBox {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

    void expand(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    bool empty() const { return (hi - lo).minCoeff() < 0.0; }

    double diameter() const { return (hi - lo).norm(); }

    // componentwise gap norm; 0 when the boxes overlap
    static double distance(const BoundingBox& a, const BoundingBox& b) {
        Vec3 gap;
        for (int d = 0; d < 3; ++d)
            gap[d] = std::max({0.0, b.lo[d] - a.hi[d], a.lo[d] - b.hi[d]});
        return gap.norm();
    }
};

enum class AdmissibilityVariant { Max, Min };

inline AdmissibilityVariant admissibility_variant_from_string(const std::string& s) {
    if (s == "max") return AdmissibilityVariant::Max;
    if (s == "min") return AdmissibilityVariant::Min;
    throw std::invalid_argument("unknown admissibility variant: " + s);
}

inline bool admissible(const BoundingBox& t, const BoundingBox& s, double eta,
                       AdmissibilityVariant variant) {
    const double dist = BoundingBox::distance(t, s);
    const double dt = t.diameter(), ds = s.diameter();
    const double diam = variant == AdmissibilityVariant::Max ? std::max(dt, ds)
                                                             : std::min(dt, ds);
    return eta * dist > diam;
}

struct ClusterNode {
    int begin = 0, end = 0;  // index range into the tree's permutation
    int level = 0;
    int child[2] = {-1, -1};
    BoundingBox bbox;        // covers the panel supports, not just centers

    int size() const { return end - begin; }
    bool is_leaf() const { return child[0] < 0; }
};

// Binary geometric partition of the DOFs. Node index sets are contiguous
// ranges of the recorded permutation (position -> DOF id).
class ClusterTree {
  public:
    ClusterTree(const TriangleMesh& mesh, std::span<const Panel> pans, int n_min)
        : n_min_(n_min) {
        if (pans.empty()) throw std::invalid_argument("ClusterTree: no panels");
        if (n_min < 1) throw std::invalid_argument("ClusterTree: n_min must be >= 1");
        const int n = static_cast<int>(pans.size());
        perm_.resize(n);
        std::iota(perm_.begin(), perm_.end(), 0);

        std::vector<BoundingBox> support(n);
        centers_.resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& tri = mesh.triangles[pans[i].index];
            for (int k = 0; k < 3; ++k) support[i].expand(mesh.vertices[tri[k]]);
            centers_[i] = pans[i].center;
        }
        build(0, n, 0, support);

        inv_perm_.resize(n);
        for (int pos = 0; pos < n; ++pos) inv_perm_[perm_[pos]] = pos;
    }

    const ClusterNode& node(int id) const { return nodes_[id]; }
    const ClusterNode& root() const { return nodes_[0]; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int size() const { return static_cast<int>(perm_.size()); }
    int n_min() const { return n_min_; }

    // position in permuted ordering -> DOF id
    int dof(int pos) const { return perm_[pos]; }
    int position(int dof_id) const { return inv_perm_[dof_id]; }
    std::span<const int> permutation() const { return perm_; }

  private:
    int build(int begin, int end, int level, std::span<const BoundingBox> support) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[id].begin = begin;
        nodes_[id].end   = end;
        nodes_[id].level = level;
        BoundingBox box;
        for (int pos = begin; pos < end; ++pos) {
            const BoundingBox& sb = support[perm_[pos]];
            box.expand(sb.lo);
            box.expand(sb.hi);
        }
        nodes_[id].bbox = box;

        if (end - begin <= n_min_) return id;

        // longest axis of the support box; ties resolved in x,y,z order
        const Vec3 extent = box.hi - box.lo;
        int axis = 0;
        for (int d = 1; d < 3; ++d)
            if (extent[d] > extent[axis]) axis = d;

        // median split on panel centers, duplicates broken by DOF index
        const int mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                         [&](int a, int b) {
                             const double ca = centers_[a][axis], cb = centers_[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        const int left  = build(begin, mid, level + 1, support);
        const int right = build(mid, end, level + 1, support);
        nodes_[id].child[0] = left;
        nodes_[id].child[1] = right;
        return id;
    }

    int n_min_;
    std::vector<ClusterNode> nodes_;
    std::vector<int> perm_, inv_perm_;
    std::vector<Vec3> centers_;
};

inline bool admissible(const ClusterNode& t, const ClusterNode& s, double eta,
                       AdmissibilityVariant variant) {
    return admissible(t.bbox, s.bbox, eta, variant);
}

struct BlockNode {
    enum class Status { Admissible, Dense, Subdivided };
    int row = -1, col = -1;  // cluster node ids in the row/col trees
    int level = 0;
    Status status = Status::Dense;
    std::vector<int> children;
};

// Block partition P_{IxJ}: leaves are either admissible (far-field) or
// dense (near-field, min cluster at leaf size).
class BlockClusterTree {
  public:
    BlockClusterTree(std::shared_ptr<const ClusterTree> rows,
                     std::shared_ptr<const ClusterTree> cols, double eta,
                     AdmissibilityVariant variant)
        : rows_(std::move(rows)), cols_(std::move(cols)), eta_(eta), variant_(variant) {
        if (eta <= 0.0) throw std::invalid_argument("BlockClusterTree: eta must be > 0");
        build(0, 0, 0);
    }

    const ClusterTree& row_tree() const { return *rows_; }
    const ClusterTree& col_tree() const { return *cols_; }
    std::shared_ptr<const ClusterTree> row_tree_ptr() const { return rows_; }
    std::shared_ptr<const ClusterTree> col_tree_ptr() const { return cols_; }
    double eta() const { return eta_; }
    AdmissibilityVariant variant() const { return variant_; }

    const BlockNode& node(int id) const { return nodes_[id]; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    std::span<const int> leaves() const { return leaves_; }

    const ClusterNode& row_cluster(const BlockNode& b) const { return rows_->node(b.row); }
    const ClusterNode& col_cluster(const BlockNode& b) const { return cols_->node(b.col); }

    int num_admissible_leaves() const {
        int n = 0;
        for (int id : leaves_)
            if (nodes_[id].status == BlockNode::Status::Admissible) ++n;
        return n;
    }

    // JSON dump of the partition for visual inspection
    template <class Json>
    Json debug_json() const {
        Json blocks = Json::array();
        for (int id : leaves_) {
            const BlockNode& b = nodes_[id];
            const ClusterNode& t = row_cluster(b);
            const ClusterNode& s = col_cluster(b);
            blocks.push_back({{"block", id},
                              {"row_begin", t.begin},
                              {"row_size", t.size()},
                              {"col_begin", s.begin},
                              {"col_size", s.size()},
                              {"level", b.level},
                              {"admissible", b.status == BlockNode::Status::Admissible}});
        }
        return blocks;
    }

  private:
    int build(int rowId, int colId, int level) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[id].row   = rowId;
        nodes_[id].col   = colId;
        nodes_[id].level = level;

        const ClusterNode& t = rows_->node(rowId);
        const ClusterNode& s = cols_->node(colId);
        if (admissible(t, s, eta_, variant_)) {
            nodes_[id].status = BlockNode::Status::Admissible;
            leaves_.push_back(id);
        } else if (t.is_leaf() || s.is_leaf()) {
            nodes_[id].status = BlockNode::Status::Dense;
            leaves_.push_back(id);
        } else {
            nodes_[id].status = BlockNode::Status::Subdivided;
            std::vector<int> kids;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    kids.push_back(build(t.child[a], s.child[b], level + 1));
            nodes_[id].children = std::move(kids);
        }
        return id;
    }

    std::shared_ptr<const ClusterTree> rows_, cols_;
    double eta_;
    AdmissibilityVariant variant_;
    std::vector<BlockNode> nodes_;
    std::vector<int> leaves_;
};

} // namespace fxbem
