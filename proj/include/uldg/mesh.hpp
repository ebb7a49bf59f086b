#pragma once

#include <compare>
#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "uldg/geometry.hpp"

namespace uldg {

struct CellKey {
    int level = 0;
    int i = 0;
    int j = 0;

    auto operator<=>(const CellKey&) const = default;
};

struct Domain {
    Point lo{-2.0, -2.0};
    Point hi{2.0, 2.0};
};

enum class Direction : int { West = 0, East = 1, South = 2, North = 3 };

/// Quadtree over a uniform base grid of n x n squares. Only leaves are stored;
/// a node is internal iff it is not a leaf and none of its ancestors is one.
class QuadMesh {
public:
    QuadMesh(int n, Domain domain = {});

    int base_n() const { return n_; }
    const Domain& domain() const { return domain_; }
    double base_h() const { return h0_; }
    const std::set<CellKey>& leaves() const { return leaves_; }
    bool is_leaf(const CellKey& k) const { return leaves_.count(k) != 0; }
    int max_level() const;

    Box bounds(const CellKey& k) const;
    double side(const CellKey& k) const;

    void refine(const CellKey& leaf);

    /// Leaves sharing a positive-length part of the given edge of `leaf`.
    /// Empty on the domain boundary.
    std::vector<CellKey> edge_neighbors(const CellKey& leaf, Direction dir) const;

    /// Leaves whose closed box intersects the closed box `region`.
    std::vector<CellKey> leaves_touching(const Box& region) const;

    /// Refine until edge-adjacent leaves differ by at most one level.
    void balance();
    bool is_balanced() const;

private:
    bool in_range(int level, int i, int j) const;
    void collect_facing(const CellKey& node, Direction toward_us, std::vector<CellKey>& out) const;
    void collect_touching(const CellKey& node, const Box& region, double tol, std::vector<CellKey>& out) const;

    int n_;
    Domain domain_;
    double h0_;
    std::set<CellKey> leaves_;
};

QuadMesh build_initial_mesh(int n, Domain domain = {});

/// Refine every leaf meeting the interface, together with all leaves touching
/// it, `levels` times; rebalance after each round.
void refine_interface_band(QuadMesh& mesh, const LevelSetInterface& ls, int levels);

enum class MacroKind { Plain, MergedInterface };

struct MacroElement {
    std::vector<CellKey> members;
    CellKey representative;
    MacroKind kind = MacroKind::Plain;
    Box bounds;            ///< bounding box of the union
    double h = 0.0;        ///< largest member side
    double area = 0.0;
    bool cut = false;
    std::array<bool, 2> has_side{};
    double eta = 0.0;
    Segment chord{};
};

struct LeafRecord {
    Box box;
    CutTopology topo;
    int macro = -1;
};

struct InducedMesh {
    QuadMesh quad;
    LevelSetInterface level_set;
    double delta0 = 0.25;
    std::map<CellKey, LeafRecord> leaves;
    std::vector<MacroElement> macros;

    const MacroElement& macro_of(const CellKey& k) const { return macros.at(leaves.at(k).macro); }
    double total_area() const;
};

/// Large-element verdict for a union of leaves, measured on the maximal
/// straight segments of its boundary.
struct UnionLargeness {
    std::array<bool, 2> large{};
    double score = 1.0; ///< smallest nonzero side fraction over boundary segments
    std::vector<Segment> boundary;
};

UnionLargeness union_largeness(const QuadMesh& mesh, const std::vector<CellKey>& members,
                               const LevelSetInterface& ls, double delta0);

/// Merge small cut leaves into macro-elements that are large w.r.t. both sides.
/// A small cut leaf absorbs up to three neighbouring macro-elements; among the
/// admissible unions with the fewest additions the one with the smallest
/// deviation wins. Throws ImproperCut when a leaf is not properly cut and
/// MergeFailure when no admissible union exists.
InducedMesh build_induced_mesh(QuadMesh mesh, const LevelSetInterface& ls, double delta0 = 0.25);

enum class FaceKind { Interior, InterfaceArc, Boundary };

const char* to_string(FaceKind k);

/// Face of the induced mesh restricted to one material side. The normal points
/// out of the minus owner; on the interface it is the outer normal of Omega_1
/// and both owners are the same macro-element (minus = Inner copy).
struct Face {
    FaceKind kind = FaceKind::Interior;
    Side side = Side::Inner;
    Segment segment{};
    std::vector<InterfaceArc> arcs;
    int minus = -1;
    int plus = -1;
    Point normal{0.0, 0.0};
    double h = 0.0;
};

struct FaceSet {
    std::vector<Face> interior;
    std::vector<Face> interface;
    std::vector<Face> boundary;
};

FaceSet enumerate_faces(const InducedMesh& mesh);

/// Plain-text debug dump: one record per macro-element and one per face.
void write_mesh_dump(std::ostream& os, const InducedMesh& mesh, const FaceSet& faces, int p);

} // namespace uldg
