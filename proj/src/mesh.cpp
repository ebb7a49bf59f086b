#include "uldg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>

namespace uldg {

namespace {

std::string describe(const CellKey& k)
{
    return "cell(level=" + std::to_string(k.level) + ",i=" + std::to_string(k.i) + ",j=" + std::to_string(k.j) + ")";
}

constexpr int dx(Direction d) { return d == Direction::West ? -1 : d == Direction::East ? 1 : 0; }
constexpr int dy(Direction d) { return d == Direction::South ? -1 : d == Direction::North ? 1 : 0; }

constexpr Direction opposite(Direction d)
{
    switch (d) {
    case Direction::West: return Direction::East;
    case Direction::East: return Direction::West;
    case Direction::South: return Direction::North;
    default: return Direction::South;
    }
}

constexpr std::array<Direction, 4> all_directions{Direction::West, Direction::East, Direction::South,
                                                  Direction::North};

Segment edge_of(const Box& b, Direction d)
{
    switch (d) {
    case Direction::West: return {b.lo, {b.lo.x(), b.hi.y()}};
    case Direction::East: return {{b.hi.x(), b.lo.y()}, b.hi};
    case Direction::South: return {b.lo, {b.hi.x(), b.lo.y()}};
    default: return {{b.lo.x(), b.hi.y()}, b.hi};
    }
}

Point outward(Direction d) { return Point(dx(d), dy(d)); }

std::array<double, 2> side_lengths(const Segment& seg, const LevelSetInterface& ls)
{
    std::array<double, 2> len{0.0, 0.0};
    std::vector<double> ts{0.0};
    for (double t : ls.segment_crossings(seg))
        ts.push_back(t);
    ts.push_back(1.0);
    const double total = seg.length();
    for (size_t k = 0; k + 1 < ts.size(); ++k) {
        const Side s = ls.side_of(seg.at(0.5 * (ts[k] + ts[k + 1])));
        len[index(s)] += (ts[k + 1] - ts[k]) * total;
    }
    return len;
}

/* Edge of a cell in integer coordinates at a fixed fine level. */
struct IntEdge {
    int orientation; // Direction as int, the outward side
    long line;
    long from;
    long to;
};

IntEdge int_edge(const CellKey& k, Direction d, int fine_level)
{
    const long s = 1L << (fine_level - k.level);
    const long x0 = long(k.i) * s, x1 = x0 + s;
    const long y0 = long(k.j) * s, y1 = y0 + s;
    switch (d) {
    case Direction::West: return {int(d), x0, y0, y1};
    case Direction::East: return {int(d), x1, y0, y1};
    case Direction::South: return {int(d), y0, x0, x1};
    default: return {int(d), y1, x0, x1};
    }
}

} // namespace

QuadMesh::QuadMesh(int n, Domain domain) : n_(n), domain_(domain)
{
    if (n < 2)
        throw Error(ErrorKind::Config, "mesh needs at least 2 cells per side");
    const double w = domain.hi.x() - domain.lo.x();
    const double h = domain.hi.y() - domain.lo.y();
    if (!(w > 0.0) || std::abs(w - h) > 1e-12 * w)
        throw Error(ErrorKind::Config, "domain must be a nondegenerate square");
    h0_ = w / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            leaves_.insert({0, i, j});
}

QuadMesh build_initial_mesh(int n, Domain domain) { return QuadMesh(n, domain); }

int QuadMesh::max_level() const
{
    int m = 0;
    for (const auto& k : leaves_)
        m = std::max(m, k.level);
    return m;
}

double QuadMesh::side(const CellKey& k) const { return std::ldexp(h0_, -k.level); }

Box QuadMesh::bounds(const CellKey& k) const
{
    const double s = side(k);
    Point lo = domain_.lo + Point(k.i * s, k.j * s);
    return {lo, lo + Point(s, s)};
}

bool QuadMesh::in_range(int level, int i, int j) const
{
    const int e = n_ << level;
    return i >= 0 && j >= 0 && i < e && j < e;
}

void QuadMesh::refine(const CellKey& leaf)
{
    if (leaves_.erase(leaf) == 0)
        throw Error(ErrorKind::DomainError, describe(leaf) + " is not a leaf");
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            leaves_.insert({leaf.level + 1, 2 * leaf.i + a, 2 * leaf.j + b});
}

void QuadMesh::collect_facing(const CellKey& node, Direction toward_us, std::vector<CellKey>& out) const
{
    if (is_leaf(node)) {
        out.push_back(node);
        return;
    }
    if (node.level > 60)
        throw Error(ErrorKind::InconsistentTopology, "runaway quadtree descent");
    for (int c = 0; c < 2; ++c) {
        int a = 0, b = 0;
        switch (toward_us) {
        case Direction::West: a = 0; b = c; break;
        case Direction::East: a = 1; b = c; break;
        case Direction::South: a = c; b = 0; break;
        case Direction::North: a = c; b = 1; break;
        }
        collect_facing({node.level + 1, 2 * node.i + a, 2 * node.j + b}, toward_us, out);
    }
}

std::vector<CellKey> QuadMesh::edge_neighbors(const CellKey& leaf, Direction dir) const
{
    std::vector<CellKey> out;
    const int ni = leaf.i + dx(dir);
    const int nj = leaf.j + dy(dir);
    if (!in_range(leaf.level, ni, nj))
        return out;
    const CellKey same{leaf.level, ni, nj};
    if (is_leaf(same)) {
        out.push_back(same);
        return out;
    }
    for (int m = 1; m <= leaf.level; ++m) {
        const CellKey anc{leaf.level - m, ni >> m, nj >> m};
        if (is_leaf(anc)) {
            out.push_back(anc);
            return out;
        }
    }
    collect_facing(same, opposite(dir), out);
    return out;
}

void QuadMesh::collect_touching(const CellKey& node, const Box& region, double tol, std::vector<CellKey>& out) const
{
    const Box b = bounds(node);
    if (b.lo.x() > region.hi.x() + tol || b.hi.x() < region.lo.x() - tol || b.lo.y() > region.hi.y() + tol ||
        b.hi.y() < region.lo.y() - tol)
        return;
    if (is_leaf(node)) {
        out.push_back(node);
        return;
    }
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c)
            collect_touching({node.level + 1, 2 * node.i + a, 2 * node.j + c}, region, tol, out);
}

std::vector<CellKey> QuadMesh::leaves_touching(const Box& region) const
{
    std::vector<CellKey> out;
    const double tol = 1e-10 * side({max_level(), 0, 0});
    const int i0 = std::max(0, int(std::floor((region.lo.x() - domain_.lo.x()) / h0_)) - 1);
    const int i1 = std::min(n_ - 1, int(std::floor((region.hi.x() - domain_.lo.x()) / h0_)) + 1);
    const int j0 = std::max(0, int(std::floor((region.lo.y() - domain_.lo.y()) / h0_)) - 1);
    const int j1 = std::min(n_ - 1, int(std::floor((region.hi.y() - domain_.lo.y()) / h0_)) + 1);
    for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
            collect_touching({0, i, j}, region, tol, out);
    std::sort(out.begin(), out.end());
    return out;
}

bool QuadMesh::is_balanced() const
{
    for (const auto& leaf : leaves_)
        for (Direction d : all_directions)
            for (const auto& nb : edge_neighbors(leaf, d))
                if (std::abs(nb.level - leaf.level) > 1)
                    return false;
    return true;
}

void QuadMesh::balance()
{
    for (;;) {
        std::vector<CellKey> to_refine;
        for (const auto& leaf : leaves_) {
            bool needs = false;
            for (Direction d : all_directions) {
                for (const auto& nb : edge_neighbors(leaf, d))
                    if (nb.level > leaf.level + 1) {
                        needs = true;
                        break;
                    }
                if (needs)
                    break;
            }
            if (needs)
                to_refine.push_back(leaf);
        }
        if (to_refine.empty())
            return;
        for (const auto& k : to_refine)
            refine(k);
    }
}

void refine_interface_band(QuadMesh& mesh, const LevelSetInterface& ls, int levels)
{
    if (levels < 0)
        throw Error(ErrorKind::Config, "refine levels must be nonnegative");
    for (int round = 0; round < levels; ++round) {
        std::set<CellKey> marked;
        for (const auto& leaf : mesh.leaves()) {
            const Box b = mesh.bounds(leaf);
            const ElementClass c = classify_element(b, ls);
            if (c == ElementClass::Interior1 || c == ElementClass::Interior2)
                continue;
            for (const auto& t : mesh.leaves_touching(b))
                marked.insert(t);
        }
        for (const auto& k : marked)
            mesh.refine(k);
        mesh.balance();
    }
}

double InducedMesh::total_area() const
{
    double a = 0.0;
    for (const auto& m : macros)
        a += m.area;
    return a;
}

UnionLargeness union_largeness(const QuadMesh& mesh, const std::vector<CellKey>& members,
                               const LevelSetInterface& ls, double delta0)
{
    int fine = 0;
    for (const auto& k : members)
        fine = std::max(fine, k.level);

    std::vector<IntEdge> edges;
    for (const auto& k : members)
        for (Direction d : all_directions)
            edges.push_back(int_edge(k, d, fine));

    // keep the parts of each edge not covered by an opposite edge on the same line
    std::map<std::pair<int, long>, std::vector<std::pair<long, long>>> pieces;
    for (const auto& e : edges) {
        std::vector<std::pair<long, long>> keep{{e.from, e.to}};
        const int opp = int(opposite(Direction(e.orientation)));
        for (const auto& o : edges) {
            if (o.orientation != opp || o.line != e.line)
                continue;
            std::vector<std::pair<long, long>> next;
            for (auto [a, b] : keep) {
                if (o.to <= a || o.from >= b) {
                    next.push_back({a, b});
                    continue;
                }
                if (o.from > a)
                    next.push_back({a, o.from});
                if (o.to < b)
                    next.push_back({o.to, b});
            }
            keep = std::move(next);
        }
        for (auto iv : keep)
            pieces[{e.orientation, e.line}].push_back(iv);
    }

    const double unit = mesh.side({fine, 0, 0});
    const Point lo = mesh.domain().lo;
    UnionLargeness out;
    out.large = {true, true};
    for (auto& [key, ivs] : pieces) {
        std::sort(ivs.begin(), ivs.end());
        std::vector<std::pair<long, long>> merged;
        for (auto iv : ivs) {
            if (!merged.empty() && merged.back().second == iv.first)
                merged.back().second = iv.second;
            else
                merged.push_back(iv);
        }
        const auto [orientation, line] = key;
        const bool vertical = orientation == int(Direction::West) || orientation == int(Direction::East);
        for (auto [a, b] : merged) {
            Segment seg;
            if (vertical)
                seg = {lo + Point(line * unit, a * unit), lo + Point(line * unit, b * unit)};
            else
                seg = {lo + Point(a * unit, line * unit), lo + Point(b * unit, line * unit)};
            out.boundary.push_back(seg);
            const auto len = side_lengths(seg, ls);
            const double total = seg.length();
            for (Side s : both_sides) {
                const double f = len[index(s)] / total;
                if (f <= 1e-12)
                    continue;
                out.score = std::min(out.score, f);
                if (f < delta0 - 1e-14)
                    out.large[index(s)] = false;
            }
        }
    }
    return out;
}

namespace {

/* Chord through the crossings on a union boundary and the deviation of the
   member arcs from it. Empty unless the boundary is crossed exactly twice. */
std::optional<ChordDeviation> union_deviation(const std::map<CellKey, LeafRecord>& leaves,
                                              const std::vector<CellKey>& members, const UnionLargeness& ul,
                                              const LevelSetInterface& ls)
{
    std::vector<Point> xs;
    for (const auto& seg : ul.boundary)
        for (double t : ls.segment_crossings(seg))
            xs.push_back(seg.at(t));
    if (xs.size() != 2)
        return std::nullopt;
    std::vector<InterfaceArc> arcs;
    std::vector<Point> vertices;
    double h = 0.0;
    for (const auto& k : members) {
        const LeafRecord& rec = leaves.at(k);
        h = std::max(h, rec.box.width());
        for (int c = 0; c < 4; ++c)
            vertices.push_back(rec.box.corner(c));
        if (rec.topo.is_cut())
            arcs.emplace_back(ls, rec.topo.crossings[0], rec.topo.crossings[1]);
    }
    try {
        return deviation_from_chord({xs[0], xs[1]}, arcs, vertices, ls, h);
    } catch (const Error&) {
        return std::nullopt;
    }
}

struct Merger {
    const QuadMesh& mesh;
    const LevelSetInterface& ls;
    double delta0;
    std::map<CellKey, LeafRecord>& leaves;
    std::vector<std::vector<CellKey>> groups;
    std::vector<CellKey> representative;
    std::vector<bool> alive;
    std::vector<bool> merged;

    bool has_cut(const std::vector<CellKey>& members) const
    {
        for (const auto& k : members)
            if (leaves.at(k).topo.is_cut())
                return true;
        return false;
    }

    std::vector<CellKey> members_of(int g, const std::vector<int>& extra) const
    {
        std::vector<CellKey> out = groups[g];
        for (int c : extra)
            out.insert(out.end(), groups[c].begin(), groups[c].end());
        return out;
    }

    std::set<int> neighbor_groups(const std::vector<CellKey>& members) const
    {
        std::set<int> in;
        for (const auto& k : members)
            in.insert(leaves.at(k).macro);
        std::set<int> out;
        for (const auto& k : members)
            for (Direction d : all_directions)
                for (const auto& nb : mesh.edge_neighbors(k, d)) {
                    const int o = leaves.at(nb).macro;
                    if (!in.count(o))
                        out.insert(o);
                }
        return out;
    }

    bool size_ok(const std::vector<CellKey>& members) const
    {
        double lo = 1e300, hi = 0.0;
        for (const auto& k : members) {
            lo = std::min(lo, mesh.side(k));
            hi = std::max(hi, mesh.side(k));
        }
        return hi <= 2.0 * lo * (1.0 + 1e-12);
    }

    bool is_small(int g) const
    {
        if (!alive[g] || !has_cut(groups[g]))
            return false;
        const auto ul = union_largeness(mesh, groups[g], ls, delta0);
        return !(ul.large[0] && ul.large[1]);
    }

    /* Admissible unions of g with 1, 2, then 3 neighbouring groups; the first
       depth with any admissible union returns the one of smallest deviation. */
    std::optional<std::vector<int>> search(int g) const
    {
        constexpr int max_additions = 3;
        std::set<std::vector<int>> layer{{}};
        for (int depth = 1; depth <= max_additions; ++depth) {
            std::set<std::vector<int>> next;
            std::optional<std::vector<int>> best;
            double best_eta = 1.0;
            for (const auto& S : layer) {
                const auto base = members_of(g, S);
                for (int c : neighbor_groups(base)) {
                    std::vector<int> T = S;
                    T.push_back(c);
                    std::sort(T.begin(), T.end());
                    if (next.count(T))
                        continue;
                    const auto members = members_of(g, T);
                    if (!size_ok(members))
                        continue;
                    next.insert(T);
                    const auto ul = union_largeness(mesh, members, ls, delta0);
                    if (!(ul.large[0] && ul.large[1]))
                        continue;
                    const auto dev = union_deviation(leaves, members, ul, ls);
                    if (!dev || !(dev->eta < best_eta))
                        continue;
                    best_eta = dev->eta;
                    best = T;
                }
            }
            if (best)
                return best;
            layer = std::move(next);
        }
        return std::nullopt;
    }
};

} // namespace

InducedMesh build_induced_mesh(QuadMesh mesh, const LevelSetInterface& ls, double delta0)
{
    if (!(delta0 > 0.0) || !(delta0 < 0.5))
        throw Error(ErrorKind::Config, "delta0 must lie in (0, 1/2)");

    InducedMesh out{std::move(mesh), ls, delta0, {}, {}};
    const QuadMesh& quad = out.quad;

    for (const auto& k : quad.leaves()) {
        LeafRecord rec;
        rec.box = quad.bounds(k);
        try {
            rec.topo = compute_cut_topology(rec.box, ls);
        } catch (const Error& e) {
            throw Error(e.kind(), describe(k) + ": " + e.what());
        }
        if (rec.topo.element_class == ElementClass::CutImproper)
            throw Error(ErrorKind::ImproperCut, describe(k) + " is improperly cut; refine the mesh near the interface");
        out.leaves.emplace(k, rec);
    }

    Merger st{quad, ls, delta0, out.leaves, {}, {}, {}, {}};
    for (auto& [k, rec] : out.leaves) {
        rec.macro = int(st.groups.size());
        st.groups.push_back({k});
        st.representative.push_back(k);
        st.alive.push_back(true);
        st.merged.push_back(false);
    }

    std::vector<std::pair<double, int>> small;
    for (int g = 0; g < int(st.groups.size()); ++g)
        if (st.is_small(g))
            small.push_back({union_largeness(quad, st.groups[g], ls, delta0).score, g});
    std::sort(small.begin(), small.end(), [&](const auto& a, const auto& b) {
        return std::tie(a.first, st.representative[a.second]) < std::tie(b.first, st.representative[b.second]);
    });

    for (const auto& entry : small) {
        const int g = entry.second;
        if (!st.is_small(g))
            continue;
        const auto chosen = st.search(g);
        if (!chosen)
            throw Error(ErrorKind::MergeFailure,
                        describe(st.representative[g]) + " has no admissible merge; refine near the interface");
        for (int c : *chosen) {
            for (const auto& k : st.groups[c]) {
                st.groups[g].push_back(k);
                out.leaves.at(k).macro = g;
            }
            st.groups[c].clear();
            st.alive[c] = false;
        }
        st.merged[g] = true;
    }

    // final macro-elements ordered by their smallest member
    std::vector<int> order;
    for (int g = 0; g < int(st.groups.size()); ++g)
        if (st.alive[g]) {
            std::sort(st.groups[g].begin(), st.groups[g].end());
            order.push_back(g);
        }
    std::sort(order.begin(), order.end(), [&](int a, int b) { return st.groups[a].front() < st.groups[b].front(); });

    out.macros.reserve(order.size());
    for (int g : order) {
        MacroElement m;
        m.members = st.groups[g];
        m.representative = st.representative[g];
        m.kind = st.merged[g] ? MacroKind::MergedInterface : MacroKind::Plain;
        m.bounds = out.leaves.at(m.members.front()).box;
        for (const auto& k : m.members) {
            const LeafRecord& rec = out.leaves.at(k);
            m.bounds.lo = m.bounds.lo.cwiseMin(rec.box.lo);
            m.bounds.hi = m.bounds.hi.cwiseMax(rec.box.hi);
            m.h = std::max(m.h, rec.box.width());
            m.area += rec.box.area();
            if (rec.topo.is_cut()) {
                m.cut = true;
                m.has_side = {true, true};
            } else {
                m.has_side[index(rec.topo.uncut_side())] = true;
            }
        }
        if (m.cut) {
            if (m.members.size() == 1) {
                const auto& topo = out.leaves.at(m.members.front()).topo;
                m.eta = topo.eta;
                m.chord = topo.chord;
            } else {
                const auto ul = union_largeness(quad, m.members, ls, delta0);
                if (const auto dev = union_deviation(out.leaves, m.members, ul, ls)) {
                    m.eta = dev->eta;
                    m.chord = dev->chord;
                } else {
                    for (const auto& k : m.members) {
                        const auto& topo = out.leaves.at(k).topo;
                        if (topo.is_cut() && topo.eta >= m.eta) {
                            m.eta = topo.eta;
                            m.chord = topo.chord;
                        }
                    }
                }
            }
        }
        const int id = int(out.macros.size());
        for (const auto& k : m.members)
            out.leaves.at(k).macro = id;
        out.macros.push_back(std::move(m));
    }
    return out;
}

const char* to_string(FaceKind k)
{
    switch (k) {
    case FaceKind::Interior: return "interior";
    case FaceKind::InterfaceArc: return "interface";
    case FaceKind::Boundary: return "boundary";
    }
    return "?";
}

namespace {

void split_and_push(const Face& proto, const LevelSetInterface& ls, const InducedMesh& mesh, std::vector<Face>& out)
{
    std::vector<double> ts{0.0};
    for (double t : ls.segment_crossings(proto.segment))
        ts.push_back(t);
    ts.push_back(1.0);
    for (size_t k = 0; k + 1 < ts.size(); ++k) {
        if (ts[k + 1] - ts[k] <= 0.0)
            continue;
        Face f = proto;
        f.segment = {proto.segment.at(ts[k]), proto.segment.at(ts[k + 1])};
        f.side = ls.side_of(f.segment.at(0.5));
        for (int owner : {f.minus, f.plus})
            if (owner >= 0 && !mesh.macros[owner].has_side[index(f.side)])
                throw Error(ErrorKind::InconsistentTopology,
                            "face piece on a side absent from macro-element " + std::to_string(owner));
        out.push_back(std::move(f));
    }
}

} // namespace

FaceSet enumerate_faces(const InducedMesh& mesh)
{
    FaceSet fs;
    const QuadMesh& quad = mesh.quad;
    const LevelSetInterface& ls = mesh.level_set;
    for (const auto& [key, rec] : mesh.leaves) {
        for (Direction d : all_directions) {
            const auto nbs = quad.edge_neighbors(key, d);
            const bool positive = d == Direction::East || d == Direction::North;
            Face f;
            f.segment = edge_of(rec.box, d);
            if (nbs.empty()) {
                f.kind = FaceKind::Boundary;
                f.minus = rec.macro;
                f.plus = -1;
                f.normal = outward(d);
                f.h = mesh.macros[rec.macro].h;
                split_and_push(f, ls, mesh, fs.boundary);
                continue;
            }
            const CellKey& nb = nbs.front();
            const bool same = nbs.size() == 1 && nb.level == key.level;
            const bool coarser = nbs.size() == 1 && nb.level < key.level;
            if (!(coarser || (same && positive)))
                continue;
            const int here = rec.macro;
            const int there = mesh.leaves.at(nb).macro;
            if (here == there)
                continue;
            f.kind = FaceKind::Interior;
            f.minus = positive ? here : there;
            f.plus = positive ? there : here;
            f.normal = positive ? outward(d) : Point(-outward(d));
            f.h = 0.5 * (mesh.macros[here].h + mesh.macros[there].h);
            split_and_push(f, ls, mesh, fs.interior);
        }
    }
    for (int m = 0; m < int(mesh.macros.size()); ++m) {
        const MacroElement& mac = mesh.macros[m];
        if (!mac.cut)
            continue;
        Face f;
        f.kind = FaceKind::InterfaceArc;
        f.side = Side::Inner;
        f.minus = m;
        f.plus = m;
        f.h = mac.h;
        for (const auto& k : mac.members) {
            const auto& topo = mesh.leaves.at(k).topo;
            if (topo.is_cut())
                f.arcs.emplace_back(ls, topo.crossings[0], topo.crossings[1]);
        }
        fs.interface.push_back(std::move(f));
    }
    return fs;
}

void write_mesh_dump(std::ostream& os, const InducedMesh& mesh, const FaceSet& faces, int p)
{
    os.precision(17);
    for (size_t m = 0; m < mesh.macros.size(); ++m) {
        const MacroElement& mac = mesh.macros[m];
        os << "macro " << m << ' ' << (mac.kind == MacroKind::Plain ? "plain" : "merged") << " members";
        for (const auto& k : mac.members)
            os << ' ' << k.level << ':' << k.i << ':' << k.j;
        const double theta = mac.cut ? theta_K(mac.eta, p) : 1.0;
        os << " eta " << mac.eta << " theta " << theta << '\n';
    }
    auto dump_straight = [&](const Face& f) {
        os << "face " << to_string(f.kind) << " side " << index(f.side) + 1 << ' ' << f.segment.a.x() << ' '
           << f.segment.a.y() << ' ' << f.segment.b.x() << ' ' << f.segment.b.y() << " n " << f.normal.x() << ' '
           << f.normal.y() << " h " << f.h << " owners " << f.minus << ' ' << f.plus << '\n';
    };
    for (const auto& f : faces.interior)
        dump_straight(f);
    for (const auto& f : faces.boundary)
        dump_straight(f);
    for (const auto& f : faces.interface)
        for (const auto& arc : f.arcs)
            os << "face interface arc " << arc.start().x() << ' ' << arc.start().y() << ' ' << arc.end().x() << ' '
               << arc.end().y() << " h " << f.h << " owners " << f.minus << ' ' << f.plus << '\n';
}

} // namespace uldg
