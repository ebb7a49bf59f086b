#include "uldg/dg_space.hpp"

#include <cmath>
#include <string>

namespace uldg {

namespace {

/* Unscaled Legendre values and derivatives up to degree p. */
void legendre_all(int p, double x, double* val, double* der)
{
    val[0] = 1.0;
    der[0] = 0.0;
    if (p == 0)
        return;
    val[1] = x;
    der[1] = 1.0;
    for (int n = 2; n <= p; ++n) {
        val[n] = ((2 * n - 1) * x * val[n - 1] - (n - 1) * val[n - 2]) / n;
        der[n] = der[n - 2] + (2 * n - 1) * val[n - 1];
    }
}

constexpr int max_order = 16;

void extend(Box& b, const Point& x)
{
    b.lo = b.lo.cwiseMin(x);
    b.hi = b.hi.cwiseMax(x);
}

} // namespace

double legendre(int n, double x)
{
    double v[max_order + 1], d[max_order + 1];
    legendre_all(n, x, v, d);
    return std::sqrt(2.0 * n + 1.0) * v[n];
}

double legendre_derivative(int n, double x)
{
    double v[max_order + 1], d[max_order + 1];
    legendre_all(n, x, v, d);
    return std::sqrt(2.0 * n + 1.0) * d[n];
}

BasisSet::BasisSet(int p) : p_(p)
{
    if (p < 0 || p > max_order)
        throw Error(ErrorKind::Config, "polynomial order must lie in [0, " + std::to_string(max_order) + "]");
}

void BasisSet::evaluate(const Box& box, const Point& x, Eigen::Ref<Eigen::VectorXd> value,
                        Eigen::Ref<Eigen::VectorXd> dx, Eigen::Ref<Eigen::VectorXd> dy) const
{
    const Point c = box.center();
    const double sx = 2.0 / box.width(), sy = 2.0 / box.height();
    double vx[max_order + 1], dvx[max_order + 1], vy[max_order + 1], dvy[max_order + 1];
    legendre_all(p_, (x.x() - c.x()) * sx, vx, dvx);
    legendre_all(p_, (x.y() - c.y()) * sy, vy, dvy);
    for (int a = 0; a <= p_; ++a) {
        const double s = std::sqrt(2.0 * a + 1.0);
        vx[a] *= s;
        dvx[a] *= s * sx;
        vy[a] *= s;
        dvy[a] *= s * sy;
    }
    for (int b = 0; b <= p_; ++b)
        for (int a = 0; a <= p_; ++a) {
            const int k = index(a, b);
            value[k] = vx[a] * vy[b];
            dx[k] = dvx[a] * vy[b];
            dy[k] = vx[a] * dvy[b];
        }
}

BasisTable tabulate(const BasisSet& basis, const Box& box, const std::vector<Point>& points)
{
    const int nq = int(points.size()), nb = basis.count();
    BasisTable t;
    t.value.resize(nq, nb);
    t.dx.resize(nq, nb);
    t.dy.resize(nq, nb);
    Eigen::VectorXd v(nb), gx(nb), gy(nb);
    for (int q = 0; q < nq; ++q) {
        basis.evaluate(box, points[q], v, gx, gy);
        t.value.row(q) = v.transpose();
        t.dx.row(q) = gx.transpose();
        t.dy.row(q) = gy.transpose();
    }
    return t;
}

DofLayout::DofLayout(const InducedMesh& mesh, int p) : p_(p), nb_((p + 1) * (p + 1))
{
    lookup_.assign(2 * mesh.macros.size(), -1);
    for (int m = 0; m < int(mesh.macros.size()); ++m)
        for (Side s : both_sides)
            if (mesh.macros[m].has_side[index(s)]) {
                lookup_[2 * m + index(s)] = int(blocks_.size());
                blocks_.push_back({m, s});
            }
}

double face_theta(const InducedMesh& mesh, const Face& face, int p)
{
    std::vector<Box> probes;
    if (face.kind == FaceKind::InterfaceArc) {
        for (const auto& arc : face.arcs)
            for (const Point& x : {arc.start(), arc.end()})
                probes.push_back({x, x});
    } else {
        probes.push_back({face.segment.a.cwiseMin(face.segment.b), face.segment.a.cwiseMax(face.segment.b)});
    }
    double theta = 1.0;
    auto consider = [&](int m) {
        const MacroElement& mac = mesh.macros[m];
        if (mac.cut)
            theta = std::max(theta, theta_K(mac.eta, p));
    };
    consider(face.minus);
    if (face.plus >= 0)
        consider(face.plus);
    for (const Box& b : probes)
        for (const auto& k : mesh.quad.leaves_touching(b))
            consider(mesh.leaves.at(k).macro);
    return theta;
}

Discretization::Discretization(const InducedMesh& mesh, const FaceSet& faces, int p, int extra)
    : mesh_(&mesh), faces_(&faces), layout_(mesh, p), basis_(p)
{
    if (p < 1)
        throw Error(ErrorKind::Config, "polynomial order must be at least 1");
    blocks_.resize(layout_.num_blocks());
    for (int b = 0; b < layout_.num_blocks(); ++b) {
        BlockData& bd = blocks_[b];
        const auto& blk = layout_.block(b);
        const MacroElement& mac = mesh.macros[blk.macro];
        bd.macro = blk.macro;
        bd.side = blk.side;
        bd.box = side_bounds(mesh, blk.macro, blk.side);
        bd.h = mac.h;
        bd.theta = mac.cut ? theta_K(mac.eta, p) : 1.0;
        bd.rule = cut_cell_rule(mesh, blk.macro, blk.side, p, extra);
        bd.table = tabulate(basis_, bd.box, bd.rule.points);
        const Eigen::Map<const Eigen::VectorXd> w(bd.rule.weights.data(), bd.rule.weights.size());
        bd.mass = bd.table.value.transpose() * w.asDiagonal() * bd.table.value;
        bd.mass_llt.compute(bd.mass);
        if (bd.mass_llt.info() != Eigen::Success)
            throw Error(ErrorKind::SingularMass, "mass matrix of macro-element " + std::to_string(blk.macro) +
                                                     " side " + std::to_string(index(blk.side) + 1));
    }

    auto add = [&](const Face& f) {
        FaceData fd;
        fd.kind = f.kind;
        fd.h = f.h;
        if (f.kind == FaceKind::InterfaceArc) {
            fd.minus = layout_.block_of(f.minus, Side::Inner);
            fd.plus = layout_.block_of(f.plus, Side::Outer);
            fd.rule = interface_rule(f, p, extra);
        } else {
            fd.minus = layout_.block_of(f.minus, f.side);
            fd.plus = f.plus >= 0 ? layout_.block_of(f.plus, f.side) : -1;
            fd.rule = face_rule(f, p, extra);
        }
        if (fd.minus < 0 || (f.kind != FaceKind::Boundary && fd.plus < 0))
            throw Error(ErrorKind::InconsistentTopology, std::string(to_string(f.kind)) +
                                                             " face without a block on its side");
        fd.theta = face_theta(mesh, f, p);
        fd.minus_value = tabulate(basis_, blocks_[fd.minus].box, fd.rule.points).value;
        if (fd.plus >= 0)
            fd.plus_value = tabulate(basis_, blocks_[fd.plus].box, fd.rule.points).value;
        face_data_.push_back(std::move(fd));
    };
    for (const auto& f : faces.interior)
        add(f);
    for (const auto& f : faces.boundary)
        add(f);
    for (const auto& f : faces.interface)
        add(f);
}

Box side_bounds(const InducedMesh& mesh, int macro, Side side)
{
    const MacroElement& mac = mesh.macros[macro];
    if (!mac.cut)
        return mac.bounds;
    constexpr int arc_samples = 32;
    Box b{mac.bounds.hi, mac.bounds.lo};
    for (const CellKey& k : mac.members) {
        const LeafRecord& rec = mesh.leaves.at(k);
        if (!rec.topo.is_cut()) {
            if (rec.topo.uncut_side() == side) {
                extend(b, rec.box.lo);
                extend(b, rec.box.hi);
            }
            continue;
        }
        for (int c = 0; c < 4; ++c)
            if (rec.topo.corner_sides[c] == side)
                extend(b, rec.box.corner(c));
        const InterfaceArc arc(mesh.level_set, rec.topo.crossings[0], rec.topo.crossings[1]);
        for (int i = 0; i <= arc_samples; ++i)
            extend(b, arc.point(double(i) / arc_samples));
    }
    if (!(b.width() > 0.0) || !(b.height() > 0.0))
        throw Error(ErrorKind::DegenerateRegion, "macro-element " + std::to_string(macro) + " has an empty side");
    return b;
}

void Discretization::evaluate(int b, const Point& x, Eigen::Ref<Eigen::VectorXd> value,
                              Eigen::Ref<Eigen::VectorXd> dx, Eigen::Ref<Eigen::VectorXd> dy) const
{
    basis_.evaluate(blocks_[b].box, x, value, dx, dy);
}

} // namespace uldg
