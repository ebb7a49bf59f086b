#include "uldg/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace uldg {

FacePenalty face_penalty(const FaceData& face, double alpha0, int p)
{
    return {alpha0 * face.theta, face.h / double(p * p), face.h / double(p)};
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/* CSC matrix whose pattern is a union of dense blocks. All columns of one
   column block share the same row structure. */
class BlockSparseBuilder {
public:
    BlockSparseBuilder(std::vector<int> row_offsets, std::vector<int> col_offsets)
        : row_off_(std::move(row_offsets)), col_off_(std::move(col_offsets)), rows_of_(col_off_.size() - 1)
    {}

    void couple(int rb, int cb) { pending_.emplace_back(cb, rb); }

    void finalize()
    {
        std::sort(pending_.begin(), pending_.end());
        pending_.erase(std::unique(pending_.begin(), pending_.end()), pending_.end());
        for (auto [cb, rb] : pending_)
            rows_of_[cb].push_back(rb);
        pending_.clear();
        pending_.shrink_to_fit();

        const int ncb = int(rows_of_.size());
        seg_.resize(ncb);
        long nnz = 0;
        for (int cb = 0; cb < ncb; ++cb) {
            seg_[cb].resize(rows_of_[cb].size() + 1);
            int acc = 0;
            for (size_t k = 0; k < rows_of_[cb].size(); ++k) {
                seg_[cb][k] = acc;
                const int rb = rows_of_[cb][k];
                acc += row_off_[rb + 1] - row_off_[rb];
            }
            seg_[cb].back() = acc;
            nnz += long(acc) * (col_off_[cb + 1] - col_off_[cb]);
        }
        const int nrows = row_off_.back(), ncols = col_off_.back();
        m_ = RealSparse(nrows, ncols);
        m_.makeCompressed();
        m_.resizeNonZeros(nnz);
        int* outer = m_.outerIndexPtr();
        int* inner = m_.innerIndexPtr();
        double* val = m_.valuePtr();
        long pos = 0;
        for (int cb = 0; cb < ncb; ++cb)
            for (int c = col_off_[cb]; c < col_off_[cb + 1]; ++c) {
                outer[c] = int(pos);
                for (int rb : rows_of_[cb])
                    for (int r = row_off_[rb]; r < row_off_[rb + 1]; ++r) {
                        inner[pos] = r;
                        val[pos] = 0.0;
                        ++pos;
                    }
            }
        outer[ncols] = int(pos);
    }

    template <class Derived>
    void add(int rb, int cb, const Eigen::MatrixBase<Derived>& block, double scale = 1.0)
    {
        const auto& rows = rows_of_[cb];
        const auto it = std::lower_bound(rows.begin(), rows.end(), rb);
        if (it == rows.end() || *it != rb)
            throw Error(ErrorKind::InconsistentTopology, "assembly pattern misses a coupling");
        const int start = seg_[cb][it - rows.begin()];
        const int nr = row_off_[rb + 1] - row_off_[rb];
        double* val = m_.valuePtr();
        const int* outer = m_.outerIndexPtr();
        for (int c = 0; c < block.cols(); ++c) {
            double* dst = val + outer[col_off_[cb] + c] + start;
            for (int r = 0; r < nr; ++r)
                dst[r] += scale * block(r, c);
        }
    }

    RealSparse take() { return std::move(m_); }

private:
    std::vector<int> row_off_;
    std::vector<int> col_off_;
    std::vector<std::vector<int>> rows_of_;
    std::vector<std::vector<int>> seg_;
    std::vector<std::pair<int, int>> pending_;
    RealSparse m_;
};

std::vector<int> uniform_offsets(int count, int size, int start = 0)
{
    std::vector<int> off(count + 1);
    for (int i = 0; i <= count; ++i)
        off[i] = start + i * size;
    return off;
}

/* Destination of local contributions: either the four components or the
   combined saddle-point matrix. */
class Target {
public:
    virtual ~Target() = default;
    virtual void couple_A(int i, int j) = 0;
    virtual void couple_M(int i) = 0;
    virtual void couple_B(int q, int v) = 0;
    virtual void couple_C(int i, int j) = 0;
    virtual void finalize() = 0;
    virtual void add_A(int i, int j, const MatrixXd& m) = 0;
    virtual void add_M(int i, const MatrixXd& m) = 0;
    virtual void add_B(int q, int v, const MatrixXd& m) = 0;
    virtual void add_C(int i, int j, const MatrixXd& m) = 0;
};

class ComponentTarget : public Target {
public:
    ComponentTarget(int nblocks, int nb)
        : A(uniform_offsets(nblocks, 2 * nb), uniform_offsets(nblocks, 2 * nb)),
          M(uniform_offsets(nblocks, 2 * nb), uniform_offsets(nblocks, 2 * nb)),
          B(uniform_offsets(nblocks, nb), uniform_offsets(nblocks, 2 * nb)),
          C(uniform_offsets(nblocks, nb), uniform_offsets(nblocks, nb))
    {}
    void couple_A(int i, int j) override { A.couple(i, j); }
    void couple_M(int i) override { M.couple(i, i); }
    void couple_B(int q, int v) override { B.couple(q, v); }
    void couple_C(int i, int j) override { C.couple(i, j); }
    void finalize() override
    {
        A.finalize();
        M.finalize();
        B.finalize();
        C.finalize();
    }
    void add_A(int i, int j, const MatrixXd& m) override { A.add(i, j, m); }
    void add_M(int i, const MatrixXd& m) override { M.add(i, i, m); }
    void add_B(int q, int v, const MatrixXd& m) override { B.add(q, v, m); }
    void add_C(int i, int j, const MatrixXd& m) override { C.add(i, j, m); }

    BlockSparseBuilder A, M, B, C;
};

std::vector<int> system_offsets(int nblocks, int nb)
{
    std::vector<int> off(2 * nblocks + 1);
    for (int i = 0; i <= nblocks; ++i)
        off[i] = 2 * nb * i;
    for (int i = 1; i <= nblocks; ++i)
        off[nblocks + i] = 2 * nb * nblocks + nb * i;
    return off;
}

class SystemTarget : public Target {
public:
    SystemTarget(int nblocks, int nb, double k2)
        : n_(nblocks), k2_(k2), S(system_offsets(nblocks, nb), system_offsets(nblocks, nb))
    {}
    void couple_A(int i, int j) override { S.couple(i, j); }
    void couple_M(int i) override { S.couple(i, i); }
    void couple_B(int q, int v) override
    {
        S.couple(n_ + q, v);
        S.couple(v, n_ + q);
    }
    void couple_C(int i, int j) override { S.couple(n_ + i, n_ + j); }
    void finalize() override { S.finalize(); }
    void add_A(int i, int j, const MatrixXd& m) override { S.add(i, j, m); }
    void add_M(int i, const MatrixXd& m) override { S.add(i, i, m, -k2_); }
    void add_B(int q, int v, const MatrixXd& m) override
    {
        S.add(n_ + q, v, m);
        S.add(v, n_ + q, m.transpose(), -1.0);
    }
    void add_C(int i, int j, const MatrixXd& m) override { S.add(n_ + i, n_ + j, m); }

    int n_;
    double k2_;
    BlockSparseBuilder S;
};

/* Per-block lifting moments: R[j] is the nb x 2nb moment matrix against the
   field unknowns of block stencil[j]; stencil[0] is the block itself. */
struct LiftingMoments {
    std::vector<int> stencil;
    std::vector<MatrixXd> R;

    MatrixXd& slot(int block, int nb)
    {
        for (size_t k = 0; k < stencil.size(); ++k)
            if (stencil[k] == block)
                return R[k];
        stencil.push_back(block);
        R.push_back(MatrixXd::Zero(nb, 2 * nb));
        return R.back();
    }
};

class Assembler {
public:
    Assembler(const Discretization& disc, const MaterialData& mat, double alpha0)
        : disc_(disc), mat_(mat), alpha0_(alpha0), p_(disc.order()), nb_(disc.layout().basis_count()),
          minus_faces_(disc.layout().num_blocks())
    {
        if (!(alpha0 > 0.0))
            throw Error(ErrorKind::Config, "alpha0 must be positive");
        const auto& faces = disc.face_data();
        for (int f = 0; f < int(faces.size()); ++f)
            minus_faces_[faces[f].minus].push_back(f);
    }

    Side side_of(int b) const { return disc_.blocks()[b].side; }
    double mu(int b) const { return mat_.mu[index(side_of(b))]; }
    double eps(int b) const { return mat_.eps[index(side_of(b))]; }

    LiftingMoments moments(int b) const
    {
        LiftingMoments lm;
        lm.stencil.push_back(b);
        lm.R.push_back(MatrixXd::Zero(nb_, 2 * nb_));
        for (int f : minus_faces_[b]) {
            const FaceData& fd = disc_.face_data()[f];
            const int nq = int(fd.rule.size());
            MatrixXd tm(nq, nb_), tmx(nq, nb_), tmy(nq, nb_);
            for (int q = 0; q < nq; ++q) {
                const Point tau = tangent(fd.rule.normals[q]);
                tm.row(q) = fd.rule.weights[q] * fd.minus_value.row(q);
                tmx.row(q) = tau.x() * fd.minus_value.row(q);
                tmy.row(q) = tau.y() * fd.minus_value.row(q);
            }
            MatrixXd& own = lm.slot(b, nb_);
            own.leftCols(nb_) += tm.transpose() * tmx;
            own.rightCols(nb_) += tm.transpose() * tmy;
            if (fd.plus >= 0) {
                MatrixXd tpx(nq, nb_), tpy(nq, nb_);
                for (int q = 0; q < nq; ++q) {
                    const Point tau = tangent(fd.rule.normals[q]);
                    tpx.row(q) = tau.x() * fd.plus_value.row(q);
                    tpy.row(q) = tau.y() * fd.plus_value.row(q);
                }
                MatrixXd& nbr = lm.slot(fd.plus, nb_);
                nbr.leftCols(nb_) -= tm.transpose() * tpx;
                nbr.rightCols(nb_) -= tm.transpose() * tpy;
            }
        }
        return lm;
    }

    void declare(Target& t) const
    {
        const int nblocks = disc_.layout().num_blocks();
        for (int b = 0; b < nblocks; ++b) {
            std::vector<int> st{b};
            for (int f : minus_faces_[b])
                if (disc_.face_data()[f].plus >= 0)
                    st.push_back(disc_.face_data()[f].plus);
            for (int i : st)
                for (int j : st)
                    t.couple_A(i, j);
            t.couple_M(b);
            t.couple_B(b, b);
            t.couple_C(b, b);
        }
        for (const FaceData& fd : disc_.face_data()) {
            t.couple_B(fd.minus, fd.minus);
            if (fd.plus < 0)
                continue;
            for (int i : {fd.minus, fd.plus})
                for (int j : {fd.minus, fd.plus}) {
                    t.couple_A(i, j);
                    t.couple_C(i, j);
                }
            t.couple_B(fd.plus, fd.minus);
        }
        t.finalize();
    }

    void volume(Target& t, int b) const
    {
        const BlockData& bd = disc_.blocks()[b];
        const auto& V = bd.table.value;
        const auto& Dx = bd.table.dx;
        const auto& Dy = bd.table.dy;
        const Eigen::Map<const VectorXd> w(bd.rule.weights.data(), bd.rule.weights.size());
        const MatrixXd WV = w.asDiagonal() * V;
        const MatrixXd WDx = w.asDiagonal() * Dx;
        const MatrixXd WDy = w.asDiagonal() * Dy;
        const MatrixXd Kxx = Dx.transpose() * WDx;
        const MatrixXd Kyy = Dy.transpose() * WDy;
        const MatrixXd Kxy = Dx.transpose() * WDy;

        // curl of (phi, 0) is -d_y phi, of (0, phi) is d_x phi
        MatrixXd Kcc(2 * nb_, 2 * nb_);
        Kcc << Kyy, -Kxy.transpose(), -Kxy, Kxx;
        MatrixXd Cm(nb_, 2 * nb_);
        Cm << -(V.transpose() * WDy), V.transpose() * WDx;

        const LiftingMoments lm = moments(b);
        const int ns = int(lm.stencil.size());
        std::vector<MatrixXd> X(ns);
        for (int j = 0; j < ns; ++j)
            X[j] = bd.mass_llt.solve(lm.R[j]);

        const double inv_mu = 1.0 / mu(b);
        for (int j = 0; j < ns; ++j)
            for (int l = 0; l < ns; ++l) {
                MatrixXd blk = X[j].transpose() * lm.R[l];
                if (j == 0)
                    blk -= Cm.transpose() * X[l];
                if (l == 0)
                    blk -= X[j].transpose() * Cm;
                if (j == 0 && l == 0)
                    blk += Kcc;
                t.add_A(lm.stencil[j], lm.stencil[l], inv_mu * blk);
            }

        const double e = eps(b);
        MatrixXd Mb = MatrixXd::Zero(2 * nb_, 2 * nb_);
        Mb.topLeftCorner(nb_, nb_) = e * bd.mass;
        Mb.bottomRightCorner(nb_, nb_) = e * bd.mass;
        t.add_M(b, Mb);

        MatrixXd Bb(nb_, 2 * nb_);
        Bb << e * (Dx.transpose() * WV), e * (Dy.transpose() * WV);
        t.add_B(b, b, Bb);

        const double vol = bd.h * bd.h / double(p_ * p_ * p_);
        t.add_C(b, b, vol * (Kxx + Kyy));
    }

    void face(Target& t, const FaceData& fd) const
    {
        const bool boundary = fd.plus < 0;
        const int nq = int(fd.rule.size());
        const int nloc = boundary ? 2 * nb_ : 4 * nb_;
        const FacePenalty pen = face_penalty(fd, alpha0_, p_);
        const double em = eps(fd.minus);
        const double ep = boundary ? 0.0 : eps(fd.plus);

        MatrixXd Jt = MatrixXd::Zero(nq, nloc), Jn = MatrixXd::Zero(nq, nloc);
        MatrixXd Q = MatrixXd::Zero(nq, boundary ? nb_ : 2 * nb_);
        MatrixXd En(nq, 2 * nb_);
        VectorXd w(nq);
        for (int q = 0; q < nq; ++q) {
            const Point& n = fd.rule.normals[q];
            const Point tau = tangent(n);
            const auto vm = fd.minus_value.row(q);
            w[q] = fd.rule.weights[q];
            Jt.row(q).segment(0, nb_) = tau.x() * vm;
            Jt.row(q).segment(nb_, nb_) = tau.y() * vm;
            Jn.row(q).segment(0, nb_) = em * n.x() * vm;
            Jn.row(q).segment(nb_, nb_) = em * n.y() * vm;
            En.row(q).segment(0, nb_) = em * n.x() * vm;
            En.row(q).segment(nb_, nb_) = em * n.y() * vm;
            Q.row(q).segment(0, nb_) = vm;
            if (!boundary) {
                const auto vp = fd.plus_value.row(q);
                Jt.row(q).segment(2 * nb_, nb_) = -tau.x() * vp;
                Jt.row(q).segment(3 * nb_, nb_) = -tau.y() * vp;
                Jn.row(q).segment(2 * nb_, nb_) = -ep * n.x() * vp;
                Jn.row(q).segment(3 * nb_, nb_) = -ep * n.y() * vp;
                Q.row(q).segment(nb_, nb_) = -vp;
            }
        }
        const double a_over_t = pen.alpha / pen.tau;
        MatrixXd Aloc = a_over_t * (Jt.transpose() * w.asDiagonal() * Jt);
        if (!boundary)
            Aloc += a_over_t * (Jn.transpose() * w.asDiagonal() * Jn);
        const MatrixXd Bloc = -(Q.transpose() * w.asDiagonal() * En);
        const MatrixXd Cloc = pen.tau * (Q.transpose() * w.asDiagonal() * Q);

        const int owners[2] = {fd.minus, fd.plus};
        const int no = boundary ? 1 : 2;
        for (int i = 0; i < no; ++i) {
            t.add_B(owners[i], fd.minus, Bloc.middleRows(i * nb_, nb_));
            for (int j = 0; j < no; ++j) {
                t.add_A(owners[i], owners[j], Aloc.block(2 * nb_ * i, 2 * nb_ * j, 2 * nb_, 2 * nb_));
                t.add_C(owners[i], owners[j], Cloc.block(nb_ * i, nb_ * j, nb_, nb_));
            }
        }
    }

    void run(Target& t) const
    {
        declare(t);
        for (int b = 0; b < disc_.layout().num_blocks(); ++b)
            volume(t, b);
        for (const FaceData& fd : disc_.face_data())
            face(t, fd);
    }

    Eigen::VectorXcd rhs() const
    {
        const DofLayout& lay = disc_.layout();
        Eigen::VectorXcd F = Eigen::VectorXcd::Zero(lay.num_field());
        if (mat_.source) {
            for (int b = 0; b < lay.num_blocks(); ++b) {
                const BlockData& bd = disc_.blocks()[b];
                const int off = lay.field_offset(b);
                for (size_t q = 0; q < bd.rule.size(); ++q) {
                    const ComplexVector2 J = mat_.source(bd.rule.points[q], bd.side);
                    const auto v = bd.table.value.row(q);
                    const double w = bd.rule.weights[q];
                    F.segment(off, nb_) += (w * J[0]) * v.transpose().cast<Complex>();
                    F.segment(off + nb_, nb_) += (w * J[1]) * v.transpose().cast<Complex>();
                }
            }
        }
        if (!mat_.boundary)
            return F;
        // boundary penalty and the boundary lifting L_1(g)
        std::vector<Eigen::VectorXcd> r1(lay.num_blocks());
        for (const FaceData& fd : disc_.face_data()) {
            if (fd.kind != FaceKind::Boundary)
                continue;
            const FacePenalty pen = face_penalty(fd, alpha0_, p_);
            const Side side = disc_.blocks()[fd.minus].side;
            const int off = lay.field_offset(fd.minus);
            if (r1[fd.minus].size() == 0)
                r1[fd.minus] = Eigen::VectorXcd::Zero(nb_);
            for (size_t q = 0; q < fd.rule.size(); ++q) {
                const Point tau = tangent(fd.rule.normals[q]);
                const ComplexVector2 g = mat_.boundary(fd.rule.points[q], side);
                const Complex gt = g[0] * tau.x() + g[1] * tau.y();
                const auto v = fd.minus_value.row(q).transpose().cast<Complex>();
                const double w = fd.rule.weights[q];
                r1[fd.minus] += (w * gt) * v;
                F.segment(off, nb_) += (pen.alpha / pen.tau * w * gt * tau.x()) * v;
                F.segment(off + nb_, nb_) += (pen.alpha / pen.tau * w * gt * tau.y()) * v;
            }
        }
        for (int b = 0; b < lay.num_blocks(); ++b) {
            if (r1[b].size() == 0)
                continue;
            const BlockData& bd = disc_.blocks()[b];
            const Eigen::VectorXcd l1 = bd.mass_llt.solve(r1[b]);
            const Eigen::Map<const VectorXd> w(bd.rule.weights.data(), bd.rule.weights.size());
            MatrixXd Cm(nb_, 2 * nb_);
            Cm << -(bd.table.value.transpose() * w.asDiagonal() * bd.table.dy),
                bd.table.value.transpose() * w.asDiagonal() * bd.table.dx;
            const double inv_mu = 1.0 / mu(b);
            // -(mu^-1 L_1 g, curl v - L v) with (L_1 g, L v) = l1^T R
            F.segment(lay.field_offset(b), 2 * nb_) -= inv_mu * (Cm.transpose().cast<Complex>() * l1);
            const LiftingMoments lm = moments(b);
            for (size_t j = 0; j < lm.stencil.size(); ++j)
                F.segment(lay.field_offset(lm.stencil[j]), 2 * nb_) +=
                    inv_mu * (lm.R[j].transpose().cast<Complex>() * l1);
        }
        return F;
    }

    double max_penalty() const
    {
        double m = 0.0;
        for (const FaceData& fd : disc_.face_data()) {
            const FacePenalty pen = face_penalty(fd, alpha0_, p_);
            m = std::max(m, pen.alpha / pen.tau);
        }
        return m;
    }

private:
    const Discretization& disc_;
    const MaterialData& mat_;
    double alpha0_;
    int p_;
    int nb_;
    std::vector<std::vector<int>> minus_faces_;
};

} // namespace

SystemComponents assemble_components(const Discretization& disc, const MaterialData& mat, double alpha0)
{
    const Assembler as(disc, mat, alpha0);
    ComponentTarget t(disc.layout().num_blocks(), disc.layout().basis_count());
    as.run(t);
    return {t.A.take(), t.M.take(), t.B.take(), t.C.take()};
}

Eigen::VectorXcd assemble_rhs(const Discretization& disc, const MaterialData& mat, double alpha0)
{
    return Assembler(disc, mat, alpha0).rhs();
}

AssembledSystem assemble(const Discretization& disc, const MaterialData& mat, double alpha0)
{
    if (!(mat.k > 0.0))
        throw Error(ErrorKind::Config, "wave number must be positive");
    const Assembler as(disc, mat, alpha0);
    SystemTarget t(disc.layout().num_blocks(), disc.layout().basis_count(), mat.k * mat.k);
    as.run(t);
    AssembledSystem sys;
    sys.matrix = t.S.take();
    sys.rhs = Eigen::VectorXcd::Zero(disc.layout().total());
    sys.rhs.head(disc.layout().num_field()) = as.rhs();

    std::vector<double> diag;
    diag.reserve(disc.layout().num_field());
    for (int i = 0; i < disc.layout().num_field(); ++i)
        diag.push_back(std::abs(sys.matrix.coeff(i, i)));
    std::nth_element(diag.begin(), diag.begin() + diag.size() / 2, diag.end());
    const double typical = diag[diag.size() / 2];
    const double peak = as.max_penalty();
    if (peak > 1e14 * typical)
        sys.warnings.push_back("penalty " + std::to_string(peak) + " exceeds 1e14 times the typical diagonal " +
                               std::to_string(typical) + "; expect loss of accuracy");
    return sys;
}

void write_matrix_dump(std::ostream& os, const RealSparse& matrix)
{
    os.precision(17);
    for (int c = 0; c < matrix.outerSize(); ++c)
        for (RealSparse::InnerIterator it(matrix, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << " 0\n";
}

// ---------------------------------------------------------------------------

FormEvaluator::FormEvaluator(const Discretization& disc, const MaterialData& mat, double alpha0)
    : disc_(disc), mat_(mat), alpha0_(alpha0)
{}

namespace {

using Eigen::VectorXcd;

struct FaceTraces {
    VectorXcd mx, my, px, py; // field components on both sides
};

FaceTraces field_traces(const Discretization& disc, const FaceData& fd, const VectorXcd& v)
{
    const int nb = disc.layout().basis_count();
    FaceTraces t;
    const int om = disc.layout().field_offset(fd.minus);
    t.mx = fd.minus_value.cast<Complex>() * v.segment(om, nb);
    t.my = fd.minus_value.cast<Complex>() * v.segment(om + nb, nb);
    if (fd.plus >= 0) {
        const int op = disc.layout().field_offset(fd.plus);
        t.px = fd.plus_value.cast<Complex>() * v.segment(op, nb);
        t.py = fd.plus_value.cast<Complex>() * v.segment(op + nb, nb);
    } else {
        t.px = t.py = VectorXcd::Zero(fd.rule.size());
    }
    return t;
}

VectorXcd block_segment(const VectorXcd& v, int b, int nb) { return v.segment(b * nb, nb); }

} // namespace

VectorXcd FormEvaluator::lifting(const VectorXcd& v) const
{
    const int nb = disc_.layout().basis_count();
    VectorXcd r = VectorXcd::Zero(nb * disc_.layout().num_blocks());
    for (const FaceData& fd : disc_.face_data()) {
        const FaceTraces t = field_traces(disc_, fd, v);
        for (size_t q = 0; q < fd.rule.size(); ++q) {
            const Point tau = tangent(fd.rule.normals[q]);
            const Complex jt = (t.mx[q] - t.px[q]) * tau.x() + (t.my[q] - t.py[q]) * tau.y();
            r.segment(fd.minus * nb, nb) += (fd.rule.weights[q] * jt) * fd.minus_value.row(q).transpose();
        }
    }
    for (int b = 0; b < disc_.layout().num_blocks(); ++b)
        r.segment(b * nb, nb) = disc_.blocks()[b].mass_llt.solve(VectorXcd(r.segment(b * nb, nb)));
    return r;
}

VectorXcd FormEvaluator::boundary_lifting() const
{
    const int nb = disc_.layout().basis_count();
    VectorXcd r = VectorXcd::Zero(nb * disc_.layout().num_blocks());
    if (!mat_.boundary)
        return r;
    for (const FaceData& fd : disc_.face_data()) {
        if (fd.kind != FaceKind::Boundary)
            continue;
        const Side side = disc_.blocks()[fd.minus].side;
        for (size_t q = 0; q < fd.rule.size(); ++q) {
            const Point tau = tangent(fd.rule.normals[q]);
            const ComplexVector2 g = mat_.boundary(fd.rule.points[q], side);
            const Complex gt = g[0] * tau.x() + g[1] * tau.y();
            r.segment(fd.minus * nb, nb) += (fd.rule.weights[q] * gt) * fd.minus_value.row(q).transpose();
        }
    }
    for (int b = 0; b < disc_.layout().num_blocks(); ++b)
        r.segment(b * nb, nb) = disc_.blocks()[b].mass_llt.solve(VectorXcd(r.segment(b * nb, nb)));
    return r;
}

Complex FormEvaluator::scalar_inner(const VectorXcd& s, const VectorXcd& t) const
{
    const int nb = disc_.layout().basis_count();
    Complex sum = 0.0;
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const VectorXcd sv = bd.table.value.cast<Complex>() * block_segment(s, b, nb);
        const VectorXcd tv = bd.table.value.cast<Complex>() * block_segment(t, b, nb);
        for (size_t q = 0; q < bd.rule.size(); ++q)
            sum += bd.rule.weights[q] * sv[q] * std::conj(tv[q]);
    }
    return sum;
}

Complex FormEvaluator::tangential_trace(const VectorXcd& v, const VectorXcd& t) const
{
    const int nb = disc_.layout().basis_count();
    Complex sum = 0.0;
    for (const FaceData& fd : disc_.face_data()) {
        const FaceTraces tr = field_traces(disc_, fd, v);
        const VectorXcd tm = fd.minus_value.cast<Complex>() * block_segment(t, fd.minus, nb);
        for (size_t q = 0; q < fd.rule.size(); ++q) {
            const Point tau = tangent(fd.rule.normals[q]);
            const Complex jt = (tr.mx[q] - tr.px[q]) * tau.x() + (tr.my[q] - tr.py[q]) * tau.y();
            sum += fd.rule.weights[q] * jt * std::conj(tm[q]);
        }
    }
    return sum;
}

VectorXcd FormEvaluator::reduced_curl(int b, const VectorXcd& v, const VectorXcd& lift) const
{
    const int nb = disc_.layout().basis_count();
    const BlockData& bd = disc_.blocks()[b];
    const int off = disc_.layout().field_offset(b);
    return bd.table.dx.cast<Complex>() * v.segment(off + nb, nb) - bd.table.dy.cast<Complex>() * v.segment(off, nb) -
           bd.table.value.cast<Complex>() * block_segment(lift, b, nb);
}

Complex FormEvaluator::form_a(const VectorXcd& u, const VectorXcd& v) const
{
    const int p = disc_.order();
    const VectorXcd lu = lifting(u), lv = lifting(v);
    Complex sum = 0.0;
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const VectorXcd cu = reduced_curl(b, u, lu), cv = reduced_curl(b, v, lv);
        const double inv_mu = 1.0 / mat_.mu[index(bd.side)];
        for (size_t q = 0; q < bd.rule.size(); ++q)
            sum += inv_mu * bd.rule.weights[q] * cu[q] * std::conj(cv[q]);
    }
    for (const FaceData& fd : disc_.face_data()) {
        const bool boundary = fd.plus < 0;
        const FacePenalty pen = face_penalty(fd, alpha0_, p);
        const FaceTraces tu = field_traces(disc_, fd, u), tv = field_traces(disc_, fd, v);
        const double em = mat_.eps[index(disc_.blocks()[fd.minus].side)];
        const double ep = boundary ? 0.0 : mat_.eps[index(disc_.blocks()[fd.plus].side)];
        for (size_t q = 0; q < fd.rule.size(); ++q) {
            const Point& n = fd.rule.normals[q];
            const Point tau = tangent(n);
            const double w = fd.rule.weights[q] * pen.alpha / pen.tau;
            const Complex ju = (tu.mx[q] - tu.px[q]) * tau.x() + (tu.my[q] - tu.py[q]) * tau.y();
            const Complex jv = (tv.mx[q] - tv.px[q]) * tau.x() + (tv.my[q] - tv.py[q]) * tau.y();
            sum += w * ju * std::conj(jv);
            if (boundary)
                continue;
            const Complex nu = em * (tu.mx[q] * n.x() + tu.my[q] * n.y()) - ep * (tu.px[q] * n.x() + tu.py[q] * n.y());
            const Complex nv = em * (tv.mx[q] * n.x() + tv.my[q] * n.y()) - ep * (tv.px[q] * n.x() + tv.py[q] * n.y());
            sum += w * nu * std::conj(nv);
        }
    }
    return sum;
}

Complex FormEvaluator::form_mass(const VectorXcd& u, const VectorXcd& v) const
{
    const int nb = disc_.layout().basis_count();
    Complex sum = 0.0;
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const int off = disc_.layout().field_offset(b);
        const auto V = bd.table.value.cast<Complex>();
        const VectorXcd ux = V * u.segment(off, nb), uy = V * u.segment(off + nb, nb);
        const VectorXcd vx = V * v.segment(off, nb), vy = V * v.segment(off + nb, nb);
        const double e = mat_.eps[index(bd.side)];
        for (size_t q = 0; q < bd.rule.size(); ++q)
            sum += e * bd.rule.weights[q] * (ux[q] * std::conj(vx[q]) + uy[q] * std::conj(vy[q]));
    }
    return sum;
}

Complex FormEvaluator::form_b(const VectorXcd& v, const VectorXcd& q) const
{
    const int nb = disc_.layout().basis_count();
    Complex sum = 0.0;
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const int off = disc_.layout().field_offset(b);
        const VectorXcd vx = bd.table.value.cast<Complex>() * v.segment(off, nb);
        const VectorXcd vy = bd.table.value.cast<Complex>() * v.segment(off + nb, nb);
        const VectorXcd qx = bd.table.dx.cast<Complex>() * block_segment(q, b, nb);
        const VectorXcd qy = bd.table.dy.cast<Complex>() * block_segment(q, b, nb);
        const double e = mat_.eps[index(bd.side)];
        for (size_t k = 0; k < bd.rule.size(); ++k)
            sum += e * bd.rule.weights[k] * (vx[k] * std::conj(qx[k]) + vy[k] * std::conj(qy[k]));
    }
    for (const FaceData& fd : disc_.face_data()) {
        const FaceTraces tv = field_traces(disc_, fd, v);
        const VectorXcd qm = fd.minus_value.cast<Complex>() * block_segment(q, fd.minus, nb);
        const VectorXcd qp = fd.plus >= 0 ? VectorXcd(fd.plus_value.cast<Complex>() * block_segment(q, fd.plus, nb))
                                          : VectorXcd::Zero(fd.rule.size());
        const double em = mat_.eps[index(disc_.blocks()[fd.minus].side)];
        for (size_t k = 0; k < fd.rule.size(); ++k) {
            const Point& n = fd.rule.normals[k];
            const Complex vn = em * (tv.mx[k] * n.x() + tv.my[k] * n.y());
            sum -= fd.rule.weights[k] * vn * std::conj(qm[k] - qp[k]);
        }
    }
    return sum;
}

Complex FormEvaluator::form_b_ibp(const VectorXcd& v, const VectorXcd& q) const
{
    const int nb = disc_.layout().basis_count();
    Complex sum = 0.0;
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const int off = disc_.layout().field_offset(b);
        const VectorXcd div = bd.table.dx.cast<Complex>() * v.segment(off, nb) +
                              bd.table.dy.cast<Complex>() * v.segment(off + nb, nb);
        const VectorXcd qv = bd.table.value.cast<Complex>() * block_segment(q, b, nb);
        const double e = mat_.eps[index(bd.side)];
        for (size_t k = 0; k < bd.rule.size(); ++k)
            sum -= e * bd.rule.weights[k] * div[k] * std::conj(qv[k]);
    }
    for (const FaceData& fd : disc_.face_data()) {
        if (fd.plus < 0)
            continue;
        const FaceTraces tv = field_traces(disc_, fd, v);
        const VectorXcd qp = fd.plus_value.cast<Complex>() * block_segment(q, fd.plus, nb);
        const double em = mat_.eps[index(disc_.blocks()[fd.minus].side)];
        const double ep = mat_.eps[index(disc_.blocks()[fd.plus].side)];
        for (size_t k = 0; k < fd.rule.size(); ++k) {
            const Point& n = fd.rule.normals[k];
            const Complex jn =
                em * (tv.mx[k] * n.x() + tv.my[k] * n.y()) - ep * (tv.px[k] * n.x() + tv.py[k] * n.y());
            sum += fd.rule.weights[k] * jn * std::conj(qp[k]);
        }
    }
    return sum;
}

Complex FormEvaluator::form_c(const VectorXcd& phi, const VectorXcd& q) const
{
    const int nb = disc_.layout().basis_count();
    const int p = disc_.order();
    Complex sum = 0.0;
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const VectorXcd px = bd.table.dx.cast<Complex>() * block_segment(phi, b, nb);
        const VectorXcd py = bd.table.dy.cast<Complex>() * block_segment(phi, b, nb);
        const VectorXcd qx = bd.table.dx.cast<Complex>() * block_segment(q, b, nb);
        const VectorXcd qy = bd.table.dy.cast<Complex>() * block_segment(q, b, nb);
        const double vol = bd.h * bd.h / double(p * p * p);
        for (size_t k = 0; k < bd.rule.size(); ++k)
            sum += vol * bd.rule.weights[k] * (px[k] * std::conj(qx[k]) + py[k] * std::conj(qy[k]));
    }
    for (const FaceData& fd : disc_.face_data()) {
        const FacePenalty pen = face_penalty(fd, alpha0_, p);
        const VectorXcd pm = fd.minus_value.cast<Complex>() * block_segment(phi, fd.minus, nb);
        const VectorXcd qm = fd.minus_value.cast<Complex>() * block_segment(q, fd.minus, nb);
        VectorXcd pp = VectorXcd::Zero(fd.rule.size()), qp = VectorXcd::Zero(fd.rule.size());
        if (fd.plus >= 0) {
            pp = fd.plus_value.cast<Complex>() * block_segment(phi, fd.plus, nb);
            qp = fd.plus_value.cast<Complex>() * block_segment(q, fd.plus, nb);
        }
        for (size_t k = 0; k < fd.rule.size(); ++k)
            sum += pen.tau * fd.rule.weights[k] * (pm[k] - pp[k]) * std::conj(qm[k] - qp[k]);
    }
    return sum;
}

Complex FormEvaluator::rhs(const VectorXcd& v) const
{
    const int nb = disc_.layout().basis_count();
    const int p = disc_.order();
    Complex sum = 0.0;
    if (mat_.source) {
        for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
            const BlockData& bd = disc_.blocks()[b];
            const int off = disc_.layout().field_offset(b);
            const VectorXcd vx = bd.table.value.cast<Complex>() * v.segment(off, nb);
            const VectorXcd vy = bd.table.value.cast<Complex>() * v.segment(off + nb, nb);
            for (size_t k = 0; k < bd.rule.size(); ++k) {
                const ComplexVector2 J = mat_.source(bd.rule.points[k], bd.side);
                sum += bd.rule.weights[k] * (J[0] * std::conj(vx[k]) + J[1] * std::conj(vy[k]));
            }
        }
    }
    if (!mat_.boundary)
        return sum;
    const VectorXcd l1 = boundary_lifting();
    const VectorXcd lv = lifting(v);
    for (int b = 0; b < disc_.layout().num_blocks(); ++b) {
        const BlockData& bd = disc_.blocks()[b];
        const VectorXcd gv = bd.table.value.cast<Complex>() * block_segment(l1, b, nb);
        if (gv.isZero(0.0))
            continue;
        const VectorXcd cv = reduced_curl(b, v, lv);
        const double inv_mu = 1.0 / mat_.mu[index(bd.side)];
        for (size_t k = 0; k < bd.rule.size(); ++k)
            sum -= inv_mu * bd.rule.weights[k] * gv[k] * std::conj(cv[k]);
    }
    for (const FaceData& fd : disc_.face_data()) {
        if (fd.kind != FaceKind::Boundary)
            continue;
        const FacePenalty pen = face_penalty(fd, alpha0_, p);
        const FaceTraces tv = field_traces(disc_, fd, v);
        const Side side = disc_.blocks()[fd.minus].side;
        for (size_t k = 0; k < fd.rule.size(); ++k) {
            const Point tau = tangent(fd.rule.normals[k]);
            const ComplexVector2 g = mat_.boundary(fd.rule.points[k], side);
            const Complex gt = g[0] * tau.x() + g[1] * tau.y();
            const Complex vt = tv.mx[k] * tau.x() + tv.my[k] * tau.y();
            sum += pen.alpha / pen.tau * fd.rule.weights[k] * gt * std::conj(vt);
        }
    }
    return sum;
}

} // namespace uldg
