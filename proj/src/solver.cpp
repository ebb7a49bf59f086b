#include "uldg/solver.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>

#include <dlfcn.h>
#include <umfpack.h>

#ifndef ULDG_UMFPACK_LIBRARY
#define ULDG_UMFPACK_LIBRARY "libumfpack.so.5"
#endif

namespace uldg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/* UMFPACK is loaded at run time. OpenBLAS picks its kernels when it is first
   loaded, and its Cooperlake dgemm returns wrong results on some AVX-512
   hosts; pinning the SkylakeX kernels beforehand avoids that. */
struct Umfpack {
    decltype(&umfpack_di_defaults) di_defaults;
    decltype(&umfpack_di_symbolic) di_symbolic;
    decltype(&umfpack_di_numeric) di_numeric;
    decltype(&umfpack_di_solve) di_solve;
    decltype(&umfpack_di_free_symbolic) di_free_symbolic;
    decltype(&umfpack_di_free_numeric) di_free_numeric;
    decltype(&umfpack_zi_defaults) zi_defaults;
    decltype(&umfpack_zi_symbolic) zi_symbolic;
    decltype(&umfpack_zi_numeric) zi_numeric;
    decltype(&umfpack_zi_solve) zi_solve;
    decltype(&umfpack_zi_free_symbolic) zi_free_symbolic;
    decltype(&umfpack_zi_free_numeric) zi_free_numeric;
};

template <class F>
void bind(void* lib, F& f, const char* name)
{
    f = reinterpret_cast<F>(dlsym(lib, name));
    if (!f)
        throw Error(ErrorKind::SingularMatrix, std::string("sparse LU library lacks ") + name);
}

const Umfpack& umfpack()
{
    static Umfpack api;
    static std::once_flag once;
    std::call_once(once, [] {
#if defined(__x86_64__)
        if (__builtin_cpu_supports("avx512f"))
            setenv("OPENBLAS_CORETYPE", "SkylakeX", 0);
#endif
        void* lib = dlopen(ULDG_UMFPACK_LIBRARY, RTLD_NOW | RTLD_LOCAL);
        if (!lib)
            throw Error(ErrorKind::SingularMatrix, std::string("cannot load UMFPACK: ") + dlerror());
        bind(lib, api.di_defaults, "umfpack_di_defaults");
        bind(lib, api.di_symbolic, "umfpack_di_symbolic");
        bind(lib, api.di_numeric, "umfpack_di_numeric");
        bind(lib, api.di_solve, "umfpack_di_solve");
        bind(lib, api.di_free_symbolic, "umfpack_di_free_symbolic");
        bind(lib, api.di_free_numeric, "umfpack_di_free_numeric");
        bind(lib, api.zi_defaults, "umfpack_zi_defaults");
        bind(lib, api.zi_symbolic, "umfpack_zi_symbolic");
        bind(lib, api.zi_numeric, "umfpack_zi_numeric");
        bind(lib, api.zi_solve, "umfpack_zi_solve");
        bind(lib, api.zi_free_symbolic, "umfpack_zi_free_symbolic");
        bind(lib, api.zi_free_numeric, "umfpack_zi_free_numeric");
    });
    return api;
}

void check_status(int status, const char* stage)
{
    if (status == UMFPACK_OK)
        return;
    if (status == UMFPACK_WARNING_singular_matrix)
        throw Error(ErrorKind::SingularMatrix,
                    std::string(stage) + ": matrix is singular; the wave number may sit on a discrete eigenvalue");
    if (status == UMFPACK_ERROR_out_of_memory)
        throw Error(ErrorKind::SingularMatrix, std::string(stage) + ": out of memory");
    throw Error(ErrorKind::SingularMatrix, std::string(stage) + " failed with UMFPACK status " + std::to_string(status));
}

void fill_report(SolveReport& rep, const double* info)
{
    rep.rcond = info[UMFPACK_RCOND];
    rep.peak_memory_bytes = info[UMFPACK_PEAK_MEMORY] * info[UMFPACK_SIZE_OF_UNIT];
    rep.lu_nonzeros = long(info[UMFPACK_LNZ] + info[UMFPACK_UNZ]);
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

template <class Matrix>
void check_residual(const Matrix& A, const Eigen::VectorXcd& x, const Eigen::VectorXcd& b, double tol,
                    SolveReport& rep)
{
    const double nb = b.norm();
    const Eigen::VectorXcd r = A * x - b;
    rep.residual = nb > 0.0 ? r.norm() / nb : r.norm();
    if (!(rep.residual <= tol))
        throw Error(ErrorKind::ResidualTooLarge,
                    "relative residual " + sci(rep.residual) + " above " + sci(tol));
}

void require_square(long rows, long cols, long n)
{
    if (rows != cols || rows != n)
        throw Error(ErrorKind::DomainError, "solve needs a square matrix matching the right-hand side");
}

/* Nested dissection with the unsymmetric strategy: on the DG saddle systems
   the symmetric strategy roughly doubles the fill through off-diagonal pivots. */
void choose_ordering(double* control)
{
    control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_UNSYMMETRIC;
#ifdef UMFPACK_ORDERING_METIS
    control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
#endif
}

} // namespace

SolveResult solve(const RealSparse& matrix, const Eigen::VectorXcd& rhs, double tolerance)
{
    require_square(matrix.rows(), matrix.cols(), rhs.size());
    const Umfpack& lu = umfpack();
    RealSparse compressed;
    if (!matrix.isCompressed()) {
        compressed = matrix;
        compressed.makeCompressed();
    }
    const RealSparse& A = matrix.isCompressed() ? matrix : compressed;
    const int n = int(A.rows());
    double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
    lu.di_defaults(control);
    choose_ordering(control);

    SolveResult out;
    auto t0 = Clock::now();
    void* symbolic = nullptr;
    void* numeric = nullptr;
    int status = lu.di_symbolic(n, n, A.outerIndexPtr(), A.innerIndexPtr(), A.valuePtr(), &symbolic, control, info);
    check_status(status, "symbolic factorization");
    status = lu.di_numeric(A.outerIndexPtr(), A.innerIndexPtr(), A.valuePtr(), symbolic, &numeric, control, info);
    lu.di_free_symbolic(&symbolic);
    fill_report(out.report, info);
    if (status != UMFPACK_OK) {
        lu.di_free_numeric(&numeric);
        check_status(status, "numeric factorization");
    }
    out.report.factor_seconds = seconds_since(t0);

    t0 = Clock::now();
    auto apply_inverse = [&](const Eigen::VectorXcd& b) -> Eigen::VectorXcd {
        Eigen::VectorXd re = b.real(), im = b.imag();
        Eigen::VectorXd xr(n), xi(n);
        int st = lu.di_solve(UMFPACK_A, A.outerIndexPtr(), A.innerIndexPtr(), A.valuePtr(), xr.data(), re.data(),
                             numeric, control, info);
        if (st == UMFPACK_OK)
            st = lu.di_solve(UMFPACK_A, A.outerIndexPtr(), A.innerIndexPtr(), A.valuePtr(), xi.data(), im.data(),
                             numeric, control, info);
        if (st != UMFPACK_OK) {
            lu.di_free_numeric(&numeric);
            check_status(st, "solve");
        }
        Eigen::VectorXcd x(n);
        x.real() = xr;
        x.imag() = xi;
        return x;
    };
    out.x = apply_inverse(rhs);
    lu.di_free_numeric(&numeric);
    out.report.solve_seconds = seconds_since(t0);
    check_residual(A, out.x, rhs, tolerance, out.report);
    return out;
}

SolveResult solve(const ComplexSparse& matrix, const Eigen::VectorXcd& rhs, double tolerance)
{
    require_square(matrix.rows(), matrix.cols(), rhs.size());
    const Umfpack& lu = umfpack();
    ComplexSparse A = matrix;
    A.makeCompressed();
    const int n = int(A.rows());
    double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
    lu.zi_defaults(control);
    choose_ordering(control);
    // packed storage: interleaved real and imaginary parts, imaginary pointer null
    double* ax = reinterpret_cast<double*>(A.valuePtr());

    SolveResult out;
    auto t0 = Clock::now();
    void* symbolic = nullptr;
    void* numeric = nullptr;
    int status = lu.zi_symbolic(n, n, A.outerIndexPtr(), A.innerIndexPtr(), ax, nullptr, &symbolic, control, info);
    check_status(status, "symbolic factorization");
    status = lu.zi_numeric(A.outerIndexPtr(), A.innerIndexPtr(), ax, nullptr, symbolic, &numeric, control, info);
    lu.zi_free_symbolic(&symbolic);
    fill_report(out.report, info);
    if (status != UMFPACK_OK) {
        lu.zi_free_numeric(&numeric);
        check_status(status, "numeric factorization");
    }
    out.report.factor_seconds = seconds_since(t0);

    t0 = Clock::now();
    Eigen::VectorXcd b = rhs;
    out.x.resize(n);
    status = lu.zi_solve(UMFPACK_A, A.outerIndexPtr(), A.innerIndexPtr(), ax, nullptr,
                         reinterpret_cast<double*>(out.x.data()), nullptr, reinterpret_cast<double*>(b.data()), nullptr,
                         numeric, control, info);
    lu.zi_free_numeric(&numeric);
    check_status(status, "solve");
    out.report.solve_seconds = seconds_since(t0);
    check_residual(A, out.x, rhs, tolerance, out.report);
    return out;
}

SolveResult solve(const AssembledSystem& system, double tolerance)
{
    return solve(system.matrix, system.rhs, tolerance);
}

} // namespace uldg
