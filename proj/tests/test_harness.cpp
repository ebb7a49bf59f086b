#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "uldg/harness.hpp"

using namespace uldg;

namespace {

RunConfig parse(const std::string& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::Degenerate;
}

/// CSV with the timing column removed.
std::string strip_seconds(const std::string& csv)
{
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line))
        out += line.substr(0, line.rfind(',')) + '\n';
    return out;
}

} // namespace

TEST_CASE("defaults describe the circular inclusion case")
{
    const RunConfig c;
    CHECK(c.domain.lo.x() == -2.0);
    CHECK(c.domain.hi.y() == 2.0);
    CHECK(c.radius == doctest::Approx(std::sqrt(3.0)));
    CHECK(c.mu[0] == 2.0);
    CHECK(c.mu[1] == 1.0);
    CHECK(c.eps[0] == 2.0);
    CHECK(c.eps[1] == 1.0);
    CHECK(c.k == 5.0);
    CHECK(c.alpha0 == 1.0);
    CHECK(c.delta0 == 0.25);
    CHECK(c.refine_levels == 1);
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("config parsing")
{
    const RunConfig c = parse("# comment\n"
                              "p = 2, 3\n"
                              "n = 8,12 , 16   # trailing comment\n"
                              "\n"
                              "alpha0 = 2.5\n"
                              "delta0=0.3\n"
                              "refine_levels = 0\n"
                              "mu = 3, 1.5\n"
                              "interface = line\n"
                              "domain = -1, -1, 1, 1\n"
                              "out = result.csv\n");
    CHECK(c.ps == std::vector<int>{2, 3});
    CHECK(c.ns == std::vector<int>{8, 12, 16});
    CHECK(c.alpha0 == 2.5);
    CHECK(c.delta0 == 0.3);
    CHECK(c.refine_levels == 0);
    CHECK(c.mu[0] == 3.0);
    CHECK(c.mu[1] == 1.5);
    CHECK(c.interface == InterfaceKind::Line);
    CHECK(c.domain.lo.x() == -1.0);
    CHECK(c.domain.hi.y() == 1.0);
    CHECK(c.out == "result.csv");

    CHECK(kind_of([] { parse("colour = blue\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse("k = five\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse("k 5\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse("mu = 1\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { load_config("/nonexistent/uldg.cfg"); }) == ErrorKind::Config);
}

TEST_CASE("validation")
{
    RunConfig c;
    c.k = 0.0;
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c = RunConfig{};
    c.ns.clear();
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c = RunConfig{};
    c.delta0 = 0.6;
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c.delta0 = 0.5;
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c = RunConfig{};
    c.ps = {0};
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c = RunConfig{};
    c.eps = {2.0, -1.0};
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c = RunConfig{};
    c.refine_levels = -1;
    CHECK(kind_of([&] { validate(c); }) == ErrorKind::Config);
    c = RunConfig{};
    c.k = 0.0;
    CHECK(kind_of([&] { run_single(c, 1, 8); }) == ErrorKind::Config);
}

TEST_CASE("sweep needs three mesh sizes")
{
    RunConfig c;
    c.ns = {8, 12};
    CHECK(kind_of([&] { run_sweep(c); }) == ErrorKind::Config);
    c.ns.clear();
    CHECK(kind_of([&] { run_sweep(c); }) == ErrorKind::Config);
}

TEST_CASE("improper cut without refinement names the cell")
{
    // cells of side 0.8 with one at [-0.4, 0.4] x [1.7, 2.5]; its bottom edge crosses the circle twice
    RunConfig c;
    c.domain.lo = {-2.0, -2.3};
    c.domain.hi = {2.8, 2.5};
    c.refine_levels = 0;
    try {
        run_single(c, 1, 6);
        FAIL("expected ImproperCut");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ImproperCut);
        CHECK(std::string(e.what()).find("cell(level=0,") != std::string::npos);
    }
}

TEST_CASE("single run at p=1, n=24 emits one CSV row")
{
    RunConfig c;
    const CaseResult r = run_single(c, 1, 24);
    CHECK(r.solve.residual <= 1e-10);
    CHECK(r.errors.rel_err_X > 0.0);
    CHECK(r.errors.rel_err_X < 1.0);
    CHECK(r.errors.theta_max >= 1.0);
    CHECK(r.errors.dofs > 0);
    std::ostringstream os;
    write_csv_header(os);
    write_csv_row(os, 1, 24, r.errors, r.solve.factor_seconds + r.solve.solve_seconds);
    int lines = 0;
    for (char ch : os.str())
        lines += ch == '\n';
    CHECK(lines == 2);
}

TEST_CASE("straight-interface probe is reproduced")
{
    RunConfig c;
    c.interface = InterfaceKind::Line;
    for (int p : {1, 2}) {
        const CaseResult r = run_single(c, p, 8);
        CHECK(r.errors.rel_err_X <= 1e-9);
    }
}

TEST_CASE("sweep output is reproducible and independent of the thread count")
{
    RunConfig c;
    c.ps = {1};
    c.ns = {4, 6, 8};
    std::ostringstream a, b, t;
    const SweepResult s = run_sweep(c, &a);
    run_sweep(c, &b);
    CHECK(strip_seconds(a.str()) == strip_seconds(b.str()));
    REQUIRE(s.cases.size() == 3);
    for (const auto& cs : s.cases)
        CHECK(cs.ok);
    REQUIRE(s.rates.size() == 1);
    CHECK(s.rates[0].fitted);
    CHECK(s.rates[0].points == 3);

    setenv("ULDG_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    run_sweep(c, &t);
    unsetenv("ULDG_THREADS");
    CHECK(thread_count() == 1);
    CHECK(strip_seconds(t.str()) == strip_seconds(a.str()));

    std::ostringstream summary;
    write_summary(summary, s);
    CHECK(summary.str().find("slope") != std::string::npos);
}

TEST_CASE("failed cases are recorded, not rethrown")
{
    RunConfig c;
    c.ps = {1};
    c.ns = {1, 4, 6, 8};
    const SweepResult s = run_sweep(c);
    REQUIRE(s.cases.size() == 4);
    CHECK_FALSE(s.cases[0].ok);
    CHECK(s.cases[0].error.find("Config") != std::string::npos);
    CHECK(s.cases[1].ok);
    CHECK(s.rates[0].points == 3);
}
