#include "fisher/cli.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "fisher/bench.hpp"
#include "fisher/fmat.hpp"
#include "fisher/solvers.hpp"

namespace fisher {

namespace {

const std::vector<std::string> kMethods{"chol", "eigh", "svd", "naive", "rvb", "cg"};

struct CommonFlags {
    std::string method = "chol";
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    double lambda = 1e-3;
    std::uint64_t seed = 0;
    int repeats = 5;
    int warmup = 2;
    std::string kind = "real";
    std::string variant = "auto";
    double tol = 1e-10;
    long max_iter = 10000;
};

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Variant resolve_variant(const std::string& name, bool complex_scores) {
    if (name == "auto") return complex_scores ? Variant::Hermitian : Variant::Plain;
    return parse_variant(name);
}

ProblemKind resolve_kind(const CommonFlags& flags) {
    const Method method = parse_method(flags.method);
    ProblemKind kind = parse_problem_kind(flags.kind);
    if (method == Method::Rvb && kind == ProblemKind::RealGaussian) kind = ProblemKind::Structured;
    return kind;
}

AnyProblem make_problem(const CommonFlags& flags, Eigen::Index n, Eigen::Index m) {
    const ProblemKind kind = resolve_kind(flags);
    if (kind == ProblemKind::ComplexGaussian)
        return generate_complex_problem(flags.seed, n, m, flags.lambda, flags.variant == "realpart");
    return generate_problem(flags.seed, n, m, flags.lambda, kind);
}

BenchOptions bench_options(const CommonFlags& flags, bool complex_scores) {
    BenchOptions options;
    options.warmup = flags.warmup;
    options.repeats = flags.repeats;
    options.variant = resolve_variant(flags.variant, complex_scores);
    options.seed = flags.seed;
    options.cg_tol = flags.tol;
    options.cg_max_iter = flags.max_iter;
    return options;
}

BenchRecord bench_problem(const AnyProblem& problem, const CommonFlags& flags) {
    const Method method = parse_method(flags.method);
    return std::visit(
        [&](const auto& p) {
            using Scalar = typename std::decay_t<decltype(p.system.v())>::Scalar;
            const BenchOptions options = bench_options(flags, is_complex_v<Scalar>);
            return time_method(p.system, method, options, p.f ? &*p.f : nullptr);
        },
        problem);
}

void report_effective_n(const BenchRecord& record, std::ostream& err) {
    if (record.effective_n != record.n)
        err << "# " << to_string(record.variant) << ": effective n = " << record.effective_n << '\n';
}

// --- gen -------------------------------------------------------------------

int cmd_gen(const CommonFlags& flags, const std::string& out_prefix, std::ostream& out) {
    const AnyProblem problem = make_problem(flags, flags.n, flags.m);
    std::visit(
        [&](const auto& p) {
            const std::string base = out_prefix;
            write_fmat(std::filesystem::path(base + ".S.fmat"), p.system.S());
            write_fmat(std::filesystem::path(base + ".v.fmat"), as_column(p.system.v()));
            out << base << ".S.fmat\n" << base << ".v.fmat\n";
            if (p.f) {
                write_fmat(std::filesystem::path(base + ".f.fmat"), as_column(*p.f));
                out << base << ".f.fmat\n";
            }
        },
        problem);
    return 0;
}

// --- solve -----------------------------------------------------------------

template <typename Scalar>
Vector<Scalar> column_of(const ScoreMatrix<Scalar>& m, const std::string& what) {
    if (m.cols() != 1) throw UsageError(what + " must be a column vector (cols = 1), got " + std::to_string(m.cols()));
    return m.col(0);
}

template <typename Scalar>
Solution<Scalar> dispatch_solve(const DampedSystem<Scalar>& system, Method method, const CommonFlags& flags) {
    switch (method) {
        case Method::Chol:
            return solve_chol(system);
        case Method::SvdEigh:
            return solve_svd_eigh(system);
        case Method::SvdDirect:
            return solve_svd_direct(system);
        case Method::Naive:
            return solve_naive(system);
        case Method::Cg: {
            Solution<Scalar> sol = solve_cg(system, flags.tol, flags.max_iter);
            if (!sol.converged)
                throw std::runtime_error("cg did not converge within " + std::to_string(flags.max_iter) +
                                         " iterations");
            return sol;
        }
        case Method::Rvb:
            break;
    }
    throw UsageError("method not available here");
}

template <typename Scalar>
void write_solution(const Solution<Scalar>& sol, const std::string& path, std::ostream& out) {
    write_fmat(std::filesystem::path(path), as_column(sol.x));
    out << "method=" << to_string(sol.method) << " variant=" << to_string(sol.variant)
        << " rel_residual=" << sol.rel_residual << " seconds=" << sol.wall_seconds << '\n';
}

int cmd_solve(const CommonFlags& flags, const std::string& scores_path, const std::string& rhs_path,
              const std::string& out_path, std::ostream& out) {
    const Method method = parse_method(flags.method);
    const AnyMatrix S_any = read_fmat(std::filesystem::path(scores_path));
    const AnyMatrix rhs_any = read_fmat(std::filesystem::path(rhs_path));

    if (const auto* S = std::get_if<ScoreMatrix<double>>(&S_any)) {
        if (resolve_variant(flags.variant, false) != Variant::Plain)
            throw UsageError("real scores only support the plain variant");
        const auto* rhs = std::get_if<ScoreMatrix<double>>(&rhs_any);
        if (!rhs) throw UsageError("real scores need a real right-hand side");
        const Vector<double> vec = column_of(*rhs, "right-hand side");
        if (method == Method::Rvb) {
            write_solution(solve_rvb(*S, flags.lambda, vec), out_path, out);
        } else {
            write_solution(dispatch_solve(DampedSystem<double>(*S, flags.lambda, vec), method, flags), out_path, out);
        }
        return 0;
    }

    const auto& S = std::get<ScoreMatrix<cplx>>(S_any);
    const Variant variant = resolve_variant(flags.variant, true);
    Vector<cplx> vec;
    if (const auto* rhs = std::get_if<ScoreMatrix<double>>(&rhs_any)) {
        vec = column_of(*rhs, "right-hand side").cast<cplx>();
    } else {
        vec = column_of(std::get<ScoreMatrix<cplx>>(rhs_any), "right-hand side");
    }
    if (variant == Variant::Plain) throw UsageError("complex scores need the hermitian or realpart variant");
    if (method == Method::Rvb) {
        if (variant != Variant::Hermitian) throw UsageError("rvb supports only the hermitian variant");
        write_solution(solve_rvb(S, flags.lambda, vec), out_path, out);
        return 0;
    }
    const DampedSystem<cplx> system(S, flags.lambda, vec);
    if (variant == Variant::Hermitian) {
        write_solution(dispatch_solve(system, method, flags), out_path, out);
    } else if (method == Method::Chol) {
        write_solution(solve_realpart(system), out_path, out);
    } else if (method == Method::Naive) {
        write_solution(solve_naive_realpart(system), out_path, out);
    } else {
        const DampedSystem<double> stacked(concat_real_imag(S), flags.lambda, system.v().real());
        Solution<double> sol = dispatch_solve(stacked, method, flags);
        sol.variant = Variant::RealPart;
        const Residual r = residual(system, sol.x, Variant::RealPart);
        sol.abs_residual = r.abs;
        sol.rel_residual = r.rel;
        write_solution(sol, out_path, out);
    }
    return 0;
}

// --- bench / scaling -------------------------------------------------------

int cmd_bench(const CommonFlags& flags, bool header, std::ostream& out, std::ostream& err) {
    const BenchRecord record = bench_problem(make_problem(flags, flags.n, flags.m), flags);
    if (header) out << csv_header() << '\n';
    out << to_csv_row(record) << '\n';
    report_effective_n(record, err);
    if (record.status != RunStatus::Ok) {
        err << "fisher-solve: " << to_string(record.status)
            << (record.message.empty() ? "" : ": " + record.message) << '\n';
        return 1;
    }
    return 0;
}

std::pair<char, Eigen::Index> parse_fix(const std::string& text) {
    const auto eq = text.find('=');
    if (eq != 1 || (text[0] != 'n' && text[0] != 'm')) throw UsageError("--fix expects n=<int> or m=<int>");
    return {text[0], std::stol(text.substr(2))};
}

struct Sweep {
    char axis = 'm';
    std::vector<Eigen::Index> sizes;
};

// axis=start:stop:count with geometrically spaced sizes.
Sweep parse_vary(const std::string& text) {
    const auto eq = text.find('=');
    if (eq != 1 || (text[0] != 'n' && text[0] != 'm'))
        throw UsageError("--vary expects n=start:stop:count or m=start:stop:count");
    std::vector<std::string> parts;
    std::stringstream ss(text.substr(2));
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw UsageError("--vary expects start:stop:count");
    const double start = std::stod(parts[0]);
    const double stop = std::stod(parts[1]);
    const long count = std::stol(parts[2]);
    if (!(start >= 1.0) || !(stop > start) || count < 2) throw UsageError("--vary needs 1 <= start < stop, count >= 2");
    Sweep sweep;
    sweep.axis = text[0];
    for (long i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        sweep.sizes.push_back(static_cast<Eigen::Index>(std::llround(start * std::pow(stop / start, t))));
    }
    return sweep;
}

int cmd_scaling(const CommonFlags& flags, const std::string& fix_text, const std::string& vary_text,
                std::ostream& out, std::ostream& err) {
    const auto [fix_axis, fix_size] = parse_fix(fix_text);
    const Sweep vary = parse_vary(vary_text);
    if (fix_axis == vary.axis) throw UsageError("--fix and --vary must name different dimensions");

    std::vector<BenchRecord> records;
    out << csv_header() << '\n';
    for (const Eigen::Index size : vary.sizes) {
        const Eigen::Index n = vary.axis == 'n' ? size : fix_size;
        const Eigen::Index m = vary.axis == 'm' ? size : fix_size;
        records.push_back(bench_problem(make_problem(flags, n, m), flags));
        out << to_csv_row(records.back()) << '\n';
        out.flush();
    }
    report_effective_n(records.front(), err);
    const ScalingFit fit = fit_scaling(records, vary.axis == 'n' ? Axis::VaryN : Axis::VaryM);
    out << "# scaling method=" << flags.method << " fixed " << fix_axis << '=' << fix_size << " vary " << vary.axis
        << " exponent=" << fit.exponent << " r_squared=" << fit.r_squared << '\n';
    return 0;
}

// --- check -----------------------------------------------------------------

double rel_error(const auto& x, const auto& reference) {
    return (x - reference).norm() / std::max(1.0, reference.norm());
}

int cmd_check(const CommonFlags& flags, double tolerance, std::ostream& out) {
    bool all_pass = true;
    auto report = [&](std::string_view name, double lambda, double err) {
        const bool pass = err <= tolerance;
        all_pass = all_pass && pass;
        out << (pass ? "PASS " : "FAIL ") << name << " lambda=" << lambda << " rel_err=" << err << '\n';
    };

    for (const double lambda : {1e-6, 1e-3, 1.0, 10.0}) {
        const Problem<double> real = generate_real_problem(flags.seed, flags.n, flags.m, lambda, true);
        const auto& sys = real.system;
        const Vector<double> reference = solve_naive(sys).x;
        report("chol", lambda, rel_error(solve_chol(sys).x, reference));
        if (flags.n <= flags.m) report("eigh", lambda, rel_error(solve_svd_eigh(sys).x, reference));
        report("svd", lambda, rel_error(solve_svd_direct(sys).x, reference));
        report("rvb", lambda, rel_error(solve_rvb(sys.S(), lambda, *real.f).x, reference));
        report("cg", lambda, rel_error(solve_cg(sys, 1e-12, 100 * flags.m).x, reference));

        const Problem<cplx> herm = generate_complex_problem(flags.seed, flags.n, flags.m, lambda, false);
        report("chol-hermitian", lambda, rel_error(solve_chol_hermitian(herm.system).x, solve_naive(herm.system).x));

        const Problem<cplx> rp = generate_complex_problem(flags.seed, flags.n, flags.m, lambda, true);
        report("chol-realpart", lambda,
               rel_error(solve_realpart(rp.system).x, solve_naive_realpart(rp.system).x));
    }
    out << (all_pass ? "check passed\n" : "check FAILED\n");
    return all_pass ? 0 : 1;
}

void add_problem_flags(CLI::App* cmd, CommonFlags& flags, bool sizes_required) {
    auto* n = cmd->add_option("--n", flags.n, "sample count")->check(CLI::PositiveNumber);
    auto* m = cmd->add_option("--m", flags.m, "parameter count")->check(CLI::PositiveNumber);
    if (sizes_required) {
        n->required();
        m->required();
    }
    cmd->add_option("--lambda", flags.lambda, "damping (> 0)")->capture_default_str();
    cmd->add_option("--seed", flags.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--kind", flags.kind, "problem kind")
        ->check(CLI::IsMember({"real", "complex", "structured"}))
        ->capture_default_str();
    cmd->add_option("--variant", flags.variant, "operator variant for complex scores")
        ->check(CLI::IsMember({"auto", "plain", "hermitian", "realpart"}))
        ->capture_default_str();
}

void add_method_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--method", flags.method, "solver")->check(CLI::IsMember(kMethods))->capture_default_str();
    cmd->add_option("--tol", flags.tol, "cg relative tolerance")->capture_default_str();
    cmd->add_option("--max-iter", flags.max_iter, "cg iteration cap")->capture_default_str();
}

void add_timing_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--repeats", flags.repeats, "measured runs")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--warmup", flags.warmup, "unmeasured runs")->check(CLI::NonNegativeNumber)->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Damped Fisher system solver and benchmark harness", "fisher-solve"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string out_path, scores_path, rhs_path, fix_text, vary_text;
    bool no_header = false;
    double check_tol = 1e-7;

    auto* gen = app.add_subcommand("gen", "write a random problem as FMAT files <out>.S.fmat, <out>.v.fmat[, <out>.f.fmat]");
    add_problem_flags(gen, flags, true);
    gen->add_option("--out", out_path, "output path prefix")->required();

    auto* solve = app.add_subcommand("solve", "solve a system stored as FMAT files and write x as FMAT");
    solve->add_option("scores", scores_path, "FMAT file with S (n x m)")->required();
    solve->add_option("rhs", rhs_path, "FMAT file with v (m x 1), or f (n x 1) for --method rvb")->required();
    solve->add_option("--lambda", flags.lambda, "damping (> 0)")->required();
    solve->add_option("--variant", flags.variant, "operator variant for complex scores")
        ->check(CLI::IsMember({"auto", "plain", "hermitian", "realpart"}));
    solve->add_option("--out", out_path, "output FMAT path for x")->required();
    add_method_flags(solve, flags);

    auto* bench = app.add_subcommand("bench", "time one method on a generated problem, print a CSV row");
    add_problem_flags(bench, flags, true);
    add_method_flags(bench, flags);
    add_timing_flags(bench, flags);
    bench->add_flag("--no-header", no_header, "omit the CSV header");

    auto* scaling = app.add_subcommand("scaling", "time one method over a size sweep and fit a power law");
    add_problem_flags(scaling, flags, false);
    add_method_flags(scaling, flags);
    add_timing_flags(scaling, flags);
    scaling->add_option("--fix", fix_text, "fixed dimension, e.g. n=2048")->required();
    scaling->add_option("--vary", vary_text, "swept dimension, e.g. m=10000:200000:5 (geometric)")->required();

    auto* check = app.add_subcommand("check", "compare every method against the dense oracle");
    check->add_option("--n", flags.n, "sample count")->required()->check(CLI::PositiveNumber);
    check->add_option("--m", flags.m, "parameter count")->required()->check(CLI::Range(1, 4096));
    check->add_option("--seed", flags.seed, "RNG seed");
    check->add_option("--tol", check_tol, "relative error tolerance")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::Success&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "fisher-solve: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        configure_threads_from_env();
        if (*gen) return cmd_gen(flags, out_path, out);
        if (*solve) return cmd_solve(flags, scores_path, rhs_path, out_path, out);
        if (*bench) return cmd_bench(flags, !no_header, out, err);
        if (*scaling) return cmd_scaling(flags, fix_text, vary_text, out, err);
        if (*check) return cmd_check(flags, check_tol, out);
    } catch (const UsageError& e) {
        err << "fisher-solve: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "fisher-solve: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace fisher
