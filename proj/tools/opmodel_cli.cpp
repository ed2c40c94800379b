// opmodel: runs the verification suites and writes a JSON report.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 precondition error,
// 3 I/O error, 64 usage error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "opmodel/suites.hpp"

namespace {

constexpr int exit_fail = 1;
constexpr int exit_precondition = 2;
constexpr int exit_io = 3;
constexpr int exit_usage = 64;

std::vector<double> parse_times(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double t = std::stod(item, &used);
        if (used != item.size() || !(t >= 0.0)) throw std::invalid_argument(item);
        out.push_back(t);
    }
    if (out.empty()) throw std::invalid_argument(text);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    using opmodel::suites::Params;
    CLI::App app{"Operator-model verification suites"};
    app.fallthrough();
    app.require_subcommand(1, 1);

    Params p;
    std::string times = "0.1,0.5,1,2";
    std::string out, in;
    app.add_option("--dim", p.dim, "Matrix dimension for generated inputs")->capture_default_str();
    app.add_option("--n", p.n, "Number of operators in a tuple")->capture_default_str();
    app.add_option("--trunc", p.trunc, "Hardy-space truncation N (cap on dilation truncation)")->capture_default_str();
    app.add_option("--margin", p.margin, "Margin M for truncated identities")->capture_default_str();
    app.add_option("--tol", p.tol, "Algorithm tolerance")->capture_default_str();
    app.add_option("--seed", p.seed, "Global seed")->capture_default_str();
    app.add_option("--times", times, "Comma-separated time grid")->capture_default_str();
    app.add_option("--out", out, "Report path (stdout when omitted)");
    app.add_option("--in", in, "Input JSON (matrix, matrix array, or isometry tuple)");

    using Suite = opmodel::VerificationReport (*)(const Params&);
    const std::vector<std::tuple<std::string, std::string, Suite>> commands{
        {"roundtrip", "Cogenerator <-> semigroup round trip", &opmodel::suites::roundtrip},
        {"commutant", "Commutant lifting on scalar model spaces", &opmodel::suites::commutant},
        {"normal", "Spectral models of commuting normal tuples", &opmodel::suites::normal},
        {"wold", "Slocinski-Wold decomposition of isometric tuples", &opmodel::suites::wold},
        {"dilate", "Minimal isometric dilation of doubly commuting pure tuples", &opmodel::suites::dilate},
        {"tensor-q", "Tensor splitting of joint invariant subspaces", &opmodel::suites::tensor_q},
        {"verify-all", "Every suite, including the shift semigroup checks", &opmodel::suites::verify_all},
    };
    for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }
    try {
        p.times = parse_times(times);
    } catch (const std::exception&) {
        std::cerr << "error: --times expects comma-separated non-negative numbers\n";
        return exit_usage;
    }
    if (!in.empty()) p.input = in;

    Suite run = nullptr;
    for (const auto& [name, help, fn] : commands) {
        if (app.got_subcommand(name)) run = fn;
    }

    try {
        const opmodel::VerificationReport report = run(p);
        const nlohmann::json doc = opmodel::report_to_json(report);
        if (out.empty()) {
            std::cout << doc.dump(2) << '\n';
        } else {
            opmodel::write_json_file(out, doc);
        }
        for (const auto& c : report.checks) {
            if (!c.pass) std::cerr << "FAIL " << c.name << ": " << c.residual << (c.at_least ? " < " : " > ") << c.tolerance << '\n';
        }
        std::cerr << report.suite << ": " << (report.pass() ? "pass" : "FAIL") << " (" << report.checks.size() << " checks)\n";
        return report.pass() ? 0 : exit_fail;
    } catch (const opmodel::TruncationError& e) {
        std::cerr << "truncation error: " << e.what() << '\n';
        return exit_precondition;
    } catch (const opmodel::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return exit_io;
    } catch (const opmodel::Error& e) {
        std::cerr << "precondition error: " << e.what() << '\n';
        return exit_precondition;
    }
}
