#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hocr/cli.hpp"

using namespace hocr;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    REQUIRE(f.good());
    f << text;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

const char* kPlainOrbitFile = R"model(
[coordinates]
r: 1
theta: 1

[lagrangian]
1/2*r'^2 + 1/2*r^2*theta'^2 + 1/r

[symmetry]
coordinate = r
A = 2
B = 3
Lambda = -2

[initial]
r = 1.0
r' = 0.1
theta = 0.0
theta' = 0.6
)model";

const char* kCoupledOrbitFile = R"model(
[coordinates]
r: 1
theta: 1

[parameters]
C = 1.0
D = 0.5

[lagrangian]
1/2*r'^2 + 1/2*r^2*theta'^2 + C/r + D*r^2

[symmetry]
coordinate = r
A = 2
B = 3
Lambda = -2

[initial]
r = 1.0
r' = 0.1
theta = 0.0
theta' = 0.6
)model";

const char* kNoSymmetryFile = R"model(
[coordinates]
q: 1

[lagrangian]
1/2*q'^2 - 1/2*q^2

[initial]
q = 1.0
q' = 0.0
)model";

}  // namespace

TEST_CASE("list prints the catalog") {
    CliRun r = run({"list"});
    CHECK(r.code == 0);
    CHECK(r.out.find("pais-uhlenbeck") != std::string::npos);
    CHECK(r.out.find("modified-kepler") != std::string::npos);
    CHECK(r.out.find("flrw-lapse") != std::string::npos);
    CHECK(count_lines(r.out) == 7);
}

TEST_CASE("reduce prints the reduction artifacts") {
    CliRun r = run({"reduce", "--model", "pais-uhlenbeck"});
    CHECK(r.code == 0);
    CHECK(r.out.find("f = ") != std::string::npos);
    CHECK(r.out.find("S = ") != std::string::npos);
    CHECK(r.out.find("L^H = ") != std::string::npos);
    CHECK(r.out.find("H^c = ") != std::string::npos);
    CHECK(r.out.find("chi") != std::string::npos);
    CHECK(r.out.find("forward map") != std::string::npos);
    CHECK(r.out.find("inverse map") != std::string::npos);
    CHECK(r.out.find("reparameterized = false") != std::string::npos);

    CliRun k = run({"reduce", "--model", "modified-kepler"});
    CHECK(k.code == 0);
    CHECK(k.out.find("reparameterized = true") != std::string::npos);
    CHECK(k.out.find("dtau/dt = exp((-3)*rho)") != std::string::npos);
}

TEST_CASE("reduce rejects bad sources with exit 2") {
    CHECK(run({"reduce", "--model", "nope"}).code == 2);
    CHECK(run({"reduce"}).code == 2);
    CHECK(run({"reduce", "--model", "flrw", "--file", "x.model"}).code == 2);

    write_file("cli_no_symmetry.model", kNoSymmetryFile);
    CliRun r = run({"reduce", "--file", "cli_no_symmetry.model"});
    CHECK(r.code == 2);
    CHECK(r.err.find("symmetry") != std::string::npos);
}

TEST_CASE("reduce with energy promotion reports lambda_E") {
    write_file("cli_plain_orbit.model", kPlainOrbitFile);
    CliRun r = run({"reduce", "--file", "cli_plain_orbit.model", "--promote-energy"});
    CHECK(r.code == 0);
    CHECK(r.out.find("lambda_E = 2/3") != std::string::npos);
    CHECK(r.out.find("z_E") != std::string::npos);
}

TEST_CASE("reduce with coupling promotion reports the solved weights") {
    write_file("cli_coupled_orbit.model", kCoupledOrbitFile);
    CliRun r = run({"reduce", "--file", "cli_coupled_orbit.model", "--promote-coupling", "D"});
    CHECK(r.code == 0);
    CHECK(r.out.find("weight z_D = ") != std::string::npos);
}

TEST_CASE("simulate writes a deterministic csv trajectory") {
    std::vector<std::string> args{"simulate", "--model", "pais-uhlenbeck",
                                  "--t-end", "1.0", "--dt", "0.01"};
    CliRun r = run(args);
    CHECK(r.code == 0);
    CHECK(r.out.rfind("time,", 0) == 0);
    CHECK(r.out.find("f_core") != std::string::npos);
    CHECK(count_lines(r.out) == 102);  // header + 101 samples

    // bit-for-bit reproducible
    CHECK(run(args).out == r.out);

    // 17-significant-digit columns survive a double round trip
    std::istringstream rows(r.out);
    std::string header, first;
    std::getline(rows, header);
    std::getline(rows, first);
    CHECK(first.rfind("0,", 0) == 0);
    size_t comma = first.find(',');
    std::string second_field = first.substr(comma + 1, first.find(',', comma + 1) - comma - 1);
    CHECK(std::stod(second_field) == 0.0);  // rho(0) = 2 log q(0) = 0
}

TEST_CASE("simulate with a zero-length horizon emits a single row") {
    CliRun r = run({"simulate", "--model", "pais-uhlenbeck", "--t-end", "0"});
    CHECK(r.code == 0);
    CHECK(count_lines(r.out) == 2);
}

TEST_CASE("simulate reduced with co-integrated time exports rho and t_phys") {
    CliRun r = run({"simulate", "--model", "modified-kepler", "--system", "reduced",
                    "--t-end", "1.0", "--co-integrate-time"});
    CHECK(r.code == 0);
    std::string header = r.out.substr(0, r.out.find('\n'));
    CHECK(header.find(",rho") != std::string::npos);
    CHECK(header.find(",t_phys") != std::string::npos);
    CHECK(header.find(",S") != std::string::npos);
    CHECK(header.find(",f_core") != std::string::npos);
}

TEST_CASE("simulate emits json when asked") {
    CliRun r = run({"simulate", "--model", "pais-uhlenbeck", "--t-end", "0.5",
                    "--dt", "0.1", "--format", "json"});
    CHECK(r.code == 0);
    CHECK(r.out.find("\"columns\"") != std::string::npos);
    CHECK(r.out.find("\"rows\"") != std::string::npos);
    CHECK(r.out.find("\"model\": \"pais-uhlenbeck\"") != std::string::npos);
}

TEST_CASE("simulate writes to a file with --output") {
    CliRun r = run({"simulate", "--model", "pais-uhlenbeck", "--t-end", "0.1",
                    "--dt", "0.05", "--output", "cli_traj.csv"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream f("cli_traj.csv");
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header.rfind("time,", 0) == 0);
}

TEST_CASE("verify exits 0 on a passing catalog model") {
    CliRun r = run({"verify", "--model", "pais-uhlenbeck", "--t-end", "10"});
    CHECK(r.code == 0);
    CHECK(r.out.find("check cross-check-full-vs-reduced:") != std::string::npos);
    CHECK(r.out.find("pass=true") != std::string::npos);

    CliRun j = run({"verify", "--model", "pais-uhlenbeck", "--t-end", "10",
                    "--format", "json"});
    CHECK(j.code == 0);
    CHECK(j.out.find("\"all_pass\": true") != std::string::npos);
}

TEST_CASE("verify exits 2 on a corrupted model file") {
    write_file("cli_corrupt.model", "[coordinates]\nq 2\n[lagrangian]\nq'^2\n");
    CliRun r = run({"verify", "--file", "cli_corrupt.model"});
    CHECK(r.code == 2);
    CHECK(r.err.find("line") != std::string::npos);
}
