#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = OBSCAT_CLI_PATH;

int run_cli(const std::string& args) {
    const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path work_dir() {
    const fs::path d = fs::temp_directory_path() / "obscat_cli_test";
    fs::create_directories(d);
    return d;
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = work_dir() / name;
    std::ofstream f(p);
    f << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CsvRow {
    double theta, phi;
    std::complex<double> a;
};

std::vector<CsvRow> read_csv(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::string line;
    std::getline(f, line);
    REQUIRE(line == "theta,phi,re_A,im_A");
    std::vector<CsvRow> rows;
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        CsvRow r;
        char c;
        double re, im;
        ss >> r.theta >> c >> r.phi >> c >> re >> c >> im;
        r.a = {re, im};
        rows.push_back(r);
    }
    return rows;
}

const char* kSphereShape = R"({"lmax": 0, "coeffs": [3.5449077018110318], "center": [0, 0, 0]})";

} // namespace

TEST_CASE("mie command emits the expected grid and is byte-deterministic") {
    const auto cfg = write_config("mie.json", std::string(R"({
        "radius": 1.0, "k": 2.0, "bc": {"type": "dirichlet"},
        "alpha": [0.0, 0.0, 1.0], "grid": {"n_theta": 8, "n_phi": 16}})"));
    const fs::path o1 = work_dir() / "mie1", o2 = work_dir() / "mie2";
    REQUIRE(run_cli("mie --config " + cfg.string() + " --out " + o1.string()) == 0);
    REQUIRE(run_cli("mie --config " + cfg.string() + " --out " + o2.string()) == 0);
    const auto rows = read_csv(o1 / "mie.csv");
    CHECK(rows.size() == 8 * 16);
    CHECK(slurp(o1 / "mie.csv") == slurp(o2 / "mie.csv"));
    CHECK(slurp(o1 / "mie.json") == slurp(o2 / "mie.json"));
}

TEST_CASE("forward agrees with the sphere oracle across commands") {
    const std::string common = R"("k": 2.0, "bc": {"type": "dirichlet"},
        "alpha": [0.0, 0.0, 1.0], "grid": {"n_theta": 8, "n_phi": 16})";
    const auto fcfg = write_config(
        "fwd.json", "{\"shape\": " + std::string(kSphereShape) + ", " + common + "}");
    const auto mcfg = write_config("mie_x.json", "{\"radius\": 1.0, " + common + "}");
    const fs::path fo = work_dir() / "fwd", mo = work_dir() / "mie_x";
    REQUIRE(run_cli("forward --config " + fcfg.string() + " --out " + fo.string()) == 0);
    REQUIRE(run_cli("mie --config " + mcfg.string() + " --out " + mo.string()) == 0);

    const auto fr = read_csv(fo / "far_field.csv");
    const auto mr = read_csv(mo / "mie.csv");
    REQUIRE(fr.size() == mr.size());
    for (std::size_t i = 0; i < fr.size(); ++i) {
        CHECK(fr[i].theta == mr[i].theta);
        CHECK(std::abs(fr[i].a - mr[i].a) < 1e-6);
    }

    // repeated forward runs are byte-identical
    const fs::path fo2 = work_dir() / "fwd2";
    REQUIRE(run_cli("forward --config " + fcfg.string() + " --out " + fo2.string()) == 0);
    CHECK(slurp(fo / "far_field.csv") == slurp(fo2 / "far_field.csv"));
}

TEST_CASE("config errors exit with code 2") {
    CHECK(run_cli("mie --config /nonexistent/x.json") == 2);

    const auto bad = write_config("bad.json", "{\"radius\": 1.0, \"k\": ");
    CHECK(run_cli("mie --config " + bad.string()) == 2);

    const auto unknown = write_config("unknown.json", R"({
        "radius": 1.0, "k": 2.0, "bc": {"type": "dirichlet"}, "typo_key": 3})");
    CHECK(run_cli("mie --config " + unknown.string()) == 2);

    const auto badres = write_config("okay.json", R"({
        "radius": 1.0, "k": 2.0, "bc": {"type": "dirichlet"}})");
    CHECK(run_cli("mie --config " + badres.string() + " --resolution turbo") == 2);
}

TEST_CASE("intersecting obstacle pair exits with the out-of-scope code") {
    const auto cfg = write_config("lemma2_intersect.json", R"({
        "shape1": {"lmax": 0, "coeffs": [3.5449077018110318], "center": [0.5, 0, 0]},
        "shape2": {"lmax": 0, "coeffs": [3.5449077018110318], "center": [-0.5, 0, 0]},
        "bc1": {"type": "dirichlet"}, "bc2": {"type": "dirichlet"},
        "k": 1.5, "alpha": [0, 0, 1], "beta": [1, 0, 0]})");
    CHECK(run_cli("verify lemma2 --config " + cfg.string() + " --out " +
                  (work_dir() / "l2x").string()) == 3);
}

TEST_CASE("verify reciprocity passes on the sphere and writes a report") {
    const auto cfg = write_config("recip.json",
                                  "{\"shape\": " + std::string(kSphereShape) +
                                      R"(, "bc": {"type": "dirichlet"}, "k": 2.0,
                                         "n_pairs": 5, "seed": 11, "tolerance": 1e-6})");
    const fs::path o = work_dir() / "recip";
    REQUIRE(run_cli("verify reciprocity --config " + cfg.string() + " --out " + o.string()) == 0);
    const std::string rep = slurp(o / "verify_reciprocity.json");
    CHECK(rep.find("\"pass\": true") != std::string::npos);

    CHECK(run_cli("verify nosuchcheck --config " + cfg.string()) == 2);
}

TEST_CASE("invert recovers a sphere radius end to end") {
    // generate data with the forward command, then invert it
    const auto fcfg = write_config(
        "inv_data.json", "{\"shape\": " + std::string(kSphereShape) +
                             R"(, "k": 1.5, "bc": {"type": "dirichlet"},
                                "alpha": [0, 0, 1], "grid": {"n_theta": 10, "n_phi": 20}})");
    const fs::path dout = work_dir() / "inv_data";
    REQUIRE(run_cli("forward --config " + fcfg.string() + " --out " + dout.string()) == 0);

    const auto icfg = write_config(
        "invert.json",
        "{\"data_csv\": \"" + (dout / "far_field.csv").string() + "\", \"data_sidecar\": \"" +
            (dout / "far_field.json").string() +
            R"(", "init": {"lmax": 0, "coeffs": [3.1904169316299286], "center": [0, 0, 0]},
               "lmax_recon": 0, "residual_tol": 1e-4, "src_n_theta": 12, "tol": 1e-4})");
    const fs::path iout = work_dir() / "inv_out";
    REQUIRE(run_cli("invert --config " + icfg.string() + " --out " + iout.string()) == 0);

    const std::string shape_json = slurp(iout / "recovered_shape.json");
    // c00 = radius * sqrt(4 pi); accept 3.544 +- 0.004 as text match on the prefix
    CHECK(shape_json.find("3.54") != std::string::npos);
    const std::string rep = slurp(iout / "invert_report.json");
    CHECK(rep.find("\"converged\": true") != std::string::npos);
    CHECK(rep.find("\"n_samples\": 200") != std::string::npos);
}

TEST_CASE("classify-bc identifies sound-soft data") {
    const auto fcfg = write_config(
        "cls_data.json", "{\"shape\": " + std::string(kSphereShape) +
                             R"(, "k": 1.5, "bc": {"type": "dirichlet"},
                                "alpha": [0, 0, 1], "grid": {"n_theta": 8, "n_phi": 16}})");
    const fs::path dout = work_dir() / "cls_data";
    REQUIRE(run_cli("forward --config " + fcfg.string() + " --out " + dout.string()) == 0);

    const auto ccfg = write_config(
        "classify.json",
        "{\"data_csv\": \"" + (dout / "far_field.csv").string() + "\", \"data_sidecar\": \"" +
            (dout / "far_field.json").string() + "\", \"shape\": " + std::string(kSphereShape) +
            ", \"src_n_theta\": 12, \"tol\": 5e-3}");
    const fs::path cout_dir = work_dir() / "cls_out";
    REQUIRE(run_cli("classify-bc --config " + ccfg.string() + " --out " + cout_dir.string()) == 0);
    const std::string rep = slurp(cout_dir / "classify_bc.json");
    CHECK(rep.find("\"bc\": \"dirichlet\"") != std::string::npos);
    CHECK(rep.find("\"ambiguous\": false") != std::string::npos);
}

TEST_CASE("gapscan emits one row per candidate with positive gaps") {
    const auto cfg = write_config(
        "gap.json", "{\"truth\": " + std::string(kSphereShape) +
                        R"(, "bc": {"type": "dirichlet"}, "k0": 1.5, "alpha0": [0, 0, 1],
                           "preset": "dilate", "factors": [1.05, 1.1, 1.2],
                           "grid": {"n_theta": 8, "n_phi": 16}})");
    const fs::path o = work_dir() / "gap";
    REQUIRE(run_cli("gapscan --config " + cfg.string() + " --out " + o.string()) == 0);
    std::ifstream csv(o / "gapscan.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "shape_id,d_shape,d_ff");
    std::vector<double> gaps;
    while (std::getline(csv, line)) {
        const auto p1 = line.find(','), p2 = line.rfind(',');
        gaps.push_back(std::stod(line.substr(p2 + 1)));
    }
    REQUIRE(gaps.size() == 3);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        CHECK(gaps[i] > 1e-4); // distinct shapes leave a visible far-field gap
        if (i > 0) CHECK(gaps[i] > gaps[i - 1]);
    }
}
