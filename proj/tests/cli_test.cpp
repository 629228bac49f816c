#include <gtest/gtest.h>
#include <sys/wait.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("gearstab_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliResult run(const std::string& args) const {
        const auto out = dir_ / "stdout.txt";
        const auto err = dir_ / "stderr.txt";
        const std::string cmd =
            std::string("\"") + GEARSTAB_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path write(const std::string& name, const std::string& content) const {
        const auto p = dir_ / name;
        std::ofstream(p) << content;
        return p;
    }

    fs::path dir_;
};

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

double summary_value(const std::string& err, const std::string& key) {
    std::smatch m;
    const std::regex re(key + "=([-+0-9.eE]+|nan|inf)");
    if (!std::regex_search(err, m, re)) return std::nan("");
    return std::stod(m[1]);
}

}  // namespace

TEST_F(Cli, RegionCsvImplicitEuler) {
    const auto r = run("region --family bdf --order 1 --samples 8 --format csv");
    ASSERT_EQ(r.code, 0) << r.err;
    std::string header;
    const auto rows = parse_csv(r.out, &header);
    EXPECT_EQ(header, "theta,re,im");
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_NEAR(rows[4][0], M_PI, 1e-12);
    EXPECT_NEAR(rows[4][1], 2.0, 1e-12);
    EXPECT_NEAR(rows[4][2], 0.0, 1e-12);
}

TEST_F(Cli, RegionIsDeterministic) {
    const auto a = run("region --family bdf --order 6 --samples 4096 --format csv");
    const auto b = run("region --family bdf --order 6 --samples 4096 --format csv");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, RegionToFile) {
    const auto path = dir_ / "bdf2.csv";
    const auto r = run("region --family bdf --order 2 --samples 64 --out \"" + path.string() + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(parse_csv(slurp(path)).size(), 65u);
}

TEST_F(Cli, RegionSvgSeventhOrderReportsCrossingNearMinusEight) {
    const auto path = dir_ / "bdf7.svg";
    const auto r = run("region --family bdf --order 7 --format svg --out \"" + path.string() + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(path));
    boost::property_tree::ptree tree;
    ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
    EXPECT_EQ(tree.begin()->first, "svg");

    const std::regex re("intersection re=([-+0-9.eE]+) im=([-+0-9.eE]+)");
    bool near_minus_eight = false;
    for (auto it = std::sregex_iterator(r.err.begin(), r.err.end(), re); it != std::sregex_iterator(); ++it) {
        const double x = std::stod((*it)[1]);
        const double y = std::stod((*it)[2]);
        near_minus_eight = near_minus_eight || (std::abs(x + 8.0) < 1.0 && std::abs(y) < 1.0);
    }
    EXPECT_TRUE(near_minus_eight) << r.err;
}

TEST_F(Cli, RegionSvgThirdOrderDashedDelta) {
    const auto r = run("region --family bdf --order 3 --format svg");
    ASSERT_EQ(r.code, 0) << r.err;
    std::smatch m;
    ASSERT_TRUE(std::regex_search(r.out, m, std::regex("class=\"delta\" data-value=\"([-+0-9.eE]+)\"")));
    EXPECT_NEAR(std::stod(m[1]), -0.1, 0.05);
    EXPECT_NE(r.out.find("stroke-dasharray"), std::string::npos);
}

TEST_F(Cli, RegionAdamsMoulton) {
    const auto r = run("region --family am --order 3 --samples 32");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_csv(r.out).size(), 33u);
}

TEST_F(Cli, DeltaValues) {
    auto r = run("delta --order 1");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "order,delta\n1,0\n");
    r = run("delta --order 4");
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(parse_csv(r.out)[0][1], -0.7, 0.05);
    r = run("delta --order 5");
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(parse_csv(r.out)[0][1], -2.327, 0.001);
}

TEST_F(Cli, DeltaSeventhOrderRefused) {
    const auto r = run("delta --order 7");
    EXPECT_EQ(r.code, 64);
    EXPECT_NE(r.err.find("not stiffly stable"), std::string::npos);
}

TEST_F(Cli, Intersections) {
    auto r = run("intersections --order 7");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GE(parse_csv(r.out).size(), 2u);
    r = run("intersections --order 4");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "re,im\n");
}

TEST_F(Cli, IntegrateAdaptiveDahlquist) {
    const auto r = run("integrate --problem dahlquist --lambda -1 --method bdf --adaptive --rtol 1e-6");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LE(summary_value(r.err, "error"), 1e-4);
    EXPECT_NEAR(summary_value(r.err, "y_end"), 0.3678794, 1e-4);
    std::string header;
    const auto rows = parse_csv(r.out, &header);
    EXPECT_EQ(header, "x,y1,h,order,newton_iters");
    EXPECT_EQ(rows.back()[0], 1.0);
}

TEST_F(Cli, IntegrateExplicitEulerDiverges) {
    const auto r = run("integrate --problem dahlquist --lambda -1e6 --method euler --h 0.1");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GT(summary_value(r.err, "max_abs_y"), 1e10);
}

TEST_F(Cli, IntegrateHarmonicOscillatorPeriod) {
    const auto r =
        run("integrate --problem van_der_pol --mu 0 --method bdf --adaptive --rtol 1e-8 --x-end 6.283185307");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_NEAR(rows.back()[1], 2.0, 1e-4);
    EXPECT_NEAR(rows.back()[2], 0.0, 1e-4);
}

TEST_F(Cli, IntegrateLinearSystemFromFile) {
    const auto m = write("a.txt", "2\n0 1\n-2 -3\n");
    const auto r = run("integrate --problem linear_system --matrix \"" + m.string() + "\" --y0 1 0 --method bdf --order 4 --h 0.01");
    ASSERT_EQ(r.code, 0) << r.err;
    // The self-starting ramp begins with an implicit Euler step, which dominates the error.
    EXPECT_NEAR(parse_csv(r.out).back()[1], 2.0 * std::exp(-1.0) - std::exp(-2.0), 1e-4);
}

TEST_F(Cli, IntegrateUsageErrors) {
    EXPECT_EQ(run("integrate --problem dahlquist --method bdf").code, 64);
    EXPECT_EQ(run("integrate --problem lorenz --method bdf --h 0.1").code, 64);
    EXPECT_EQ(run("integrate --problem dahlquist --method rk4 --adaptive").code, 64);
}

TEST_F(Cli, RatioDiagonal) {
    const auto m = write("d.txt", "2\n-1000 0\n0 -1\n");
    const auto r = run("ratio \"" + m.string() + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("stiffness_ratio,1000\n"), std::string::npos);
}

TEST_F(Cli, RatioCompanion) {
    const auto m = write("c.txt", "2\n0 1\n-2 -3\n");
    const auto r = run("ratio \"" + m.string() + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    const std::regex re("stiffness_ratio,([-+0-9.eE]+)");
    std::smatch sm;
    ASSERT_TRUE(std::regex_search(r.out, sm, re));
    EXPECT_NEAR(std::stod(sm[1]), 2.0, 1e-10);
}

TEST_F(Cli, RatioRejectsUnstableSpectrum) {
    const auto m = write("i.txt", "2\n1 0\n0 1\n");
    const auto r = run("ratio \"" + m.string() + "\"");
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("offending eigenvalue 1,0"), std::string::npos) << r.err;
}

TEST_F(Cli, RatioParseErrors) {
    EXPECT_EQ(run("ratio \"" + write("bad1.txt", "2\n1 0\n0\n").string() + "\"").code, 65);
    EXPECT_EQ(run("ratio \"" + write("bad2.txt", "2\n1 x\n0 1\n").string() + "\"").code, 65);
    EXPECT_EQ(run("ratio \"" + write("bad3.txt", "0\n").string() + "\"").code, 65);
    EXPECT_EQ(run("ratio \"" + write("bad4.txt", "1\n-1\n5\n").string() + "\"").code, 65);
}

TEST_F(Cli, IoAndUsageExitCodes) {
    EXPECT_EQ(run("ratio \"" + (dir_ / "missing.txt").string() + "\"").code, 2);
    EXPECT_EQ(run("region --order 2 --out /nonexistent-dir/x.csv").code, 2);
    EXPECT_EQ(run("region --family rk --order 2").code, 64);
    EXPECT_EQ(run("region --order 9").code, 64);
    EXPECT_EQ(run("region").code, 64);
    EXPECT_EQ(run("frobnicate").code, 64);
    EXPECT_EQ(run("--help").code, 0);
}
