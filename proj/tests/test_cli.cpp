#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "changepoint/errors.hpp"
#include "changepoint/estimators.hpp"
#include "changepoint/exactdist.hpp"
#include "changepoint/serialize.hpp"
#include "cli.hpp"
#include "fixtures.hpp"

using namespace changepoint;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "changepoint");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("changepoint_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& body) const
    {
        std::ofstream(path(name)) << body;
        return path(name);
    }

    std::string write_dataset(const std::string& name, const Eigen::MatrixXd& y,
                              std::optional<long> origin = std::nullopt) const
    {
        std::ostringstream s;
        if (origin) s << "time,";
        for (long j = 0; j < y.cols(); ++j) s << (j ? "," : "") << "c" << j + 1;
        s << '\n';
        for (long i = 0; i < y.rows(); ++i) {
            if (origin) s << *origin + i << ',';
            for (long j = 0; j < y.cols(); ++j) s << (j ? "," : "") << io::format_double(y(i, j));
            s << '\n';
        }
        return write(name, s.str());
    }

    static std::string slurp(const std::string& p)
    {
        std::ifstream in(p);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, DistWritesPmfWithAppendixLevel)
{
    const auto csv = path("pmf.csv");
    const auto r = run({"dist", "--eta", "1.6", "--tol", "1e-10", "--out", csv});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(csv);
    const auto rows = io::read_pmf_csv(in);
    double s = 0;
    for (const auto& [k, p] : rows)
        if (std::labs(k) <= 4) s += p;
    EXPECT_NEAR(s, 0.965, 0.002);
    EXPECT_TRUE(fs::exists(path("pmf.json")));
    const auto summary = json::parse(r.out);
    EXPECT_GT(summary["variance"].get<double>(), 0.0);
    EXPECT_EQ(summary["K"].get<long>() * 2 + 1, static_cast<long>(rows.size()));
}

TEST_F(CliTest, DistVerifyRoundTrip)
{
    const auto r = run({"dist", "--eta", "1.0", "--out", path("p.csv"), "--verify"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json::parse(r.out)["verified"].get<bool>());

    const auto pmf = exactdist::build_pmf(1.0);
    const auto back = io::pmf_from_json(json::parse(slurp(path("p.json"))));
    EXPECT_EQ(back.values(), pmf.values());
    EXPECT_EQ(back.no_ladder(), pmf.no_ladder());
    EXPECT_EQ(back.tail_mass_bound(), pmf.tail_mass_bound());
}

TEST_F(CliTest, DistLargeAndTinyEta)
{
    const auto big = run({"dist", "--eta", "10"});
    ASSERT_EQ(big.code, 0) << big.err;
    EXPECT_GT(json::parse(big.out)["prob_zero"].get<double>(), 0.999);

    const auto tiny = run({"dist", "--eta", "0.01"});
    EXPECT_EQ(tiny.code, cli::kExitUsage);
    EXPECT_NE(tiny.err.find("eta"), std::string::npos);
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(run({}).code, cli::kExitUsage);
    EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
    EXPECT_EQ(run({"dist"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"dist", "--eta", "abc"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"dist", "--eta", "1", "--tol", "0.1"}).code, cli::kExitUsage);
}

TEST_F(CliTest, CiAppendixYears)
{
    const auto r = run({"ci", "--eta", "1.52", "--level", "0.956", "--tau", "14", "--n", "40", "--origin", "1951"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["calendar_lower"].get<long>(), 1960);
    EXPECT_EQ(j["calendar_upper"].get<long>(), 1968);
}

TEST_F(CliTest, AnalyzeSyntheticAppendixData)
{
    // Search construction seeds until the profile MLE lands on the built-in split.
    model::Dataset data;
    for (std::uint64_t seed = 1;; ++seed) {
        ASSERT_LT(seed, 500u);
        data = fixtures::engineered_dataset(40, 14, fixtures::appendix_mu1(), fixtures::appendix_mu2(),
                                            fixtures::appendix_sigma(), seed);
        if (estimators::mle_profile(data).tau_hat == 14) break;
    }
    const auto csv = write_dataset("nac.csv", data.series, 1951);
    const auto out = path("report.json");
    const auto r = run({"analyze", "--in", csv, "--level", "0.965", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(slurp(out));
    EXPECT_NEAR(j["eta_hat"].get<double>(), 1.60, 0.02);
    EXPECT_EQ(j["estimate"]["tau_hat"].get<long>(), 14);
    EXPECT_EQ(j["unconditional_interval"]["calendar_lower"].get<long>(), 1960);
    EXPECT_EQ(j["unconditional_interval"]["calendar_upper"].get<long>(), 1968);
    EXPECT_EQ(j["detection"]["p"].get<long>(), 3);
    EXPECT_TRUE(j.contains("conditional_interval"));
    EXPECT_EQ(j["residuals"]["mahalanobis_sq"].size(), 40u);
    EXPECT_FALSE(r.out.empty());
}

TEST_F(CliTest, AnalyzeNullDataRarelySignificant)
{
    int quiet = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto csv = write_dataset("null.csv", fixtures::gaussian_matrix(100, 1, 5000 + seed));
        const auto r = run({"analyze", "--in", csv});
        ASSERT_EQ(r.code, 0) << r.err;
        quiet += json::parse(r.out)["detection"]["p_value"].get<double>() > 0.05;
    }
    EXPECT_GE(quiet, 90);
}

TEST_F(CliTest, AnalyzeSingleColumnIsUnivariate)
{
    Eigen::MatrixXd y = fixtures::gaussian_matrix(50, 3, 8);
    y.bottomRows(20).array() += 1.5;
    const auto csv = write_dataset("three.csv", y);
    const auto r = run({"analyze", "--in", csv, "--columns", "c2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["detection"]["p"].get<long>(), 1);
    EXPECT_EQ(j["d"].get<long>(), 1);
}

TEST_F(CliTest, AnalyzeErrors)
{
    const auto flat = write_dataset("flat.csv", Eigen::MatrixXd::Ones(30, 2));
    EXPECT_EQ(run({"analyze", "--in", flat}).code, cli::kExitDegenerate);

    const auto bad = write("bad.csv", "a,b\n1,2\n3,x\n");
    const auto r = run({"analyze", "--in", bad});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("row 3, column 2"), std::string::npos) << r.err;

    const auto neg = write_dataset("neg.csv", -Eigen::MatrixXd::Ones(30, 1));
    EXPECT_EQ(run({"analyze", "--in", neg, "--log-transform"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"analyze", "--in", flat, "--columns", "nope"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"analyze", "--in", path("missing.csv")}).code, cli::kExitUsage);
}

TEST_F(CliTest, DetectAndEstimate)
{
    Eigen::MatrixXd y = 0.1 * fixtures::gaussian_matrix(40, 2, 4);
    y.bottomRows(15).array() += 2.0;
    const auto csv = write_dataset("d.csv", y, 2000);
    const auto r = run({"detect", "--in", csv, "--out", path("det.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(slurp(path("det.json")))["tau_hat"].get<long>(), 25);
    EXPECT_EQ(slurp(path("det.csv")).rfind("t,statistic\n", 0), 0u);

    const auto cov = run({"detect", "--in", csv, "--kind", "covariance"});
    ASSERT_EQ(cov.code, 0) << cov.err;
    EXPECT_EQ(json::parse(cov.out)["p"].get<long>(), 3);

    const auto e = run({"estimate", "--in", csv});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto j = json::parse(e.out);
    EXPECT_EQ(j["tau_hat"].get<long>(), 25);
    EXPECT_EQ(j["calendar_tau_hat"].get<long>(), 2024);
}

TEST_F(CliTest, SimulateNeedsSeedAndIsDeterministic)
{
    EXPECT_EQ(run({"simulate", "--reps", "10"}).code, cli::kExitUsage);
    const auto a = run({"simulate", "--seed", "5", "--reps", "10", "--out", path("a")});
    const auto b = run({"simulate", "--seed", "5", "--reps", "10", "--out", path("b")});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.csv")).rfind("mode,offset,count\n", 0), 0u);
}

TEST_F(CliTest, SimulateGuards)
{
    EXPECT_EQ(run({"simulate", "--seed", "1", "--family", "student_t", "--nu", "2"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"simulate", "--seed", "1", "--family", "cauchy"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"simulate", "--seed", "1", "--modes", "oracle"}).code, cli::kExitUsage);
    const auto cfg = write("bad.cfg", "n = 100\nwidth = 3\n");
    EXPECT_EQ(run({"simulate", "--seed", "1", "--in", cfg}).code, cli::kExitUsage);
}

TEST_F(CliTest, SimulateConfigGrid)
{
    const auto cfg = write("grid.cfg",
                           "# shared settings\n"
                           "reps = 200\n"
                           "n = 60\n"
                           "[small]\n"
                           "tau = 20\n"
                           "eta = 1.5\n"
                           "modes = known, profile\n"
                           "[robust]\n"
                           "tau = 30\n"
                           "eta = 2.5\n"
                           "family = student_t\n"
                           "nu = 5  # heavy tails\n");
    const auto r = run({"simulate", "--seed", "9", "--in", cfg, "--out", path("grid")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(slurp(path("grid.json")));
    ASSERT_EQ(j["studies"].size(), 2u);
    EXPECT_EQ(j["studies"][0]["config"]["tau"].get<long>(), 20);
    EXPECT_EQ(j["studies"][0]["modes"].size(), 2u);
    EXPECT_EQ(j["studies"][1]["config"]["family"].get<std::string>(), "student_t");
    EXPECT_EQ(j["studies"][1]["config"]["n"].get<long>(), 60);
    EXPECT_TRUE(fs::exists(path("grid_0.csv")));
    EXPECT_TRUE(fs::exists(path("grid_1.csv")));
}

TEST_F(CliTest, SimulateKnownTableCell)
{
    const auto r = run({"simulate", "--seed", "2024", "--reps", "500000", "--n", "100", "--tau", "50",
                        "--eta", "2", "--modes", "known"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LE(json::parse(r.out)["studies"][0]["modes"][0]["tv"].get<double>(), 0.006);
}

TEST(StudyConfig, DefaultsWithoutSections)
{
    std::istringstream in("eta = 2\nseed = 7\n");
    const auto cells = cli::parse_study_config(in, montecarlo::SimConfig{});
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].eta, 2.0);
    EXPECT_EQ(cells[0].master_seed, 7u);
    std::istringstream bad("eta = two\n");
    EXPECT_THROW(cli::parse_study_config(bad, {}), ParseError);
}

TEST(Serialize, PmfCsvRoundTripIsBitExact)
{
    const auto pmf = exactdist::build_pmf(0.7);
    std::stringstream s;
    io::write_pmf_csv(s, pmf);
    const auto rows = io::read_pmf_csv(s);
    ASSERT_EQ(rows.size(), pmf.values().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].first, static_cast<long>(i) - pmf.halfwidth());
        EXPECT_EQ(rows[i].second, pmf.values()[i]);
    }
    std::istringstream bad("x,y\n");
    EXPECT_THROW(io::read_pmf_csv(bad), ParseError);
}

TEST(Serialize, JsonShapes)
{
    const auto pmf = exactdist::build_pmf(2.0);
    const auto j = io::to_json(pmf);
    for (const char* key : {"eta", "K", "tail_mass_bound", "no_ladder", "probs"}) EXPECT_TRUE(j.contains(key)) << key;
    const auto back = io::pmf_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.values(), pmf.values());
}
