#include "cli.hpp"

#include <mdeconv/errors.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mdeconv;
namespace fs = std::filesystem;

namespace {

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result
invoke(std::vector<std::string> args)
{
  args.insert(args.begin(), "mdeconv");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return { code, out.str(), err.str() };
}

class CliFiles : public testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("mdeconv_cli_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content)
  {
    const auto p = dir_ / name;
    std::ofstream(p) << content;
    return p.string();
  }

  std::string read(const std::string& name)
  {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const char* kSpec = R"([target]
kind = "exponential"
rate = 1.0

[errors]
model = "uniform:1"

[design]
n = [100, 200, 400]
x0 = [1.0]
runs = 30
oracle_runs = 30
h_grid = [0.1, 0.2, 0.4, 0.8]
seed = 11
)";

} // namespace

TEST(CliGrammar, Models)
{
  EXPECT_EQ(cli::parse_model("uniform").name(), "uniform(1)");
  EXPECT_EQ(cli::parse_model("uniform:2").name(), "uniform(2)");
  EXPECT_EQ(cli::parse_model("beta:1").name(), "beta(1,1)");
  EXPECT_EQ(cli::parse_model("beta:0.5,2").name(), "beta(0.5,2)");
  EXPECT_EQ(cli::parse_model("power:0.5").power_shape().value(), 0.5);
  EXPECT_EQ(cli::parse_model("pareto:3,1").name(), "pareto(3,1)");
  EXPECT_EQ(cli::parse_model("gamma:2,1").name(), "gamma(2,1)");
  EXPECT_EQ(cli::parse_model("halfnormal:1").name(), "halfnormal(1)");
  EXPECT_EQ(cli::parse_model("logproduct").name(), "logproduct");
  EXPECT_THROW(cli::parse_model("cauchy:1"), InvalidArgument);
  EXPECT_THROW(cli::parse_model("pareto:3"), InvalidArgument);
  EXPECT_THROW(cli::parse_model("beta:x"), InvalidArgument);
}

TEST(CliGrammar, Kernels)
{
  EXPECT_TRUE(std::holds_alternative<GaussianJackknife>(cli::parse_kernel("gaussian:2")));
  const auto flat = std::get<FlatCompact>(cli::parse_kernel("flat:2,5"));
  EXPECT_EQ(flat.q, 5);
  EXPECT_EQ(std::get<ZeroPoint>(cli::parse_kernel("zero:1,0.5")).s, 0.5);
  EXPECT_THROW(cli::parse_kernel("gaussian:1.5"), InvalidArgument);
  EXPECT_THROW(cli::parse_kernel("sinc:1"), InvalidArgument);
}

TEST(CliGrammar, ComplexNumbers)
{
  EXPECT_EQ(cli::parse_complex("2+0i"), cplx(2.0, 0.0));
  EXPECT_EQ(cli::parse_complex("1-2.5i"), cplx(1.0, -2.5));
  EXPECT_EQ(cli::parse_complex("-3i"), cplx(0.0, -3.0));
  EXPECT_EQ(cli::parse_complex("i"), cplx(0.0, 1.0));
  EXPECT_EQ(cli::parse_complex("1e-3+2E+1i"), cplx(1e-3, 20.0));
  EXPECT_EQ(cli::parse_complex("0.25"), cplx(0.25, 0.0));
  EXPECT_THROW(cli::parse_complex("1+2j"), InvalidArgument);
  EXPECT_EQ(cli::format_complex(cplx(0.5, 0.0)), "0.5");
  EXPECT_EQ(cli::format_complex(cplx(-0.12, -0.16)), "-0.12-0.16i");
}

TEST_F(CliFiles, LoadSample)
{
  EXPECT_EQ(cli::load_sample(write("a.csv", "y\n1.0\n2.5\n")), (std::vector<double>{ 1.0, 2.5 }));
  EXPECT_EQ(cli::load_sample(write("b.csv", "0.5\n\n3\n")), (std::vector<double>{ 0.5, 3.0 }));
  try {
    cli::load_sample(write("c.csv", "1.0\nabc\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(cli::load_sample(write("d.csv", "")), EmptyFile);
  EXPECT_THROW(cli::load_sample(write("e.csv", "y\n")), EmptyFile);
  EXPECT_THROW(cli::load_sample(write("f.csv", "1,2\n")), ParseError);
}

TEST_F(CliFiles, EstimateJson)
{
  const auto input = write("s.csv", "y\n1.0\n");
  const auto r = invoke({ "estimate", "--input", input, "--model", "beta:1", "--point", "1.0",
                          "--h", "0.2" });
  EXPECT_EQ(r.code, 0) << r.err;
  for (const char* key : { "\"estimate\"", "\"h\"", "\"s\"", "\"n\"", "\"warnings\"" })
    EXPECT_NE(r.out.find(key), std::string::npos) << key;

  const auto p = invoke({ "estimate", "--input", input, "--model", "power:1", "--point", "1",
                          "--h", "0.5" });
  EXPECT_NE(p.out.find("\"estimate\": 1.1968268412"), std::string::npos) << p.out;
}

TEST_F(CliFiles, EstimateWithRule)
{
  const auto input = write("s.csv", "1.0\n0.5\n2.0\n");
  const auto r = invoke({ "estimate", "--input", input, "--model", "uniform:1", "--point", "1",
                          "--rule", "smooth:A=1,beta=1" });
  EXPECT_EQ(r.code, 0) << r.err;
  // gamma = 1 for uniform errors: h = (4 n)^{-1/5} with n = 3.
  EXPECT_NE(r.out.find("\"h\": 0.608364341893"), std::string::npos) << r.out;
}

TEST_F(CliFiles, EstimateZero)
{
  const auto input = write("s.csv", "0\n");
  const auto r = invoke({ "estimate-zero", "--input", input, "--model", "power:1", "--h", "1" });
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"estimate\": 1.5"), std::string::npos) << r.out;
}

TEST_F(CliFiles, UsageErrors)
{
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({ "bogus" }).code, 2);
  const auto missing = invoke({ "simulate", "--spec", path("missing.toml"), "--out", path("r.csv") });
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("missing.toml"), std::string::npos);
  const auto input = write("s.csv", "1.0\n");
  EXPECT_EQ(invoke({ "estimate", "--input", input, "--model", "nope", "--point", "1", "--h", "0.2" }).code,
            2);
  EXPECT_EQ(invoke({ "estimate", "--input", input, "--model", "beta:1", "--point", "1" }).code, 2);
}

TEST_F(CliFiles, ComputationalErrorsExitOne)
{
  const auto bad = write("bad.csv", "1.0\nabc\n");
  const auto r = invoke({ "estimate", "--input", bad, "--model", "beta:1", "--point", "1", "--h", "0.2" });
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ParseError"), std::string::npos);
  const auto m = invoke({ "mellin-eval", "--model", "uniform:1", "--z", "-1+0i" });
  EXPECT_EQ(m.code, 1);
  EXPECT_NE(m.err.find("StripViolation"), std::string::npos);
}

TEST(Cli, MellinEval)
{
  const auto r = invoke({ "mellin-eval", "--model", "uniform:1", "--z", "2+0i" });
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.5\n");
  const auto n = invoke({ "mellin-eval", "--model", "logproduct", "--z", "1+2i", "--numeric" });
  EXPECT_EQ(n.out, "-0.12-0.16i\n");
}

TEST(Cli, SelfTest)
{
  const auto r = invoke({ "self-test" });
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliFiles, SimulateIsByteIdenticalAcrossThreads)
{
  const auto spec = write("spec.toml", kSpec);
  ASSERT_EQ(invoke({ "simulate", "--spec", spec, "--out", path("a.csv"), "--threads", "1" }).code, 0);
  ASSERT_EQ(invoke({ "simulate", "--spec", spec, "--out", path("b.csv"), "--threads", "6",
                     "--svg", path("b.svg") })
              .code,
            0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  EXPECT_EQ(read("a.csv").rfind("n,x0,h_star,q05,q25,median,q75,q95,mse,runs,seed\n", 0), 0u);
  EXPECT_NE(read("b.svg").find("<svg"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("a.csv.tmp")));

  const auto rate = invoke({ "rate-check", "--report", path("a.csv") });
  EXPECT_EQ(rate.code, 0) << rate.err;
  EXPECT_NE(rate.out.find("\"slope\""), std::string::npos);
}

TEST_F(CliFiles, SpecErrorsCarryLines)
{
  const std::string text = std::string(kSpec) + "colour = \"red\"\n";
  try {
    cli::parse_simulation_spec(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 15u);
  }
  EXPECT_THROW(cli::parse_simulation_spec("[design]\nn = [100]\n"), ParseError);
  EXPECT_THROW(cli::parse_simulation_spec("[design]\nn = [100]\nat_zero = true\noracle_runs = 5\n"),
               ParseError);
  const auto zero = cli::parse_simulation_spec(
    "[target]\nrate = 2.0\n[errors]\nmodel = \"power:0.5\"\n[design]\nn = [100, 300]\nat_zero = true\n");
  EXPECT_TRUE(zero.at_zero());
  EXPECT_EQ(zero.h_grid.size(), 20u);
  EXPECT_EQ(zero.kernel_order, 1);
}

TEST_F(CliFiles, Dumps)
{
  ASSERT_EQ(invoke({ "kernel-dump", "--kernel", "gaussian:2", "--out", path("k.csv"), "--count", "11" }).code, 0);
  const auto k = read("k.csv");
  EXPECT_EQ(k.rfind("t,K,omega,transform_re,transform_im\n", 0), 0u);
  EXPECT_EQ(std::count(k.begin(), k.end(), '\n'), 12);

  ASSERT_EQ(invoke({ "lkernel-dump", "--model", "power:1", "--h", "0.5", "--out", path("l.csv"),
                     "--count", "5" })
              .code,
            0);
  const auto l = read("l.csv");
  EXPECT_EQ(l.rfind("t,rho,y,L\n", 0), 0u);
  // The middle row is y = x = 1, where L = 3 / sqrt(2 pi).
  EXPECT_NE(l.find("0,1.1968268412,1,1.1968268412"), std::string::npos) << l;
}
