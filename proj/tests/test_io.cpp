#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "efgm/io.hpp"
#include "efgm/rng.hpp"
#include "efgm/sampling.hpp"
#include "models.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("efgm_io_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("parameter csv round-trip is bit exact", "[io]")
{
    TempDir dir;
    efgm::SplitMix64 rng(5);
    const auto p = testutil::random_validated(4, rng);
    const auto path = dir.file("params.csv");
    efgm::write_params_csv(path, p);
    const auto back = efgm::read_params_csv(path);
    CHECK(back == p);
    CHECK(back.flat() == p.flat());
}

TEST_CASE("parameter csv dimension inference and validation", "[io]")
{
    TempDir dir;
    const auto path = dir.file("bad.csv");
    write_text(path, "k,mask,lambda\n1,3,0.1\n");
    CHECK_THROWS_AS(efgm::read_params_csv(path), std::runtime_error);

    write_text(path, "k,mask,lambda\n1,3,0.1\n1,3,0.2\n");
    CHECK_THROWS_AS(efgm::read_params_csv(path, 2), std::runtime_error);

    write_text(path, "k,mask,lambda\n1,3,not_a_number\n1,3,0.2\n");
    CHECK_THROWS_AS(efgm::read_params_csv(path, 2), std::runtime_error);
}

TEST_CASE("sample csv round-trip preserves every bit", "[io]")
{
    TempDir dir;
    efgm::SplitMix64 rng(6);
    const auto p = testutil::random_validated(3, rng);
    const auto m = efgm::CopulaModel::checked(p);
    const auto batch = efgm::sample(m, 200, 31415);
    const auto path = dir.file("sample.csv");
    efgm::write_sample_csv(path, batch);

    const auto mat = efgm::read_matrix_csv(path);
    REQUIRE(mat.n == 200);
    REQUIRE(mat.d == 3);
    CHECK(mat.values == batch.rows);
    CHECK(mat.header == std::vector<std::string>{"u1", "u2", "u3"});
}

TEST_CASE("matrix csv requires a header and numeric cells", "[io]")
{
    TempDir dir;
    const auto path = dir.file("m.csv");
    write_text(path, "x,y\n0.5,0.25\n# comment line\n0.125,1.0\n");
    const auto mat = efgm::read_matrix_csv(path);
    CHECK(mat.n == 2);
    CHECK(mat.values == std::vector<double>{0.5, 0.25, 0.125, 1.0});

    write_text(path, "x,y\n0.5,oops\n");
    CHECK_THROWS_AS(efgm::read_matrix_csv(path), std::runtime_error);

    write_text(path, "x,y\n0.5\n");
    CHECK_THROWS_AS(efgm::read_matrix_csv(path), std::runtime_error);

    CHECK_THROWS_AS(efgm::read_matrix_csv(dir.file("missing.csv")), std::runtime_error);
}

TEST_CASE("config parsing", "[io]")
{
    TempDir dir;
    const auto path = dir.file("a.conf");
    write_text(path,
               "# top comment\n"
               "dimension = 4\n"
               "lambda1.12 = 0.05\n"
               "lambda2.1234 = -0.025   # trailing comment\n"
               "n = 1000\n"
               "sizes = 100, 1000\n");
    const auto cfg = efgm::read_config(path);
    CHECK(cfg.get_u64("dimension") == 4);
    CHECK(cfg.get_double("lambda1.12") == 0.05);
    CHECK(cfg.get_u64("n") == 1000);
    CHECK(cfg.get_u64_list("sizes") == std::vector<std::uint64_t>{100, 1000});

    const auto p = efgm::params_from_config(cfg, 4);
    CHECK(p.get(1, 3) == 0.05);
    CHECK(p.get(2, 15) == -0.025);
    CHECK(p.get(1, 5) == 0.0);
}

TEST_CASE("config rejects malformed lambda keys", "[io]")
{
    TempDir dir;
    const auto path = dir.file("b.conf");
    write_text(path, "lambda3.12 = 0.1\n");
    CHECK_THROWS_AS(efgm::params_from_config(efgm::read_config(path), 4), std::runtime_error);

    write_text(path, "lambda1.1 = 0.1\n");
    CHECK_THROWS_AS(efgm::params_from_config(efgm::read_config(path), 4), std::runtime_error);

    write_text(path, "lambda1.15 = 0.1\n");
    CHECK_THROWS_AS(efgm::params_from_config(efgm::read_config(path), 4), std::runtime_error);
}

TEST_CASE("config writer round-trips through the reader", "[io]")
{
    TempDir dir;
    efgm::SplitMix64 rng(14);
    const auto p = testutil::random_validated(4, rng);
    const auto path = dir.file("roundtrip.conf");
    efgm::write_params_config(path, p);
    const auto cfg = efgm::read_config(path);
    const auto back = efgm::params_from_config(cfg, 4);
    CHECK(back == p);
}

TEST_CASE("estimate and covariance writers emit well-formed tables", "[io]")
{
    TempDir dir;
    efgm::SplitMix64 rng(15);
    const auto p = testutil::random_validated(3, rng);
    const auto m = efgm::CopulaModel::checked(p);
    const auto batch = efgm::sample(m, 500, 999);
    const auto res = efgm::estimate_params(efgm::DataView(batch));

    const auto est_path = dir.file("estimates.csv");
    efgm::write_estimates_csv(est_path, res);
    std::ifstream in(est_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,mask,lambda,se,pvalue");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 8);  // 2 * (2^3 - 3 - 1)

    const auto cov_path = dir.file("cov.csv");
    efgm::write_covariance_csv(cov_path, res.sigma_hat, 3);
    std::ifstream cin_(cov_path);
    std::getline(cin_, header);
    CHECK(header.find("l1_12") != std::string::npos);
}

TEST_CASE("seventeen significant digits survive the round trip", "[io]")
{
    const double x = 0.12345678901234567;
    const auto s = efgm::fmt17(x);
    CHECK(std::stod(s) == x);
    const double huge = 1.7976931348623157e308;
    CHECK(std::stod(efgm::fmt17(huge)) == huge);
    const double small = 2.2250738585072014e-308;
    CHECK(std::stod(efgm::fmt17(small)) == small);
}

TEST_CASE("gent parameters come from config or defaults", "[io]")
{
    TempDir dir;
    const auto path = dir.file("marg.conf");
    write_text(path,
               "dimension = 2\n"
               "channel.1.a = -0.1\nchannel.1.b = 0.2\nchannel.1.c = 3.0\n"
               "channel.2.a = 0.0\nchannel.2.b = 1.0\nchannel.2.c = 1.0\n");
    const auto ps = efgm::gent_from_config(efgm::read_config(path), 2);
    REQUIRE(ps.size() == 2);
    CHECK(ps[0].a == -0.1);
    CHECK(ps[1].c == 1.0);

    // d = 4 with no channel keys falls back to the built-in marginals
    const auto def = efgm::gent_from_config(efgm::Config(), 4);
    REQUIRE(def.size() == 4);
    CHECK(def[0].a == -0.119);
    CHECK(def[3].c == 4.73);

    // non-4 dimension demands explicit channels
    CHECK_THROWS_AS(efgm::gent_from_config(efgm::Config(), 3), std::runtime_error);
}

TEST_CASE("mask labels", "[io]")
{
    CHECK(efgm::mask_label(3, 4) == "12");
    CHECK(efgm::mask_label(15, 4) == "1234");
    CHECK(efgm::mask_label((1u << 0) | (1u << 11), 12) == "1_12");
}
