#include "oracles.hpp"

#include "rbk/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name)
{
    return std::string(RBK_FIXTURES) + "/" + name;
}

int rbk_main(std::vector<std::string> args)
{
    return rbk::cli::main(args);
}

nlohmann::json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST_CASE("run writes trajectory, moments and report")
{
    const auto out = oracle::scratch("cli_run");
    REQUIRE(rbk_main({"run", "--config", fixture("small.toml"), "--out", out.string()}) == rbk::cli::ok);
    for (const char* f : {"trajectory.csv", "moments.csv", "report.json"})
        CHECK(fs::exists(out / f));
    const auto report = read_json(out / "report.json");
    const std::string hash = report.at("config_hash");
    CHECK(hash.size() == 16);
    CHECK(first_line(out / "trajectory.csv") == "# config_hash=" + hash);
    CHECK(first_line(out / "moments.csv") == "# config_hash=" + hash);
    CHECK(report.at("trajectory").at("snapshots").size() == 11);
    CHECK(report.at("config").at("grid").at("n") == 4.0);
}

TEST_CASE("check passes on a clean run and fails on corrupted trajectories")
{
    const auto out = oracle::scratch("cli_check");
    CHECK(rbk_main({"check", "--config", fixture("small.toml"), "--out", out.string()}) == rbk::cli::ok);
    const auto rep = read_json(out / "check_report.json");
    CHECK(rep.at("all_pass") == true);

    CHECK(rbk_main({"check", "--config", fixture("small.toml"), "--trajectory", fixture("small_clean.csv"), "--out",
                    out.string()}) == rbk::cli::ok);
    CHECK(rbk_main({"check", "--config", fixture("small.toml"), "--trajectory", fixture("small_mass_bump.csv"),
                    "--out", out.string()}) == rbk::cli::check_failure);
    const auto bad = read_json(out / "check_report.json");
    CHECK(bad.at("all_pass") == false);
    CHECK(rbk_main({"check", "--config", fixture("small.toml"), "--trajectory", fixture("small_tail_inflated.csv"),
                    "--out", out.string()}) == rbk::cli::check_failure);
}

TEST_CASE("configuration errors exit with code 2")
{
    const auto out = oracle::scratch("cli_bad");
    CHECK(rbk_main({"run", "--config", fixture("bad.toml"), "--out", out.string()}) == rbk::cli::config_error);
    CHECK(rbk_main({"run", "--config", fixture("superlinear.toml"), "--out", out.string()}) ==
          rbk::cli::config_error);
    CHECK(rbk_main({"run", "--config", fixture("absent.toml")}) == rbk::cli::usage);
    CHECK(rbk_main({"frobnicate"}) == rbk::cli::usage);
}

TEST_CASE("validate-kernel")
{
    const auto out = oracle::scratch("cli_validate");
    CHECK(rbk_main({"validate-kernel", "--config", fixture("superlinear.toml"), "--out", out.string()}) ==
          rbk::cli::check_failure);
    const auto rep = read_json(out / "admissibility.json");
    CHECK(rep.at("admissibility").at("all_pass") == false);
    CHECK(rbk_main({"validate-kernel", "--config", fixture("exp_remainder_bump.toml"), "--out", out.string()}) ==
          rbk::cli::ok);
    CHECK(read_json(out / "admissibility.json").at("admissibility").at("all_pass") == true);
}

TEST_CASE("sweep and mc-compare")
{
    const auto out = oracle::scratch("cli_sweep");
    CHECK(rbk_main({"sweep", "--config", fixture("small.toml"), "--out", out.string(), "--resolution"}) ==
          rbk::cli::ok);
    for (const char* f : {"sweep.csv", "orders.csv", "sweep_report.json"})
        CHECK(fs::exists(out / f));
    const auto rep = read_json(out / "sweep_report.json");
    CHECK(rep.at("sweep").at("distances").size() == 4);
    CHECK(rep.at("sweep").at("orders").size() == 5);

    CHECK(rbk_main({"mc-compare", "--config", fixture("small.toml"), "--out", out.string()}) == rbk::cli::ok);
    for (const char* f : {"mc.csv", "mc_summary.csv", "ztable.csv", "mc_report.json"})
        CHECK(fs::exists(out / f));
}

TEST_CASE("output directory falls back to RBK_OUT")
{
    const auto out = oracle::scratch("cli_env");
    fs::remove(out / "report.json");
    ::setenv("RBK_OUT", out.string().c_str(), 1);
    const int code = rbk_main({"run", "--config", fixture("small.toml")});
    ::unsetenv("RBK_OUT");
    CHECK(code == rbk::cli::ok);
    CHECK(fs::exists(out / "report.json"));
}
