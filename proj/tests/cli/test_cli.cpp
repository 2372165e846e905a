#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chemo/error.hpp"
#include "doctest.h"
#include "manifest.hpp"
#include "schema.hpp"

namespace fs = std::filesystem;
using chemo::cli::json;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "chemo_cli_test";

int chemo_run(const std::string& args) {
  const std::string cmd = std::string(CHEMO_BIN) + " " + args + " > " +
                          (kScratch / "stdout.txt").string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

struct Scratch {
  Scratch() {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
  }
};

}  // namespace

TEST_CASE("sha256 matches the FIPS 180-2 vectors") {
  Scratch s;
  const auto f = kScratch / "abc.txt";
  chemo::cli::write_file_atomic(f, "abc");
  CHECK(chemo::cli::sha256_file(f) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  chemo::cli::write_file_atomic(f, "");
  CHECK(chemo::cli::sha256_file(f) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_FALSE(fs::exists(kScratch / "abc.txt.tmp"));
}

TEST_CASE("schema resolution") {
  chemo::cli::Schema inner{"inner", {{"k", chemo::cli::FieldType::integer, 3, ""}}};
  chemo::cli::Schema s{"s",
                       {{"a", chemo::cli::FieldType::number, 1.5, ""},
                        {"b", chemo::cli::FieldType::number_list, json(), "required"},
                        {"o", chemo::cli::FieldType::object, json::object(), "", &inner}}};
  const json r = chemo::cli::resolve(s, {{"b", {1, 2}}});
  CHECK(r.at("a") == 1.5);
  CHECK(r.at("o").at("k") == 3);
  CHECK_THROWS_AS(chemo::cli::resolve(s, json::object()), chemo::ConfigError);
  CHECK_THROWS_AS(chemo::cli::resolve(s, {{"b", {1}}, {"zz", 1}}), chemo::ConfigError);
  CHECK_THROWS_AS(chemo::cli::resolve(s, {{"b", "x"}}), chemo::ConfigError);
  CHECK_THROWS_AS(chemo::cli::resolve(s, {{"b", {1}}, {"o", {{"k", 0.5}}}}),
                  chemo::ConfigError);
  try {
    chemo::cli::resolve(s, {{"a", "x"}, {"zz", 1}});
    FAIL("expected ConfigError");
  } catch (const chemo::ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("'zz'") != std::string::npos);  // all problems in one message
    CHECK(what.find("'b'") != std::string::npos);
  }
  CHECK(chemo::cli::parse_flag_value(s.fields[1], "0.5,2") == json({0.5, 2.0}));
  CHECK_THROWS_AS(chemo::cli::parse_flag_value(s.fields[0], "1x"), chemo::ConfigError);
}

TEST_CASE("exit codes") {
  Scratch s;
  CHECK(chemo_run("--help") == 0);
  CHECK(chemo_run("simulate --help") == 0);
  CHECK(chemo_run("") == 2);
  CHECK(chemo_run("simulate --no-such-flag 1") == 2);
  CHECK(chemo_run("kernel-check --p 0.5 -o " + (kScratch / "kc").string()) == 2);
  CHECK(chemo_run("simulate --dt -1 -o " + (kScratch / "neg").string()) == 2);
  CHECK(chemo_run("simulate --lambda -1 -o " + (kScratch / "neg").string()) == 2);
  CHECK(chemo_run("simulate -c " + (kScratch / "missing.json").string() + " -o " +
                  (kScratch / "missing").string()) == 2);
  std::ofstream(kScratch / "unknown.json") << R"({"n_partciles": 4})";
  CHECK(chemo_run("simulate -c " + (kScratch / "unknown.json").string() + " -o " +
                  (kScratch / "unknown").string()) == 2);
  std::ofstream(kScratch / "version.json") << R"({"schema_version": 7})";
  CHECK(chemo_run("simulate -c " + (kScratch / "version.json").string() + " -o " +
                  (kScratch / "version").string()) == 2);
  CHECK(manifest(kScratch / "version").at("exit_code") == 2);
  // Bump touching the domain edge.
  CHECK(chemo_run("pde --x-min -2 --x-max 2 --n-cells 100 --horizon 0.1 -o " +
                  (kScratch / "edge").string()) == 2);
  CHECK(chemo_run("kernel-check -o " + (kScratch / "kc").string()) == 0);
}

TEST_CASE("simulate replays from its manifest") {
  Scratch s;
  const auto a = kScratch / "a";
  const auto b = kScratch / "b";
  REQUIRE(chemo_run("simulate --n-particles 12 --horizon 0.2 --seed 9 -o " + a.string()) == 0);
  const json ma = manifest(a);
  CHECK(ma.at("manifest_version") == 1);
  CHECK(ma.at("exit_code") == 0);
  CHECK(ma.at("seed") == 9);
  CHECK(ma.at("config").at("n_particles") == 12);
  REQUIRE(chemo_run("simulate -c " + (a / "manifest.json").string() + " -o " + b.string()) == 0);
  const json mb = manifest(b);
  REQUIRE(ma.at("outputs").size() == mb.at("outputs").size());
  for (std::size_t i = 0; i < ma.at("outputs").size(); ++i) {
    const auto& oa = ma.at("outputs")[i];
    CHECK(oa.at("path") == mb.at("outputs")[i].at("path"));
    CHECK(oa.at("sha256") == mb.at("outputs")[i].at("sha256"));
    CHECK(oa.at("sha256") == chemo::cli::sha256_file(a / oa.at("path").get<std::string>()));
  }
  // Thread count does not change the bytes.
  const auto c = kScratch / "c";
  REQUIRE(chemo_run("simulate -c " + (a / "manifest.json").string() + " -j 2 -o " +
                    c.string()) == 0);
  CHECK(slurp(a / "paths.bin") == slurp(c / "paths.bin"));
  // Flags override the replayed config.
  const auto d = kScratch / "d";
  REQUIRE(chemo_run("simulate -c " + (a / "manifest.json").string() + " --seed 10 -o " +
                    d.string()) == 0);
  CHECK(slurp(a / "paths.bin") != slurp(d / "paths.bin"));
  // A manifest from another command is refused.
  CHECK(chemo_run("pde -c " + (a / "manifest.json").string() + " -o " +
                  (kScratch / "wrong").string()) == 2);
}

TEST_CASE("output directory from the environment") {
  Scratch s;
  const auto dir = kScratch / "env_out";
  ::setenv("CHEMO_OUTPUT_DIR", dir.c_str(), 1);
  const int code = chemo_run("simulate --n-particles 2 --horizon 0.05");
  ::unsetenv("CHEMO_OUTPUT_DIR");
  CHECK(code == 0);
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("chaos resumes from stored replicas") {
  Scratch s;
  const auto dir = kScratch / "chaos";
  const std::string args = " --chi 0 --n-values 8,16 --replicas 3 --horizon 0.1 --times 0.1"
                           " --n-cells 200 -o " + dir.string();
  REQUIRE(chemo_run("chaos" + args) == 0);
  const std::string first = slurp(dir / "chaos_summary.csv");
  fs::remove(dir / "replicas" / "n16_q2.json");
  REQUIRE(chemo_run("chaos" + args) == 0);
  CHECK(slurp(kScratch / "stdout.txt").find("resumed 5 stored replicas") != std::string::npos);
  CHECK(slurp(dir / "chaos_summary.csv") == first);
  // A changed physical config does not reuse the stored files.
  REQUIRE(chemo_run("chaos" + args + " --seed 2") == 0);
  CHECK(slurp(kScratch / "stdout.txt").find("resumed") == std::string::npos);
  CHECK(slurp(dir / "chaos_summary.csv") != first);
}

TEST_CASE("bench separates timing from deterministic output") {
  Scratch s;
  const auto dir = kScratch / "bench";
  REQUIRE(chemo_run("bench --n-values 8,16 --horizon 0.1 -o " + dir.string()) == 0);
  const json m = manifest(dir);
  for (const auto& o : m.at("outputs")) {
    CHECK(o.at("deterministic") == (o.at("path") != "bench_timing.csv"));
  }
}

TEST_CASE("stochastic flags instability") {
  Scratch s;
  const auto dir = kScratch / "st";
  // A huge alpha makes the exponential moment dominated by a single sample.
  const int code = chemo_run(
      "stochastic --lemma31-enabled false --girsanov-enabled false --novikov-enabled false"
      " --exp-moment-alpha 400 --exp-moment-n-samples 200 --exp-moment-n-values 8"
      " --exp-moment-y-constants 0 -o " + dir.string());
  CHECK(code == 3);
  CHECK(slurp(dir / "estimates.csv").find("UNSTABLE") != std::string::npos);
  CHECK(manifest(dir).at("exit_code") == 3);
}
