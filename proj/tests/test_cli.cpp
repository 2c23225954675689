#include <doctest.h>

#include <fstream>
#include <sstream>

#include "basinfo/cli.hpp"
#include "support.hpp"

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "basinfo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = basinfo::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: user management, ingest and export") {
  support::TempDir dir;
  const auto data = dir.path().string();
  auto r = run({"--data-dir", data, "fixture", "load", "kara"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("112 series") != std::string::npos);
  CHECK(run({"--data-dir", data, "fixture", "load", "kara"}).code == 1);

  r = run({"--data-dir", data, "user", "add", "alice", "--password", "pw", "--group", "hydro"});
  REQUIRE(r.code == 0);
  CHECK(run({"--data-dir", data, "user", "add", "alice", "--password", "pw"}).code == 1);
  CHECK(run({"--data-dir", data, "user", "grant", "--group", "hydro", "--object", "sa-kara", "--action",
             "view-metadata", "--action", "download"})
            .code == 0);
  CHECK(run({"--data-dir", data, "user", "grant", "--user", "ghost", "--object", "sa-kara", "--action", "edit"}).code ==
        1);

  write_file(dir / "obs.txt", "01/01/2016;3,5\n02/01/2016;NA\n03/01/2016;0\n");
  write_file(dir / "fmt.json",
             R"({"delimiter": ";", "dateFormat": "DD/MM/YYYY", "decimalSeparator": ",", "missingCodes": ["NA"]})");
  r = run({"--data-dir", data, "ingest", "--station", "st-kara", "--variable", "precipitation", "--format",
           (dir / "fmt.json").string(), "--id", "kara-2016", (dir / "obs.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1 missing of 3") != std::string::npos);

  r = run({"--data-dir", data, "--as", "alice", "export", "--series", "kara-2016"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("2016-01-01\t3.5") != std::string::npos);
  CHECK(r.out.find("2016-01-02\t-9999") != std::string::npos);

  write_file(dir / "agg.json", R"({"step": "yearly", "gapPolicy": "tolerant", "maxMissingFraction": 1})");
  r = run({"--data-dir", data, "export", "--series", "kara-2016", "--aggregation", (dir / "agg.json").string(), "-o",
           (dir / "out.txt").string()});
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "out.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("2016\t3.5") != std::string::npos);

  CHECK(run({"--data-dir", data, "--as", "nobody", "export", "--series", "kara-2016"}).code == 1);
  r = run({"--data-dir", data, "validate"});
  CHECK(r.code == 0);
  CHECK(r.out == "ok: 113 series\n");
}

TEST_CASE("cli: parse errors carry the line number") {
  support::TempDir dir;
  const auto data = dir.path().string();
  REQUIRE(run({"--data-dir", data, "fixture", "load", "kara"}).code == 0);
  write_file(dir / "bad.txt", "2016-01-01\t1\n2016-01-01\t2\n");
  const auto r = run({"--data-dir", data, "ingest", "--station", "st-kara", "--variable", "precipitation",
                      (dir / "bad.txt").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("DuplicateDate") != std::string::npos);
}
