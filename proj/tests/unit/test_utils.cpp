#include <zlib.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"
#include "skillscape/lines.hpp"
#include "skillscape/rng.hpp"
#include "skillscape/sha256.hpp"
#include "support/tmpdir.hpp"

using namespace skillscape;

TEST_CASE("rng streams are deterministic and fork-independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.u64() == b.u64());

  Rng base(42);
  Rng f1 = base.fork(1);
  Rng f2 = base.fork(2);
  // forked streams differ from each other and from the parent
  Rng parent(42);
  bool all_equal = true;
  for (int i = 0; i < 64; ++i) {
    const auto x = f1.u64(), y = f2.u64(), z = parent.u64();
    if (x != y || x != z) all_equal = false;
  }
  CHECK_FALSE(all_equal);

  // forking is const and repeatable
  Rng c(42);
  CHECK(c.fork(7).u64() == c.fork(7).u64());
}

TEST_CASE("rng uniform01 and below stay in range") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::vector<std::size_t> hits(5, 0);
  for (int i = 0; i < 50000; ++i) hits[r.index(5)]++;
  for (auto h : hits) CHECK(double(h) / 50000.0 == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("rng shuffle yields a permutation and is seed-stable") {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  Rng r(99);
  r.shuffle(v);
  std::set<int> seen(v.begin(), v.end());
  CHECK(seen.size() == 100);

  std::vector<int> w(100);
  std::iota(w.begin(), w.end(), 0);
  Rng r2(99);
  r2.shuffle(w);
  CHECK(v == w);
}

TEST_CASE("alias table matches its weights empirically") {
  const std::vector<double> weights{1.0, 2.0, 4.0, 1.0};
  AliasTable t(weights);
  Rng r(5);
  std::vector<std::size_t> hits(weights.size(), 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits[t.sample(r)]++;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    CHECK(double(hits[i]) / n == doctest::Approx(weights[i] / total).epsilon(0.05));
  }
}

TEST_CASE("alias table rejects bad weights") {
  CHECK_THROWS_AS(AliasTable(std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{1.0, -0.5}), ConfigError);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}), ConfigError);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("The quick brown fox jumps over the lazy dog") ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");

  // incremental updates agree with one-shot hashing
  Sha256 h;
  h.update("The quick brown fox ");
  h.update("jumps over the lazy dog");
  CHECK(h.hex_digest() ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
}

TEST_CASE("sha256_file_hex hashes file contents") {
  testsupport::TempDir tmp;
  testsupport::spit(tmp.file("x.txt"), "abc");
  CHECK(sha256_file_hex(tmp.file("x.txt")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(sha256_file_hex(tmp.file("missing.txt")), IoError);
}

TEST_CASE("format_double round-trips and is canonical") {
  for (double v : {0.1, 1.0, -2.5, 1e-17, 3.141592653589793, 12.000000000000002}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("csv escaping quotes fields only when needed") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("csv writer/reader round trip with awkward fields") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("t.csv");
  {
    CsvWriter w(path, {"name", "value"});
    w.row({"comma,here", CsvWriter::cell(0.1)});
    w.row({"quote \"q\"", CsvWriter::cell(std::int64_t(-3))});
    CHECK_THROWS_AS(w.row({"too", "many", "fields"}), Error);
  }
  CsvReader r(path);
  CHECK(r.header() == std::vector<std::string>{"name", "value"});
  CHECK(r.col("value") == 1);
  CHECK_THROWS_AS(r.col("nope"), DataError);
  auto row1 = r.next();
  REQUIRE(row1.has_value());
  CHECK((*row1)[0] == "comma,here");
  CHECK((*row1)[1] == "0.1");
  auto row2 = r.next();
  REQUIRE(row2.has_value());
  CHECK((*row2)[0] == "quote \"q\"");
  CHECK_FALSE(r.next().has_value());
}

TEST_CASE("line sources strip CR and handle missing trailing newline") {
  std::istringstream in("alpha\r\nbeta\ngamma");
  IstreamLineSource src(in);
  std::string line;
  REQUIRE(src.next(line));
  CHECK(line == "alpha");
  REQUIRE(src.next(line));
  CHECK(line == "beta");
  REQUIRE(src.next(line));
  CHECK(line == "gamma");
  CHECK_FALSE(src.next(line));
}

TEST_CASE("file line source reads plain and gzip input identically") {
  testsupport::TempDir tmp;
  const std::string body = "one\ntwo three\n\nfour\r\nlast";

  testsupport::spit(tmp.file("plain.txt"), body);
  gzFile gz = gzopen(tmp.file("comp.txt.gz").c_str(), "wb");
  REQUIRE(gz != nullptr);
  gzwrite(gz, body.data(), unsigned(body.size()));
  gzclose(gz);

  for (const auto& name : {std::string("plain.txt"), std::string("comp.txt.gz")}) {
    CAPTURE(name);
    FileLineSource src(tmp.file(name));
    std::string line;
    std::vector<std::string> lines;
    while (src.next(line)) lines.push_back(line);
    CHECK(lines == std::vector<std::string>{"one", "two three", "", "four", "last"});
  }

  CHECK_THROWS_AS(FileLineSource(tmp.file("absent.txt")), IoError);
}
