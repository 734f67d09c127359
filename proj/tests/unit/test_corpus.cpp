#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "skillscape/corpus.hpp"
#include "skillscape/error.hpp"
#include "support/tmpdir.hpp"

using namespace skillscape;
using namespace skillscape::corpus;

namespace {

JobPosting make_post(std::string id, int year, std::string occ,
                     std::vector<std::string> skills) {
  JobPosting p;
  p.post_id = std::move(id);
  p.year = year;
  p.occupation = std::move(occ);
  p.employer = "acme";
  p.lat = 40.0;
  p.lon = -74.0;
  p.skills = std::move(skills);
  return p;
}

}  // namespace

TEST_CASE("canonicalize_skill folds case and whitespace") {
  CHECK(canonicalize_skill("  Machine   Learning ") == "machine learning");
  CHECK(canonicalize_skill("SQL") == "sql");
  CHECK(canonicalize_skill("a\tb\nc") == "a b c");
  CHECK(canonicalize_skill("already clean") == "already clean");
  // idempotent
  CHECK(canonicalize_skill(canonicalize_skill("  A  B ")) == "a b");
}

TEST_CASE("parse_postings accepts good lines and reports bad ones") {
  const std::string input =
      R"({"post_id":"a","year":2010,"occupation":"11-1011","employer":"x","lat":40.0,"lon":-74.0,"skills":["SQL","  sql ","Python"]})"
      "\n"
      "\n"  // blank lines are skipped silently
      "{ not json\n"
      R"({"post_id":"b","year":"bad","occupation":"11-1011","lat":1,"lon":2,"skills":["a"]})"
      "\n"
      R"({"post_id":"c","year":2018,"occupation":"15-1252","lat":12.5,"lon":30.25,"skills":["go"],"education_years":16,"salary":90000.0,"job_zone":4})"
      "\n";
  std::istringstream in(input);
  auto result = parse_postings(in);

  REQUIRE(result.postings.size() == 2);
  REQUIRE(result.errors.size() == 2);
  CHECK(result.errors[0].line == 3);
  CHECK(result.errors[1].line == 4);

  const auto& a = result.postings[0];
  CHECK(a.skills == std::vector<std::string>{"sql", "python"});  // deduped, order kept
  CHECK_FALSE(a.education_years.has_value());

  const auto& c = result.postings[1];
  CHECK(c.occupation == "15-1252");
  CHECK(c.education_years == 16);
  CHECK(c.salary == 90000.0);
  CHECK(c.job_zone == 4);
}

TEST_CASE("parse_postings rejects out-of-range and malformed fields") {
  const std::vector<std::string> bad = {
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":91.0,"lon":0,"skills":["a"]})",
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":0,"lon":-181,"skills":["a"]})",
      R"({"post_id":"x","year":2010,"occupation":"111011","lat":0,"lon":0,"skills":["a"]})",
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":0,"lon":0,"skills":[]})",
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":0,"lon":0,"skills":["  "]})",
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":0,"lon":0,"skills":["a"],"education_years":13})",
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":0,"lon":0,"skills":["a"],"salary":-1})",
      R"({"post_id":"x","year":2010,"occupation":"11-1011","lat":0,"lon":0,"skills":["a"],"job_zone":6})",
  };
  for (const auto& line : bad) {
    CAPTURE(line);
    std::istringstream in(line + "\n" + line + "\n" + line + "\n");
    // all lines malformed -> corrupt input
    CHECK_THROWS_AS(parse_postings(in), DataError);
  }
}

TEST_CASE("parse_postings corrupt-input threshold sits at half") {
  // 2 good, 2 bad: exactly half bad, still accepted
  const std::string good =
      R"({"post_id":"a","year":2010,"occupation":"11-1011","lat":0,"lon":0,"skills":["a"]})";
  {
    std::istringstream in(good + "\nnope\n" + good + "\nnope\n");
    auto r = parse_postings(in);
    CHECK(r.postings.size() == 2);
    CHECK(r.errors.size() == 2);
  }
  {
    // 1 good, 2 bad: majority bad -> corrupt
    std::istringstream in(good + "\nnope\nnope\n");
    CHECK_THROWS_AS(parse_postings(in), DataError);
  }
}

TEST_CASE("posting json line round-trips through the parser") {
  JobPosting p = make_post("p1", 2018, "15-1252", {"python", "sql"});
  p.education_years = 18;
  p.salary = 123456.75;
  p.job_zone = 4;
  std::istringstream in(posting_to_json_line(p) + "\n");
  auto r = parse_postings(in);
  REQUIRE(r.postings.size() == 1);
  CHECK(r.postings[0] == p);
}

TEST_CASE("schema remaps field names") {
  PostingSchema schema;
  schema.year = "ad_year";
  schema.skills = "skill_list";
  std::istringstream in(
      R"({"post_id":"a","ad_year":2012,"occupation":"11-1011","lat":0,"lon":0,"skill_list":["x"]})"
      "\n");
  auto r = parse_postings(in, schema);
  REQUIRE(r.postings.size() == 1);
  CHECK(r.postings[0].year == 2012);
}

TEST_CASE("deduplicate ignores post_id and keeps first occurrence") {
  JobPosting a = make_post("a", 2010, "11-1011", {"x", "y"});
  JobPosting b = a;
  b.post_id = "b";  // same content, different id -> duplicate
  JobPosting c = a;
  c.post_id = "c";
  c.salary = 50000.0;  // differs in one optional field -> kept
  JobPosting d = a;
  d.post_id = "d";
  d.skills = {"y", "x"};  // same skill set, different order -> duplicate
  JobPosting e = a;
  e.post_id = "e";
  e.lat = std::nextafter(a.lat, 90.0);  // tiniest coordinate change -> kept

  auto out = deduplicate({a, b, c, d, e});
  REQUIRE(out.size() == 3);
  CHECK(out[0].post_id == "a");
  CHECK(out[1].post_id == "c");
  CHECK(out[2].post_id == "e");
}

TEST_CASE("filter_active_occupations needs the threshold in every year") {
  std::vector<JobPosting> posts;
  for (int i = 0; i < 3; ++i) posts.push_back(make_post("a", 2010, "11-1011", {"x"}));
  for (int i = 0; i < 3; ++i) posts.push_back(make_post("a", 2018, "11-1011", {"x"}));
  for (int i = 0; i < 3; ++i) posts.push_back(make_post("b", 2010, "15-1252", {"x"}));
  posts.push_back(make_post("b", 2018, "15-1252", {"x"}));  // only 1 ad in 2018
  for (int i = 0; i < 5; ++i) posts.push_back(make_post("c", 2010, "29-1141", {"x"}));
  // 29-1141 missing 2018 entirely

  auto active = filter_active_occupations(posts, 3, {2010, 2018});
  CHECK(active == std::set<std::string>{"11-1011"});

  auto loose = filter_active_occupations(posts, 1, {2010, 2018});
  CHECK(loose == std::set<std::string>{"11-1011", "15-1252"});

  CHECK_THROWS_AS(filter_active_occupations(posts, 1, {}), ConfigError);
}

TEST_CASE("core_count boundaries") {
  CHECK(core_count(0.05, 1) == 1);
  CHECK(core_count(0.05, 20) == 1);
  CHECK(core_count(0.05, 21) == 2);
  // guard against ceil(12.000000000000002) = 13
  CHECK(core_count(0.05, 240) == 12);
  CHECK(core_count(1.0, 7) == 7);
  CHECK_THROWS_AS(core_count(0.0, 10), ConfigError);
  CHECK_THROWS_AS(core_count(1.5, 10), ConfigError);
}

TEST_CASE("snapshot shares and core ranking with ties") {
  std::vector<JobPosting> posts;
  // 4 ads for occupation 11-1011 in 2010:
  // alpha in 4, beta in 2, gamma in 2, delta in 1
  posts.push_back(make_post("1", 2010, "11-1011", {"alpha", "beta"}));
  posts.push_back(make_post("2", 2010, "11-1011", {"alpha", "gamma"}));
  posts.push_back(make_post("3", 2010, "11-1011", {"alpha", "beta", "delta"}));
  posts.push_back(make_post("4", 2010, "11-1011", {"alpha", "gamma"}));
  posts.push_back(make_post("5", 2018, "11-1011", {"alpha"}));

  auto snap = build_snapshot(posts, "11-1011", 2010, 0.75);
  CHECK(snap.n_ads == 4);
  CHECK(snap.skill_counts.size() == 4);
  CHECK(snap.share("alpha") == 1.0);
  CHECK(snap.share("beta") == 0.5);
  CHECK(snap.share("missing") == 0.0);
  CHECK(snap.total_occurrences() == 9);

  // ceil(0.75 * 4) = 3 core skills; beta/gamma tie at 0.5 -> beta first
  REQUIRE(snap.core_skills.size() == 3);
  CHECK(snap.core_skills[0] == "alpha");
  CHECK(snap.core_skills[1] == "beta");
  CHECK(snap.core_skills[2] == "gamma");
  CHECK(snap.is_core("beta"));
  CHECK_FALSE(snap.is_core("delta"));

  CHECK_THROWS_AS(build_snapshot(posts, "11-1011", 1999), NotFoundError);
  CHECK_THROWS_AS(build_snapshot(posts, "99-9999", 2010), NotFoundError);
  CHECK_THROWS_AS(build_snapshot(posts, "11-1011", 2010, 0.0), ConfigError);
}

TEST_CASE("build_snapshots covers listed occupations and years only") {
  std::vector<JobPosting> posts;
  posts.push_back(make_post("1", 2010, "11-1011", {"a"}));
  posts.push_back(make_post("2", 2018, "11-1011", {"a", "b"}));
  posts.push_back(make_post("3", 2010, "15-1252", {"c"}));
  posts.push_back(make_post("4", 2018, "15-1252", {"c"}));
  posts.push_back(make_post("5", 2010, "29-1141", {"d"}));  // not requested

  auto snaps = build_snapshots(posts, {"11-1011", "15-1252"}, {2010, 2018});
  REQUIRE(snaps.size() == 4);
  CHECK(snaps[0].occupation == "11-1011");
  CHECK(snaps[0].year == 2010);
  CHECK(snaps[3].occupation == "15-1252");
  CHECK(snaps[3].year == 2018);
}

TEST_CASE("vocabulary orders by count desc then name asc") {
  std::vector<JobPosting> posts;
  posts.push_back(make_post("1", 2010, "11-1011", {"zeta", "beta"}));
  posts.push_back(make_post("2", 2010, "11-1011", {"zeta", "alpha"}));
  posts.push_back(make_post("3", 2010, "11-1011", {"alpha"}));

  auto vocab = SkillVocabulary::build(posts);
  REQUIRE(vocab.size() == 3);
  // alpha and zeta both appear twice; alpha wins the name tie-break
  CHECK(vocab.skill(0) == "alpha");
  CHECK(vocab.skill(1) == "zeta");
  CHECK(vocab.skill(2) == "beta");
  CHECK(vocab.id("beta") == 2);
  CHECK_FALSE(vocab.id("nope").has_value());
  CHECK(vocab.count(0) == 2);
  CHECK(vocab.total_count() == 5);
}

TEST_CASE("vocab and snapshot csv round trips preserve ordering") {
  testsupport::TempDir tmp;

  std::vector<JobPosting> posts;
  posts.push_back(make_post("1", 2010, "11-1011", {"alpha, with comma", "beta"}));
  posts.push_back(make_post("2", 2010, "11-1011", {"alpha, with comma"}));
  posts.push_back(make_post("3", 2018, "11-1011", {"beta"}));

  auto vocab = SkillVocabulary::build(posts);
  write_vocab_counts_csv(tmp.file("vocab.csv"), vocab);
  auto vocab2 = read_vocab_counts_csv(tmp.file("vocab.csv"));
  REQUIRE(vocab2.size() == vocab.size());
  for (int i = 0; i < int(vocab.size()); ++i) {
    CHECK(vocab2.skill(i) == vocab.skill(i));
    CHECK(vocab2.count(i) == vocab.count(i));
  }

  auto snaps = build_snapshots(posts, {"11-1011"}, {2010, 2018}, 0.6);
  write_snapshots_csv(tmp.file("snaps.csv"), snaps);
  auto snaps2 = read_snapshots_csv(tmp.file("snaps.csv"));
  REQUIRE(snaps2.size() == snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    CHECK(snaps2[i].occupation == snaps[i].occupation);
    CHECK(snaps2[i].year == snaps[i].year);
    CHECK(snaps2[i].n_ads == snaps[i].n_ads);
    CHECK(snaps2[i].skill_counts == snaps[i].skill_counts);
    CHECK(snaps2[i].core_skills == snaps[i].core_skills);
  }
}

TEST_CASE("postings jsonl file round trip including gzip") {
  testsupport::TempDir tmp;
  std::vector<JobPosting> posts;
  posts.push_back(make_post("1", 2010, "11-1011", {"a", "b"}));
  posts.back().salary = 77000.0;
  posts.push_back(make_post("2", 2018, "15-1252", {"c"}));

  write_postings_jsonl(tmp.file("p.jsonl"), posts);
  auto r = parse_postings_file(tmp.file("p.jsonl"));
  CHECK(r.errors.empty());
  CHECK(r.postings == posts);

  CHECK_THROWS_AS(parse_postings_file(tmp.file("nope.jsonl")), IoError);
}
