#include <doctest.h>

#include <string>

#include "kmband/datacard.hpp"

using namespace kmband;

namespace {

const char* kFixedCard = R"(# Example datacard
# This is a comment line
observable_type fixed
------------
# List of patients
------------
survival_time 3   4   5   2   4   5   6   4   3   6   8   7
censored      0   0   0   0   0   0   0   0   0   0   0   1
observable    0.1 0.2 0.3 0.4 0.5 0.6 0.3 0.4 0.5 0.6 0.7 0.8
)";

const char* kRatioCard = R"(observable_type poisson_ratio
------------
# List of patients
------------
survival_time 3   4   5   2   4   5   6   4   3   6   8   7
censored      0   0   0   0   0   0   0   0   0   0   0   1
num           10  20  30  40  50  60  30  40  50  60  70  80
denom         100 100 100 100 100 100 100 100 100 100 100 100
)";

}  // namespace

TEST_CASE("parse fixed-observable card") {
  Datacard card = parse_datacard(std::string(kFixedCard));
  CHECK(card.observable_type == ObservableType::fixed);
  REQUIRE(card.patients.size() == 12);
  CHECK(card.patients[11].censored);
  CHECK_FALSE(card.patients[0].censored);
  CHECK(card.patients[11].survival_time == 7.0);
  CHECK(nominal_value(card.patients[11].observable) == doctest::Approx(0.8));
  CHECK(nominal_value(card.patients[0].observable) == doctest::Approx(0.1));
  CHECK(card.systematics.empty());
}

TEST_CASE("parse poisson_ratio card") {
  Datacard card = parse_datacard(std::string(kRatioCard));
  CHECK(card.observable_type == ObservableType::poisson_ratio);
  REQUIRE(card.patients.size() == 12);
  auto& first = std::get<PoissonRatioObservable>(card.patients[0].observable.dist);
  CHECK(first.num == 10);
  CHECK(first.denom == 100);
  CHECK(nominal_value(card.patients[0].observable) == doctest::Approx(0.1));
  CHECK(nominal_value(card.patients[11].observable) == doctest::Approx(0.8));
}

TEST_CASE("row order does not matter, column order does") {
  std::string reordered =
      "censored 0 1\n"
      "observable 0.3 0.9\n"
      "observable_type fixed\n"
      "survival_time 2 5\n";
  Datacard card = parse_datacard(reordered);
  REQUIRE(card.patients.size() == 2);
  CHECK(card.patients[0].survival_time == 2.0);
  CHECK(card.patients[1].censored);
  CHECK(nominal_value(card.patients[1].observable) == doctest::Approx(0.9));
}

TEST_CASE("lognormal systematics rows") {
  std::string text =
      "observable_type poisson\n"
      "survival_time 2 5 9\n"
      "censored 0 0 1\n"
      "count 3 0 8\n"
      "lognormal assay 0.1 0.0 0.3\n"
      "lognormal batch 0.2 0.2 0.2\n";
  Datacard card = parse_datacard(text);
  REQUIRE(card.systematics.size() == 2);
  CHECK(card.systematics[0].name == "assay");
  CHECK(card.systematics[1].sigma[2] == doctest::Approx(0.2));
  REQUIRE(card.patients[0].observable.lognormal_sigmas.size() == 2);
  CHECK(card.patients[2].observable.lognormal_sigmas[0] == doctest::Approx(0.3));
}

TEST_CASE("parse errors carry line numbers") {
  SUBCASE("mismatched lengths") {
    std::string text =
        "observable_type fixed\n"
        "survival_time 1 2 3\n"
        "censored 0 0\n"
        "observable 0.5 0.5 0.5\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text),
                         doctest::Contains("line 3: mismatched row lengths"), DatacardError);
  }
  SUBCASE("empty cohort") {
    std::string text =
        "observable_type fixed\n"
        "survival_time\n"
        "censored\n"
        "observable\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text), doctest::Contains("empty cohort"), DatacardError);
  }
  SUBCASE("non-numeric token") {
    std::string text =
        "observable_type fixed\n"
        "survival_time 1 x\n"
        "censored 0 0\n"
        "observable 0.5 0.5\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text), doctest::Contains("non-numeric token"),
                         DatacardError);
  }
  SUBCASE("unknown observable type") {
    std::string text =
        "observable_type gamma\n"
        "survival_time 1\n"
        "censored 0\n"
        "observable 0.5\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text), doctest::Contains("unknown observable_type"),
                         DatacardError);
  }
  SUBCASE("duplicate row") {
    std::string text =
        "observable_type fixed\n"
        "survival_time 1\n"
        "survival_time 2\n"
        "censored 0\n"
        "observable 0.5\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text), doctest::Contains("line 3: duplicate row"),
                         DatacardError);
  }
  SUBCASE("missing required row") {
    std::string text =
        "observable_type poisson_ratio\n"
        "survival_time 1\n"
        "censored 0\n"
        "num 5\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text), doctest::Contains("missing required row 'denom'"),
                         DatacardError);
  }
  SUBCASE("unknown row is rejected") {
    std::string text =
        "observable_type poisson_ratio\n"
        "survival_time 1\n"
        "censored 0\n"
        "num 5\n"
        "denom 10\n"
        "observable 0.5\n";
    CHECK_THROWS_WITH_AS(parse_datacard(text), doctest::Contains("unknown row 'observable'"),
                         DatacardError);
  }
  SUBCASE("bad censor flag value") {
    std::string text =
        "observable_type fixed\n"
        "survival_time 1\n"
        "censored 2\n"
        "observable 0.5\n";
    CHECK_THROWS_AS(parse_datacard(text), DatacardError);
  }
  SUBCASE("nonpositive survival time") {
    std::string text =
        "observable_type fixed\n"
        "survival_time 0\n"
        "censored 0\n"
        "observable 0.5\n";
    CHECK_THROWS_AS(parse_datacard(text), DatacardError);
  }
  SUBCASE("fractional count") {
    std::string text =
        "observable_type poisson\n"
        "survival_time 1\n"
        "censored 0\n"
        "count 2.5\n";
    CHECK_THROWS_AS(parse_datacard(text), DatacardError);
  }
  SUBCASE("zero ratio denominator") {
    std::string text =
        "observable_type poisson_ratio\n"
        "survival_time 1\n"
        "censored 0\n"
        "num 5\n"
        "denom 0\n";
    CHECK_THROWS_AS(parse_datacard(text), DatacardError);
  }
}

namespace {

bool cards_equal(const Datacard& a, const Datacard& b) {
  if (a.observable_type != b.observable_type) return false;
  if (a.patients.size() != b.patients.size()) return false;
  for (size_t j = 0; j < a.patients.size(); ++j) {
    if (a.patients[j].survival_time != b.patients[j].survival_time) return false;
    if (a.patients[j].censored != b.patients[j].censored) return false;
    if (a.patients[j].observable.dist != b.patients[j].observable.dist) return false;
    if (a.patients[j].observable.lognormal_sigmas != b.patients[j].observable.lognormal_sigmas)
      return false;
  }
  if (a.systematics.size() != b.systematics.size()) return false;
  for (size_t k = 0; k < a.systematics.size(); ++k) {
    if (a.systematics[k].name != b.systematics[k].name) return false;
    if (a.systematics[k].sigma != b.systematics[k].sigma) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("serialize/parse round trip") {
  for (const char* text : {kFixedCard, kRatioCard}) {
    Datacard card = parse_datacard(std::string(text));
    Datacard again = parse_datacard(serialize_datacard(card));
    CHECK(cards_equal(card, again));
  }
  std::string with_sys =
      "observable_type poisson_density\n"
      "survival_time 2 5.25 9\n"
      "censored 0 0 1\n"
      "count 3 0 8\n"
      "area 1.5 2 0.625\n"
      "lognormal assay 0.1 0 0.3\n";
  Datacard card = parse_datacard(with_sys);
  Datacard again = parse_datacard(serialize_datacard(card));
  CHECK(cards_equal(card, again));
}
