#include "doctest.h"

#include "homogenize/error.hpp"
#include "homogenize/toml_lite.hpp"

using namespace homog;

TEST_CASE("flat documents") {
    const auto doc = toml::parse(R"(
# comment
name = "run"   # trailing
d = 1
eps = [1.0, 0.5, 0.25,
       0.125]
rows = [["0", "1"], ['a\b', "c"]]
flag = true
big = 1_000
tiny = 1e-3

[grid]
h1 = 0.015625
)");
    CHECK(doc.get_string("name") == "run");
    CHECK(doc.get_int("d") == 1);
    CHECK(doc.get_doubles("eps") == std::vector<double>{1.0, 0.5, 0.25, 0.125});
    CHECK(doc.at("rows").as_array("rows")[1].as_array("rows")[0].as_string("rows") == "a\\b");
    CHECK(doc.get_bool("flag"));
    CHECK(doc.get_int("big") == 1000);
    CHECK(doc.get_double("tiny") == 1e-3);
    CHECK(doc.get_double("grid.h1") == 0.015625);
    CHECK(doc.get_double("missing", 2.5) == 2.5);
    CHECK(doc.get_double("d") == 1.0);
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(toml::parse("a = "), Error);
    CHECK_THROWS_AS(toml::parse("a = 1\na = 2"), Error);
    CHECK_THROWS_AS(toml::parse("a = \"x"), Error);
    CHECK_THROWS_AS(toml::parse("a = 1 2"), Error);
    const auto doc = toml::parse("a = \"s\"");
    CHECK_THROWS_AS(doc.get_double("a"), Error);
    CHECK_THROWS_AS(doc.get_double("b"), Error);
    CHECK_THROWS_AS(toml::parse_file("/nonexistent/file.toml"), Error);
}
