#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "mdag/dataset.hpp"

using namespace mdag;

namespace {
Dataset parse(const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
}
}  // namespace

TEST_CASE("columns, missingness flags, and row subsets") {
    Dataset d;
    d.add_column("x", {1.0, 2.0, 3.0, 4.0});
    d.add_column("y", {0.5, 1.5, 2.5, 3.5});
    REQUIRE(d.nrow() == 4);
    REQUIRE(d.ncol() == 2);
    REQUIRE(d.has("x"));
    REQUIRE_FALSE(d.has("z"));
    REQUIRE_THROWS_AS(d.col("z"), std::invalid_argument);
    REQUIRE_THROWS_AS(d.add_column("bad", {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(d.add_column("x", {1, 2, 3, 4}), std::invalid_argument);

    d.set_missing(1, "y");
    REQUIRE(d.is_missing(1, "y"));
    REQUIRE(std::isnan(d.at(1, d.col_index("y"))));
    REQUIRE_FALSE(d.is_missing(1, "x"));
    REQUIRE(d.n_missing("y") == 1);
    REQUIRE(d.n_missing("x") == 0);

    auto rows = d.complete_rows({"x", "y"});
    REQUIRE(rows == std::vector<std::size_t>{0, 2, 3});
    REQUIRE(d.complete_rows({"x"}).size() == 4);

    // subsets may repeat rows (bootstrap) and keep missingness flags
    Dataset s = d.subset({3, 1, 1});
    REQUIRE(s.nrow() == 3);
    REQUIRE(s.at(0, s.col_index("x")) == 4.0);
    REQUIRE(s.is_missing(1, "y"));
    REQUIRE(s.is_missing(2, "y"));
    REQUIRE_FALSE(s.is_missing(0, "y"));

    d.set_value(1, "y", 9.0);
    REQUIRE_FALSE(d.is_missing(1, "y"));
    REQUIRE(d.at(1, d.col_index("y")) == 9.0);
}

TEST_CASE("csv writes NA for missing cells and reads them back") {
    Dataset d;
    d.add_column("a", {1.0, 0.25, -3.5});
    d.add_column("b", {0.0, 1.0, 2.0});
    d.set_missing(1, "b");

    std::ostringstream os;
    write_csv(d, os);
    std::string text = os.str();
    REQUIRE(text.find("a,b") == 0);
    REQUIRE(text.find("NA") != std::string::npos);

    Dataset back = parse(text);
    REQUIRE(back.nrow() == 3);
    REQUIRE(back.names() == d.names());
    REQUIRE(back.is_missing(1, "b"));
    REQUIRE_FALSE(back.is_missing(1, "a"));
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(back.at(i, 0) == d.at(i, 0));
        if (i != 1) REQUIRE(back.at(i, 1) == d.at(i, 1));
    }
}

TEST_CASE("csv round trip preserves full double precision") {
    Dataset d;
    d.add_column("v", {1.0 / 3.0, 0x1.23456789abcdfp-7, 1e300, -2.2250738585072014e-308});
    std::ostringstream os;
    write_csv(d, os);
    Dataset back = parse(os.str());
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(back.at(i, 0) == d.at(i, 0));
}

TEST_CASE("csv reader rejects malformed input with line numbers") {
    REQUIRE_THROWS_WITH(parse("a,b\n1,2\n3\n"), Catch::Matchers::ContainsSubstring("line 3"));
    REQUIRE_THROWS_WITH(parse("a,b\n1,2,3\n"), Catch::Matchers::ContainsSubstring("line 2"));
    REQUIRE_THROWS_WITH(parse("a\nfoo\n"), Catch::Matchers::ContainsSubstring("line 2"));
    REQUIRE_THROWS_AS(parse(""), std::runtime_error);
}

TEST_CASE("csv reader checks indicator columns against the NA pattern") {
    // V.M must equal 1 exactly where V is NA
    REQUIRE_NOTHROW(parse("V,V.M\n1,0\nNA,1\n"));
    REQUIRE_THROWS_WITH(parse("V,V.M\n1,1\nNA,1\n"),
                        Catch::Matchers::ContainsSubstring("V.M"));
    REQUIRE_THROWS_WITH(parse("V,V.M\nNA,0\n1,0\n"),
                        Catch::Matchers::ContainsSubstring("V.M"));
    // an indicator without its base column is just a regular column
    REQUIRE_NOTHROW(parse("W.M\n0\n1\n"));
}

TEST_CASE("model formulas parse into response, terms, and families") {
    ModelSpec m = parse_model_spec("Y ~ X + C1 + X:C1", Family::LinearGaussian);
    REQUIRE(m.response == "Y");
    REQUIRE(m.family == Family::LinearGaussian);
    REQUIRE(m.terms.size() == 3);
    REQUIRE(m.terms[2].factors == std::vector<std::string>{"X", "C1"});
    REQUIRE(m.terms[2].label() == "X:C1");
    REQUIRE(m.formula() == "Y ~ X + C1 + X:C1");

    auto cols = m.columns();
    REQUIRE(cols == std::vector<std::string>{"Y", "X", "C1"});

    REQUIRE(m.has_term({{"X", "C1"}}));
    REQUIRE(m.has_term({{"C1", "X"}}));  // factor order does not matter
    m.add_term(Term{{"C1", "X"}});
    REQUIRE(m.terms.size() == 3);  // duplicate up to ordering, not added

    REQUIRE(m.terms[2].involves("X"));
    REQUIRE_FALSE(m.terms[1].involves("X"));

    // explicit intercept-only models are allowed
    ModelSpec nil = parse_model_spec("Z ~ 1", Family::BinomialLogit);
    REQUIRE(nil.response == "Z");
    REQUIRE(nil.terms.empty());
    REQUIRE(nil.formula() == "Z ~ 1");
}

TEST_CASE("model formula parse errors") {
    REQUIRE_THROWS_AS(parse_model_spec("Y + X", Family::LinearGaussian), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model_spec("~ X", Family::LinearGaussian), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model_spec("Y ~", Family::LinearGaussian), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model_spec("Y ~ X + + C1", Family::LinearGaussian),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model_spec("Y ~ X + X", Family::LinearGaussian),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model_spec("Y ~ X:C1 + C1:X", Family::LinearGaussian),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model_spec("Y ~ X:1", Family::LinearGaussian),
                      std::invalid_argument);
}

TEST_CASE("design matrices carry an intercept and term products") {
    Dataset d;
    d.add_column("Y", {1.0, 2.0, 3.0});
    d.add_column("X", {0.0, 1.0, 1.0});
    d.add_column("C", {2.0, 3.0, 4.0});
    ModelSpec m = parse_model_spec("Y ~ X + C + X:C", Family::LinearGaussian);

    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    build_design(d, m, all_rows(d), X, y);
    REQUIRE(X.rows() == 3);
    REQUIRE(X.cols() == 4);
    for (int i = 0; i < 3; ++i) REQUIRE(X(i, 0) == 1.0);
    REQUIRE(X(1, 1) == 1.0);
    REQUIRE(X(2, 2) == 4.0);
    REQUIRE(X(0, 3) == 0.0);
    REQUIRE(X(2, 3) == 4.0);
    REQUIRE(y(2) == 3.0);

    // restricted row set
    build_design(d, m, {2}, X, y);
    REQUIRE(X.rows() == 1);
    REQUIRE(y(0) == 3.0);

    // missing cells inside the requested rows are an error naming the spot
    d.set_missing(1, "C");
    REQUIRE_THROWS_WITH(build_design(d, m, all_rows(d), X, y),
                        Catch::Matchers::ContainsSubstring("C"));
    REQUIRE_NOTHROW(build_design(d, m, {0, 2}, X, y));
}

TEST_CASE("csv file round trip") {
    Dataset d;
    d.add_column("u", {1.5, 2.5});
    d.add_column("v", {0.0, 1.0});
    d.set_missing(0, "u");
    std::string path = "test_dataset_roundtrip.csv";
    write_csv(d, path);
    Dataset back = read_csv_file(path);
    REQUIRE(back.is_missing(0, "u"));
    REQUIRE(back.at(1, 0) == 2.5);
    std::remove(path.c_str());
}
