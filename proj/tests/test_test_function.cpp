#include <doctest.h>

#include "sk/test_function.hpp"

#include <cmath>
#include <stdexcept>

using namespace sk;

TEST_CASE("parse and describe round trip") {
  for (const char* spec : {"cos:1", "sin:0.5", "exp:-0.25", "tanh:0.3,-0.2", "poly:1,0,2"}) {
    const TestFunction f = TestFunction::parse(spec);
    CHECK(TestFunction::parse(f.describe()).describe() == f.describe());
  }
  CHECK(TestFunction::parse("linear").value(3.0) == 3.0);
  CHECK(TestFunction::parse("square").value(3.0) == 9.0);
  CHECK(TestFunction::parse("one").value(3.0) == 1.0);
  CHECK_THROWS_AS(TestFunction::parse("frob:1"), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction::parse("cos:"), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction::parse("cos:x"), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction::parse("exp:2"), std::invalid_argument);
}

TEST_CASE("derivatives agree with finite differences") {
  const double x = 0.37, e = 1e-5;
  for (const char* spec : {"cos:1.3", "sin:0.7", "exp:0.5", "tanh:0.8,0.1", "poly:1,-2,0.5,0.25"}) {
    const TestFunction f = TestFunction::parse(spec);
    CHECK(std::abs(f.derivative(x) - (f.value(x + e) - f.value(x - e)) / (2 * e)) < 1e-8);
    CHECK(std::abs(f.second_derivative(x) - (f.derivative(x + e) - f.derivative(x - e)) / (2 * e)) < 1e-8);
  }
}

TEST_CASE("polynomial helpers") {
  const std::vector<double> c{1.0, -2.0, 3.0};
  CHECK(polynomial_derivative(c) == std::vector<double>{-2.0, 6.0});
  const auto moments = gaussian_raw_moments(0.5, 2.0, 4);
  CHECK(moments[0] == 1.0);
  CHECK(moments[1] == 0.5);
  CHECK(std::abs(moments[2] - 2.25) < 1e-15);
  CHECK(std::abs(moments[3] - (0.125 + 3 * 0.5 * 2.0)) < 1e-14);
  CHECK(std::abs(moments[4] - (0.0625 + 6 * 0.25 * 2.0 + 3 * 4.0)) < 1e-13);
  CHECK(std::abs(polynomial_expectation(c, moments) - (1.0 - 1.0 + 3 * 2.25)) < 1e-14);
  CHECK(TestFunction::parse("poly:1,2").polynomial_coefficients().has_value());
  CHECK_FALSE(TestFunction::cosine(1.0).polynomial_coefficients().has_value());
}
