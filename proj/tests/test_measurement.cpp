#include <vector>

#include <doctest.h>

#include "jeval/errors.hpp"
#include "jeval/measurement.hpp"

using namespace jeval;

TEST_CASE("informedness and the forward map") {
  const JudgeErrorRates r{0.8, 0.9};
  CHECK(youden(r) == doctest::Approx(0.7).epsilon(1e-15));
  // p = theta*q1 + (1-theta)*(1-q0) = 0.7*0.9 + 0.3*0.2 = 0.69
  CHECK(forward_prevalence(0.7, r) == doctest::Approx(0.69).epsilon(1e-15));
  CHECK(forward_prevalence(0.0, r) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(forward_prevalence(1.0, r) == doctest::Approx(0.9).epsilon(1e-15));
  // A chance judge maps every prevalence to the same rate.
  const JudgeErrorRates chance{0.5, 0.5};
  CHECK(youden(chance) == doctest::Approx(0.0));
  CHECK(forward_prevalence(0.2, chance) == doctest::Approx(0.5));
  CHECK(forward_prevalence(0.9, chance) == doctest::Approx(0.5));
}

TEST_CASE("calibration stats from explicit counts") {
  // 40 negatives with 30 agreements, 60 positives with 54 agreements.
  const CalibrationStats s = make_calibration_stats(40, 60, 30, 54);
  CHECK(s.m0 == 40);
  CHECK(s.m1 == 60);
  CHECK(s.q0_hat == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s.q1_hat == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.j_hat == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(s.rates().q0 == s.q0_hat);
  CHECK(s.rates().q1 == s.q1_hat);
}

TEST_CASE("count validation rejects impossible agreement tallies") {
  CHECK_THROWS_AS(make_calibration_stats(4, 6, 5, 6), ValidationError);
  CHECK_THROWS_AS(make_calibration_stats(0, 6, 0, 6), MissingClassError);
  CHECK_THROWS_AS(make_calibration_stats(4, 0, 4, 0), MissingClassError);
  CHECK_THROWS_AS(make_calibration_stats(0, 0, 0, 0), EmptyCalibrationError);
}

TEST_CASE("paired-label estimation agrees with the count form") {
  std::vector<LabeledPair> pairs;
  // 3 negatives (2 judged 0), 5 positives (4 judged 1).
  const std::uint8_t z[8] = {0, 0, 0, 1, 1, 1, 1, 1};
  const std::uint8_t zh[8] = {0, 0, 1, 1, 1, 1, 1, 0};
  std::vector<std::uint8_t> zt(z, z + 8), zj(zh, zh + 8);
  for (int i = 0; i < 8; ++i)
    pairs.push_back(LabeledPair{z[i], zh[i], "it" + std::to_string(i), "m"});

  const CalibrationStats a = estimate_calibration(pairs);
  const CalibrationStats b = estimate_calibration(zt, zj);
  const CalibrationStats c = make_calibration_stats(3, 5, 2, 4);
  CHECK(a.q0_hat == b.q0_hat);
  CHECK(a.q1_hat == b.q1_hat);
  CHECK(a.j_hat == b.j_hat);
  CHECK(a.q0_hat == c.q0_hat);
  CHECK(a.q1_hat == c.q1_hat);
  CHECK(b.m0 == 3);
  CHECK(b.m1 == 5);
}

TEST_CASE("estimation rejects degenerate label sets") {
  std::vector<std::uint8_t> ones(5, 1), zeros(5, 0), judged(5, 1);
  CHECK_THROWS_AS(estimate_calibration(ones, judged), MissingClassError);
  CHECK_THROWS_AS(estimate_calibration(zeros, judged), MissingClassError);
  std::vector<std::uint8_t> empty;
  CHECK_THROWS_AS(estimate_calibration(empty, empty), EmptyCalibrationError);
  std::vector<std::uint8_t> three(3, 0);
  CHECK_THROWS_AS(estimate_calibration(ones, three), ValidationError);
}

TEST_CASE("informedness gap follows the first-minus-second convention") {
  const CalibrationStats a = make_calibration_stats(10, 10, 9, 9);  // J=0.8
  const CalibrationStats b = make_calibration_stats(10, 10, 8, 7);  // J=0.5
  CHECK(delta_j(a, b) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(delta_j(b, a) == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("probability guard") {
  CHECK_NOTHROW(check_probability(0.0, "x"));
  CHECK_NOTHROW(check_probability(1.0, "x"));
  CHECK_THROWS_AS(check_probability(-0.001, "x"), ValidationError);
  CHECK_THROWS_AS(check_probability(1.001, "x"), ValidationError);
}
