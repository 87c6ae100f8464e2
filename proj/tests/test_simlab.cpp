#include "capacc/simlab.hpp"

#include "capacc/graph.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace capacc;

TEST_CASE("conditional autoregression precision has unit-variance margins") {
    const BoolMatrix w = banded_adjacency(6, 2);
    const PrecisionModel model = car_precision(w, 0.6);
    const Matrix& q = model.q();
    const Matrix sigma = q.inverse();
    for (int i = 0; i < 6; ++i) {
        CHECK(sigma(i, i) == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i == j) continue;
            if (w(i, j)) {
                CHECK(std::abs(q(i, j)) > 0.0);
            } else {
                CHECK(q(i, j) == 0.0);  // non-edges are structural zeros
            }
        }
    }
    CHECK(model.mu0().isZero(0.0));

    // an isolated vertex leaves a zero row, which is not invertible
    BoolMatrix lonely = BoolMatrix::Constant(3, 3, false);
    lonely(0, 1) = lonely(1, 0) = true;
    CHECK_THROWS_AS((void)car_precision(lonely, 0.5), NumericError);

    CHECK_THROWS_AS((void)car_precision(w, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)car_precision(w, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)car_precision(w, -0.5), std::invalid_argument);
    BoolMatrix asym = w;
    asym(0, 1) = false;
    CHECK_THROWS_AS((void)car_precision(asym, 0.5), std::invalid_argument);
}

TEST_CASE("equicorrelation precision inverts its covariance") {
    for (double rho : {0.5, 0.9, -0.1}) {
        const int p = 6;
        const PrecisionModel model = constant_correlation_precision(p, rho);
        const Matrix sigma =
            rho * Matrix::Ones(p, p) + (1.0 - rho) * Matrix::Identity(p, p);
        const Matrix prod = model.q() * sigma;
        CHECK((prod - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-10);
    }
    const PrecisionModel single = constant_correlation_precision(1, 0.7);
    CHECK(single.q()(0, 0) == 1.0);

    CHECK_THROWS_AS((void)constant_correlation_precision(0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)constant_correlation_precision(4, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)constant_correlation_precision(4, -1.0 / 3.0),
                    std::invalid_argument);
}

TEST_CASE("scenario sampling is reproducible and honours the plan") {
    SimScenario sc;
    sc.n = 120;
    PlannedAnomaly late;
    late.start = 80;
    late.end = 100;
    late.variables = {4, 2};
    late.theta = 2.5;
    PlannedAnomaly early;
    early.start = 20;
    early.end = 35;
    early.variables = {1};
    early.theta = 1.0;
    sc.anomalies = {late, early};  // deliberately out of order
    PlannedPoint pt1;
    pt1.time = 110;
    pt1.n_variables = 2;
    PlannedPoint pt2;
    pt2.time = 50;
    pt2.n_variables = 1;
    pt2.size_sd = 3.0;
    sc.points = {pt1, pt2};

    const PrecisionModel model = car_precision(banded_adjacency(5, 1), 0.5);
    const SimData a = sample_scenario(sc, model, 42);
    const SimData b = sample_scenario(sc, model, 42);
    const SimData c = sample_scenario(sc, model, 43);

    CHECK(a.data.values() == b.data.values());
    CHECK(a.data.values() != c.data.values());

    REQUIRE(a.truth.collective.size() == 2);
    CHECK(a.truth.collective[0].start == 20);   // sorted by start
    CHECK(a.truth.collective[0].end == 35);
    CHECK(a.truth.collective[0].variables == std::vector<int>{1});
    CHECK(a.truth.collective[1].start == 80);
    CHECK(a.truth.collective[1].variables == std::vector<int>{2, 4});
    CHECK(a.truth.collective[0].saving == 0.0);
    for (const auto& ca : a.truth.collective) {
        CHECK(ca.mean_estimate.norm() ==
              doctest::Approx(ca.start == 20 ? 1.0 : 2.5).epsilon(1e-9));
    }

    REQUIRE(a.truth.points.size() == 2);
    CHECK(a.truth.points[0].time == 50);  // sorted by time
    CHECK(a.truth.points[1].time == 110);
    CHECK(a.truth.points[0].variables.size() == 1);
    CHECK(a.truth.points[1].variables.size() == 2);
    for (const auto& pa : a.truth.points) {
        CHECK(std::is_sorted(pa.variables.begin(), pa.variables.end()));
        for (int v : pa.variables) {
            CHECK(v >= 1);
            CHECK(v <= 5);
        }
    }

    // the planted block moves the sample mean of exactly those rows/columns
    const Vector mu = a.truth.collective[1].mean_estimate;
    REQUIRE(mu.size() == 2);
    const auto& values = a.data.values();
    const double m1 = values.block(80, 1, 20, 1).mean();
    const double m3 = values.block(80, 3, 20, 1).mean();
    CHECK(std::abs(m1 - mu(0)) < 1.5);  // noise mean has sd ~ 0.22
    CHECK(std::abs(m3 - mu(1)) < 1.5);
    const double quiet = values.block(40, 1, 20, 1).mean();
    CHECK(std::abs(quiet) < 1.5);
}

TEST_CASE("equal-entry changes arise from fully correlated draws") {
    SimScenario sc;
    sc.n = 40;
    PlannedAnomaly an;
    an.start = 10;
    an.end = 20;
    an.variables = {1, 2, 3, 4};
    an.theta = 3.0;
    an.change_class = ChangeClass::correlated;
    an.rho_change = 1.0;
    sc.anomalies = {an};
    const PrecisionModel model = constant_correlation_precision(4, 0.3);
    const SimData sim = sample_scenario(sc, model, 7);
    const Vector& mu = sim.truth.collective[0].mean_estimate;
    REQUIRE(mu.size() == 4);
    for (int k = 1; k < 4; ++k) {
        CHECK(mu(k) == doctest::Approx(mu(0)).epsilon(1e-12));
    }
    CHECK(std::abs(mu(0)) == doctest::Approx(3.0 / 2.0).epsilon(1e-9));

    an.rho_change = 0.4;  // partial correlation still rescales to theta
    sc.anomalies = {an};
    const SimData partial = sample_scenario(sc, model, 8);
    CHECK(partial.truth.collective[0].mean_estimate.norm() ==
          doctest::Approx(3.0).epsilon(1e-9));

    an.rho_change = -0.2;
    sc.anomalies = {an};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 9), std::invalid_argument);
}

TEST_CASE("scenario validation rejects malformed plans") {
    const PrecisionModel model = constant_correlation_precision(3, 0.2);
    SimScenario sc;
    sc.n = 1;
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);

    sc.n = 50;
    PlannedAnomaly an;
    an.start = 10;
    an.end = 10;
    an.variables = {1};
    sc.anomalies = {an};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);

    an.end = 60;
    sc.anomalies = {an};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);

    an.end = 20;
    an.variables = {4};
    sc.anomalies = {an};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);

    an.variables = {1};
    an.theta = 0.0;
    sc.anomalies = {an};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);

    an.theta = 1.0;
    PlannedAnomaly other = an;
    other.start = 15;
    other.end = 30;
    sc.anomalies = {an, other};  // overlaps (10, 20]
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);

    sc.anomalies.clear();
    PlannedPoint pt;
    pt.time = 0;
    sc.points = {pt};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);
    pt.time = 5;
    pt.n_variables = 4;
    sc.points = {pt};
    CHECK_THROWS_AS((void)sample_scenario(sc, model, 1), std::invalid_argument);
}

TEST_CASE("row labels mark collective segments and points") {
    AnomalySet set;
    CollectiveAnomaly ca;
    ca.start = 2;
    ca.end = 5;
    set.collective = {ca};
    PointAnomaly pa;
    pa.time = 7;
    set.points = {pa};
    CHECK(anomaly_labels(set, 10) ==
          std::vector<int>{0, 0, 1, 1, 1, 0, 1, 0, 0, 0});
    CHECK(anomaly_labels(AnomalySet{}, 3) == std::vector<int>{0, 0, 0});
}

TEST_CASE("adjusted rand index on frozen partitions") {
    CHECK(adjusted_rand_index({1, 1, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 0}) ==
          doctest::Approx(8.0 / 23.0).epsilon(1e-12));
    CHECK(adjusted_rand_index({0, 1, 0, 1}, {0, 1, 0, 1}) == 1.0);
    CHECK(adjusted_rand_index({0, 1, 0, 1}, {5, 9, 5, 9}) == 1.0);  // relabelled
    CHECK(adjusted_rand_index({2, 2, 2}, {2, 2, 2}) == 1.0);        // degenerate
    CHECK(adjusted_rand_index({2, 2, 2}, {1, 2, 2}) == 0.0);
    CHECK(adjusted_rand_index({0, 0, 1}, {1, 1, 1}) == 0.0);
    CHECK_THROWS_AS((void)adjusted_rand_index({1, 2}, {1, 2, 3}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)adjusted_rand_index({}, {}), std::invalid_argument);
}

TEST_CASE("subset metrics follow the stated conventions") {
    SubsetMetrics m = subset_metrics({1, 2, 3}, {2, 3, 4});
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));

    m = subset_metrics({}, {});
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);

    m = subset_metrics({1}, {});
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);

    m = subset_metrics({}, {1});
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);

    m = subset_metrics({2, 3}, {2, 2, 3});  // duplicates collapse
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
}

TEST_CASE("detection evaluation fills exactly the overlap figures") {
    AnomalySet truth;
    CollectiveAnomaly ca;
    ca.start = 10;
    ca.end = 20;
    ca.variables = {1, 2};
    truth.collective = {ca};
    AnomalySet detected;
    ca.start = 12;
    ca.end = 22;
    ca.variables = {2, 3};
    detected.collective = {ca};

    const EvaluationReport rep = evaluate_detection(truth, detected, 50);
    REQUIRE(rep.ari.has_value());
    REQUIRE(rep.subset_precision.has_value());
    REQUIRE(rep.subset_recall.has_value());
    CHECK_FALSE(rep.power.has_value());
    CHECK_FALSE(rep.false_positive_rate.has_value());
    CHECK_FALSE(rep.rmse_tau.has_value());

    CHECK(*rep.ari == adjusted_rand_index(anomaly_labels(truth, 50),
                                          anomaly_labels(detected, 50)));
    const SubsetMetrics m = subset_metrics({1, 2}, {2, 3});
    CHECK(*rep.subset_precision == m.precision);
    CHECK(*rep.subset_recall == m.recall);
}

TEST_CASE("scale tuning lands the false positive rate in the band") {
    const PrecisionModel model = constant_correlation_precision(3, 0.4);
    const auto detects = [](const DataMatrix& data, double scale) {
        return data.values().col(0).cwiseAbs().maxCoeff() > scale;
    };
    const TuneResult one =
        tune_scale(model, 100, 0.05, 0.02, 200, detects, 2026, 1);
    CHECK(one.alpha_hat >= 0.03);
    CHECK(one.alpha_hat <= 0.07);
    CHECK(one.scale > 0.1);
    CHECK(one.scale < 100.0);
    CHECK(one.iterations >= 3);

    const TuneResult four =
        tune_scale(model, 100, 0.05, 0.02, 200, detects, 2026, 4);
    CHECK(four.scale == one.scale);
    CHECK(four.alpha_hat == one.alpha_hat);
    CHECK(four.iterations == one.iterations);
}

TEST_CASE("scale tuning reports hopeless detectors") {
    const PrecisionModel model = constant_correlation_precision(2, 0.2);
    const auto always = [](const DataMatrix&, double) { return true; };
    CHECK_THROWS_AS(
        (void)tune_scale(model, 50, 0.05, 0.02, 20, always, 1, 1),
        NumericError);
    const auto never = [](const DataMatrix&, double) { return false; };
    CHECK_THROWS_AS(
        (void)tune_scale(model, 50, 0.05, 0.02, 20, never, 1, 1),
        NumericError);
    CHECK_THROWS_AS(
        (void)tune_scale(model, 50, 0.05, 0.02, 0, always, 1, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        (void)tune_scale(model, 50, 1.5, 0.02, 20, always, 1, 1),
        std::invalid_argument);
}

TEST_CASE("scale tuning detects an unreachable band") {
    // ten reusable datasets make alpha a multiple of 0.10, so the band
    // (0.03, 0.07) can never be hit and the bisection must give up
    const PrecisionModel model = constant_correlation_precision(2, 0.2);
    const auto detects = [](const DataMatrix& data, double scale) {
        return data.values().cwiseAbs().maxCoeff() > scale;
    };
    CHECK_THROWS_AS(
        (void)tune_scale(model, 60, 0.05, 0.02, 10, detects, 99, 1),
        ConvergenceError);
}

TEST_CASE("count-based tuning walks the geometric grid") {
    // a step function of scale: high counts below 1, the target at [1, 10),
    // then zero
    const auto staircase = [](double scale) {
        if (scale < 1.0) return 7;
        if (scale < 10.0) return 3;
        return 0;
    };
    const CountTuneResult hit = count_based_tune(staircase, 3);
    CHECK(hit.exact);
    CHECK(hit.count == 3);
    CHECK(hit.scale >= 1.0);
    CHECK(hit.scale < 10.0);
    CHECK(hit.grid_violations == 0);
    // first exact grid point wins: the smallest grid scale at or above 1
    const double expected = [] {
        for (int k = 0; k <= 50; ++k) {
            const double s = 0.1 * std::pow(1000.0, k / 50.0);
            if (s >= 1.0) return s;
        }
        return 100.0;
    }();
    CHECK(hit.scale == expected);

    // no grid point yields 5; counts 3 and 7 tie at distance 2, and the
    // larger scale (count 3) wins the tie
    const CountTuneResult miss = count_based_tune(staircase, 5);
    CHECK_FALSE(miss.exact);
    CHECK(miss.count == 3);
    CHECK(miss.scale >= 1.0);

    // a non-monotone counter is reported
    const auto bumpy = [](double scale) { return scale > 5.0 && scale < 7.0 ? 9 : 1; };
    const CountTuneResult odd = count_based_tune(bumpy, 1);
    CHECK(odd.grid_violations > 0);
    CHECK(odd.exact);

    CHECK_THROWS_AS((void)count_based_tune(staircase, -1), std::invalid_argument);
}
