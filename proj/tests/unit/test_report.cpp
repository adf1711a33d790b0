#include <doctest.h>

#include "mllmsent/error.hpp"
#include "mllmsent/report.hpp"
#include "test_env.hpp"

using namespace mllmsent;
using namespace mllmsent::evalkit;
using labeling::ProblemSetup;

namespace {

ProblemSetup p3() { return ProblemSetup::make(corpus::DatasetId::percept5, 3, 3); }

// fold f gets `correct` right answers out of 10 on class 0 (misses go to class 1)
std::vector<ConfusionMatrix> folds(const std::vector<int>& correct, int invalid = 0) {
    std::vector<ConfusionMatrix> out;
    for (int c : correct) {
        ConfusionMatrix cm(3);
        cm.add(0, 0, static_cast<std::size_t>(c));
        if (10 - c - invalid > 0) cm.add(0, 1, static_cast<std::size_t>(10 - c - invalid));
        if (invalid) cm.add_invalid(0, static_cast<std::size_t>(invalid));
        out.push_back(cm);
    }
    return out;
}

}  // namespace

TEST_CASE("report aggregates per-fold accuracy with a t interval") {
    auto r = make_report(p3(), "sys", "task1", Metric::accuracy, folds({5, 6, 5, 6, 5}));
    REQUIRE(r.mean.has_value());
    CHECK(*r.mean == doctest::Approx(0.54));
    REQUIRE(r.ci95_halfwidth.has_value());
    CHECK(*r.ci95_halfwidth > 0.0);
    CHECK(r.per_fold_scores.size() == 5);
    CHECK(r.confusion.at(0, 0) == 27);
    CHECK_FALSE(r.invalid_flag);
    CHECK_FALSE(r.excluded.has_value());
}

TEST_CASE("high invalid rate withholds the score") {
    auto r = make_report(p3(), "minigpt4", "task1", Metric::f1_macro, folds({2, 2, 2, 2, 2}, 6));
    CHECK(r.invalid_rate == doctest::Approx(0.6));
    CHECK(r.invalid_flag);
    CHECK_FALSE(r.mean.has_value());
    REQUIRE(r.excluded.has_value());
    CHECK(r.excluded->per_fold_scores.size() == 5);
    auto table = render_table({r});
    CHECK(table.find("—") != std::string::npos);
    CHECK(table.find("withheld") != std::string::npos);
}

TEST_CASE("moderate invalid rate keeps the score and adds excluded accounting") {
    auto r = make_report(p3(), "s", "task1", Metric::accuracy, folds({6, 6, 6, 6, 6}, 2));
    REQUIRE(r.mean.has_value());
    CHECK(*r.mean == doctest::Approx(0.6));
    REQUIRE(r.excluded.has_value());
    CHECK(r.excluded->mean == doctest::Approx(0.75));
}

TEST_CASE("compare fills paired tests and relative gains within a setup") {
    std::vector<EvalReport> rs{make_report(p3(), "a", "t", Metric::accuracy, folds({6, 7, 5, 7, 6})),
                               make_report(p3(), "b", "t", Metric::accuracy, folds({5, 5, 5, 6, 4})),
                               make_report(p3(), "c", "t", Metric::accuracy, folds({5, 6, 4, 6, 5}))};
    auto other = ProblemSetup::make(corpus::DatasetId::percept5, 5, 3);
    rs.push_back(make_report(other, "a", "t", Metric::accuracy, folds({5, 5, 5, 5, 6})));
    compare(rs);
    REQUIRE(rs[0].pairwise.size() == 2);
    CHECK(rs[0].pairwise[0].other_system == "b");
    REQUIRE(rs[0].pairwise[0].t_stat.has_value());
    CHECK(*rs[0].pairwise[0].t_stat > 0);
    // a - c is a constant 0.1 per fold
    CHECK_FALSE(rs[0].pairwise[1].t_stat.has_value());
    CHECK(rs[0].pairwise[1].note == "ZeroVarianceDifferences");
    REQUIRE(rs[0].relative_gains.size() == 2);
    CHECK(rs[0].relative_gains[0].gain == doctest::Approx((0.62 - 0.5) / 0.5));
    CHECK(rs[3].pairwise.empty());
}

TEST_CASE("reports round-trip through json and files") {
    mllmsent::testing::TempDir tmp;
    std::vector<EvalReport> rs{make_report(p3(), "a", "t", Metric::f1_macro, folds({6, 7, 5, 7, 6})),
                               make_report(p3(), "b", "t", Metric::f1_macro, folds({2, 2, 2, 2, 2}, 6))};
    compare(rs);
    auto files = emit_report(rs, tmp.path(), "summary");
    auto back = load_reports(files.json);
    REQUIRE(back.size() == 2);
    CHECK(to_json(back[0]) == to_json(rs[0]));
    CHECK(to_json(back[1]) == to_json(rs[1]));
    auto chart = mllmsent::testing::read_file(files.chart);
    CHECK(chart.rfind("setup,system,mean,ci_low,ci_high\n", 0) == 0);
    CHECK(chart.find("sigma3_p3,b,,,") != std::string::npos);
    mllmsent::testing::write_file(tmp / "bad.json", "{\"schema\": \"other\"}");
    CHECK_THROWS_AS(load_reports(tmp / "bad.json"), SchemaMismatch);
}

TEST_CASE("problem table lists one row per setup and method") {
    auto s3 = ProblemSetup::make(corpus::DatasetId::deep2, 3, 2);
    auto s5 = ProblemSetup::make(corpus::DatasetId::deep2, 5, 2);
    auto fold2 = [](int c) {
        std::vector<ConfusionMatrix> out;
        for (int i = 0; i < 5; ++i) {
            ConfusionMatrix cm(2);
            cm.add(0, 0, static_cast<std::size_t>(c + i % 2));
            cm.add(1, 0, static_cast<std::size_t>(10 - c - i % 2));
            out.push_back(cm);
        }
        return out;
    };
    std::vector<EvalReport> rs{make_report(s3, "m1", "cross_dataset", Metric::accuracy, fold2(6)),
                               make_report(s3, "m2", "cross_dataset", Metric::accuracy, fold2(7)),
                               make_report(s5, "m1", "cross_dataset", Metric::accuracy, fold2(8))};
    auto t = render_problem_table(rs);
    CHECK(t.find("problem") != std::string::npos);
    CHECK(t.find("method") != std::string::npos);
    CHECK(t.find("accuracy") != std::string::npos);
    auto l1 = t.find("sigma3_p2 | m1");
    auto l2 = t.find("sigma3_p2 | m2");
    auto l3 = t.find("sigma5_p2 | m1");
    REQUIRE(l1 != std::string::npos);
    REQUIRE(l2 != std::string::npos);
    REQUIRE(l3 != std::string::npos);
    CHECK(l1 < l2);
    CHECK(l2 < l3);
    CHECK(t.find("±") != std::string::npos);
}

TEST_CASE("metric names round-trip") {
    for (auto m : {Metric::f1_macro, Metric::f1_weighted, Metric::accuracy}) {
        CHECK(metric_from_string(to_string(m)) == m);
    }
}
