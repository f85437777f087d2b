#include <doctest.h>

#include <cmath>
#include <map>

#include "cas/agreement.hpp"
#include "cas/rng.hpp"

using namespace cas;

TEST_SUITE_BEGIN("agreement");

namespace {

RatingRecord rec(const std::string& worker, const std::string& item, int grade,
                 LabelKind kind = LabelKind::D) {
    RatingRecord r;
    r.worker_id = worker;
    r.item_id = item;
    r.label_kind = kind;
    r.grade = grade;
    return r;
}

}  // namespace

TEST_CASE("cohen_kappa fixtures") {
    // perfect agreement across >= 2 categories
    const std::vector<int> a = {0, 1, 2, 1};
    CHECK(*cohen_kappa(a, a) == doctest::Approx(1.0));

    // hand example: p_o = 0.5, p_e = 0.5 -> kappa = 0
    const std::vector<int> x = {0, 0, 1, 1};
    const std::vector<int> y = {0, 1, 0, 1};
    CHECK(*cohen_kappa(x, y) == doctest::Approx(0.0));

    // symmetry
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
        std::vector<int> u, v;
        for (int i = 0; i < 12; ++i) {
            u.push_back(static_cast<int>(rng.below(3)));
            v.push_back(static_cast<int>(rng.below(3)));
        }
        const auto kuv = cohen_kappa(u, v);
        const auto kvu = cohen_kappa(v, u);
        CHECK(kuv.has_value() == kvu.has_value());
        if (kuv) {
            CHECK(*kuv == doctest::Approx(*kvu));
            CHECK(*kuv <= 1.0);
        }
    }

    // both raters constant and equal: defined as 1; constant but unequal: 0 kappa
    const std::vector<int> c1 = {1, 1, 1};
    CHECK(*cohen_kappa(c1, c1) == doctest::Approx(1.0));
    const std::vector<int> c2 = {2, 2, 2};
    CHECK(*cohen_kappa(c1, c2) == doctest::Approx(0.0));  // p_o = 0, p_e = 0

    // one rater constant, imperfect agreement: p_e < 1 so kappa defined
    const std::vector<int> c3 = {1, 1, 0};
    CHECK(cohen_kappa(c1, c3).has_value());
}

TEST_CASE("average_pairwise_kappa over co-rated items") {
    // two workers, identical ratings -> 1.0
    std::vector<RatingRecord> same = {rec("w1", "a", 0), rec("w1", "b", 1),
                                      rec("w2", "a", 0), rec("w2", "b", 1)};
    CHECK(*average_pairwise_kappa(same) == doctest::Approx(1.0));

    // three workers: mean over the three pairwise kappas
    std::vector<RatingRecord> three;
    const std::map<std::string, std::vector<int>> grades = {
        {"w1", {0, 1, 2, 0, 1}},
        {"w2", {0, 1, 1, 0, 2}},
        {"w3", {2, 1, 2, 0, 0}},
    };
    const std::vector<std::string> items = {"a", "b", "c", "d", "e"};
    for (const auto& [w, gs] : grades)
        for (size_t i = 0; i < items.size(); ++i)
            three.push_back(rec(w, items[i], gs[i]));
    auto k = [&](const char* wa, const char* wb) {
        return *cohen_kappa(grades.at(wa), grades.at(wb));
    };
    const double expected = (k("w1", "w2") + k("w1", "w3") + k("w2", "w3")) / 3;
    CHECK(*average_pairwise_kappa(three) == doctest::Approx(expected));

    // disjoint items -> no pair overlap -> absent
    std::vector<RatingRecord> disjoint = {rec("w1", "a", 0), rec("w2", "b", 1)};
    CHECK(!average_pairwise_kappa(disjoint).has_value());

    // undefined pairs are excluded from the mean: w3 overlaps only w1, with
    // constant disagreeing grades (kappa 0); w1-w2 agree perfectly
    std::vector<RatingRecord> mixed = {rec("w1", "a", 0), rec("w1", "b", 0),
                                       rec("w2", "a", 0), rec("w2", "b", 0),
                                       rec("w3", "c", 1)};
    CHECK(*average_pairwise_kappa(mixed) == doctest::Approx(1.0));
}

TEST_CASE("krippendorff alpha: agreement fixtures") {
    // perfect agreement everywhere
    std::vector<RatingRecord> perfect = {rec("w1", "a", 1), rec("w2", "a", 1),
                                         rec("w1", "b", 2), rec("w2", "b", 2)};
    CHECK(*krippendorff_alpha(perfect) == doctest::Approx(1.0));

    // units {a: (1,1), b: (0,0)}: no within-item disagreement
    std::vector<RatingRecord> two = {rec("w1", "a", 1), rec("w2", "a", 1),
                                     rec("w1", "b", 0), rec("w2", "b", 0)};
    CHECK(*krippendorff_alpha(two) == doctest::Approx(1.0));

    // all ratings identical -> expected disagreement 0 -> absent
    std::vector<RatingRecord> constant = {rec("w1", "a", 1), rec("w2", "a", 1)};
    CHECK(!krippendorff_alpha(constant).has_value());
}

TEST_CASE("krippendorff alpha against a hand-built coincidence oracle") {
    // independent construction: explicit coincidence matrix over units with
    // >= 2 ratings, nominal distance
    Rng rng(33);
    std::vector<RatingRecord> records;
    for (int item = 0; item < 12; ++item) {
        const int raters = 2 + static_cast<int>(rng.below(3));
        for (int w = 0; w < raters; ++w)
            records.push_back(rec("w" + std::to_string(w),
                                  "i" + std::to_string(item),
                                  static_cast<int>(rng.below(4))));
    }

    std::map<std::string, std::vector<int>> units;
    for (const auto& r : records) units[r.item_id].push_back(r.grade);
    double o[4][4] = {};
    for (const auto& [id, grades] : units) {
        const size_t m = grades.size();
        if (m < 2) continue;
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < m; ++j)
                if (i != j)
                    o[grades[i]][grades[j]] += 1.0 / static_cast<double>(m - 1);
    }
    double nc[4] = {}, n = 0;
    for (int c = 0; c < 4; ++c)
        for (int k = 0; k < 4; ++k) {
            nc[c] += o[c][k];
            n += o[c][k];
        }
    double d_o = 0, d_e = 0;
    for (int c = 0; c < 4; ++c)
        for (int k = 0; k < 4; ++k) {
            if (c == k) continue;
            d_o += o[c][k];
            d_e += nc[c] * nc[k];
        }
    const double expected = 1.0 - (d_o / n) / (d_e / (n * (n - 1)));

    CHECK(*krippendorff_alpha(records) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("nominal alpha is invariant under category relabeling") {
    Rng rng(91);
    std::vector<RatingRecord> records;
    for (int item = 0; item < 10; ++item)
        for (int w = 0; w < 3; ++w)
            records.push_back(rec("w" + std::to_string(w),
                                  "i" + std::to_string(item),
                                  static_cast<int>(rng.below(3))));
    const double base = *krippendorff_alpha(records);
    // permute categories 0->2, 1->0, 2->1
    std::vector<RatingRecord> permuted = records;
    for (auto& r : permuted) r.grade = (r.grade + 2) % 3;
    CHECK(*krippendorff_alpha(permuted) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ordinal alpha penalizes distant grades more") {
    // same disagreement pattern, once between adjacent grades, once between
    // extreme grades: ordinal alpha should drop more for the extreme case
    auto build = [](int hi) {
        std::vector<RatingRecord> rs;
        for (int item = 0; item < 8; ++item) {
            rs.push_back(rec("w1", "i" + std::to_string(item), 0, LabelKind::R));
            rs.push_back(rec("w2", "i" + std::to_string(item),
                             item % 2 ? 0 : hi, LabelKind::R));
        }
        // anchor items with full agreement on every grade
        for (int g = 0; g < 4; ++g) {
            rs.push_back(rec("w1", "anchor" + std::to_string(g), g, LabelKind::R));
            rs.push_back(rec("w2", "anchor" + std::to_string(g), g, LabelKind::R));
        }
        return rs;
    };
    const double adjacent = *krippendorff_alpha(build(1), AlphaMetric::Ordinal);
    const double extreme = *krippendorff_alpha(build(3), AlphaMetric::Ordinal);
    CHECK(extreme < adjacent);
}

TEST_CASE("filter_spammers: policy composition and report") {
    std::vector<RatingRecord> records;
    // prolific, honest
    for (int i = 0; i < 5; ++i) records.push_back(rec("good", "i" + std::to_string(i), 1));
    // two ratings only
    records.push_back(rec("sparse", "i0", 1));
    records.push_back(rec("sparse", "i1", 1));
    // quote violator
    for (int i = 0; i < 4; ++i) {
        RatingRecord r = rec("fabricator", "i" + std::to_string(i), 2);
        r.justification_text = "made up text";
        r.source_text = "cheap flights to Rome from all major airports";
        records.push_back(r);
    }
    // good quote, normalized match
    for (int i = 0; i < 4; ++i) {
        RatingRecord r = rec("quoter", "i" + std::to_string(i), 1);
        r.justification_text = "  Cheap   FLIGHTS to rome ";
        r.source_text = "cheap flights to Rome from all major airports";
        records.push_back(r);
    }

    SpamPolicy policy;
    policy.min_ratings = 3;
    policy.require_quote = true;
    const FilterResult result = filter_spammers(records, policy);

    REQUIRE(result.removed.size() == 2);
    std::map<std::string, std::vector<std::string>> reasons;
    for (const auto& w : result.removed) reasons[w.worker_id] = w.reasons;
    CHECK(reasons.at("sparse") == std::vector<std::string>{"min_ratings"});
    CHECK(reasons.at("fabricator") == std::vector<std::string>{"quote_mismatch"});
    for (const auto& r : result.kept) {
        CHECK(r.worker_id != "sparse");
        CHECK(r.worker_id != "fabricator");
    }

    // no disagreement threshold -> no disagreement removals
    for (const auto& w : result.removed)
        for (const auto& reason : w.reasons) CHECK(reason != "disagreement");
}

TEST_CASE("filter_spammers is idempotent") {
    Rng rng(321);
    std::vector<RatingRecord> records;
    // 6 consistent workers, 2 random-label workers
    for (int item = 0; item < 20; ++item) {
        const int true_grade = static_cast<int>(rng.below(3));
        for (int w = 0; w < 6; ++w)
            records.push_back(rec("good" + std::to_string(w),
                                  "i" + std::to_string(item),
                                  rng.bernoulli(0.85)
                                      ? true_grade
                                      : static_cast<int>(rng.below(3))));
        for (int w = 0; w < 2; ++w)
            records.push_back(rec("spam" + std::to_string(w),
                                  "i" + std::to_string(item),
                                  static_cast<int>(rng.below(3))));
    }
    SpamPolicy policy;
    policy.min_ratings = 3;
    policy.disagreement_threshold = 0.2;

    const FilterResult once = filter_spammers(records, policy);
    const FilterResult twice = filter_spammers(once.kept, policy);
    CHECK(twice.removed.empty());
    CHECK(twice.kept == once.kept);
}

TEST_CASE("aggregate_histograms folds records into session-format histograms") {
    std::vector<RatingRecord> records = {
        rec("w1", "a", 0, LabelKind::D), rec("w2", "a", 2, LabelKind::D),
        rec("w3", "a", 2, LabelKind::D), rec("w1", "a", 3, LabelKind::R),
        rec("w2", "a", 1, LabelKind::R), rec("w1", "b", 1, LabelKind::D),
    };
    const auto hists = aggregate_histograms(records);
    REQUIRE(hists.size() == 2);
    CHECK(hists.at("a").d.counts == std::vector<int>{1, 0, 2});
    CHECK(hists.at("a").r.counts == std::vector<int>{0, 1, 0, 1});
    CHECK(hists.at("b").d.counts == std::vector<int>{0, 1, 0});
    CHECK(hists.at("b").r.counts == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("agreement_report has the per-kind removal/agreement shape") {
    std::vector<RatingRecord> records;
    for (int i = 0; i < 4; ++i) {
        records.push_back(rec("w1", "i" + std::to_string(i), 1, LabelKind::D));
        records.push_back(rec("w2", "i" + std::to_string(i), 1, LabelKind::D));
        records.push_back(rec("w1", "i" + std::to_string(i), 2, LabelKind::R));
        records.push_back(rec("w2", "i" + std::to_string(i), 2, LabelKind::R));
    }
    records.push_back(rec("tiny", "i0", 0, LabelKind::D));

    SpamPolicy policy;
    const AgreementReport report = agreement_report(records, policy);
    const AgreementStats& d = report.per_kind.at(LabelKind::D);
    CHECK(d.workers_total == 3);
    CHECK(d.workers_removed == 1);
    CHECK(d.ratings_total == 9);
    CHECK(d.ratings_removed == 1);
    CHECK(*d.kappa == doctest::Approx(1.0));
    const AgreementStats& r = report.per_kind.at(LabelKind::R);
    CHECK(r.workers_total == 2);
    CHECK(r.workers_removed == 0);

    // single worker: agreement absent, only min_ratings removals possible
    std::vector<RatingRecord> solo = {rec("only", "a", 1), rec("only", "b", 2),
                                      rec("only", "c", 0)};
    const AgreementReport solo_report = agreement_report(solo, policy);
    CHECK(!solo_report.per_kind.at(LabelKind::D).kappa.has_value());
    CHECK(solo_report.filter.removed.empty());
}

TEST_SUITE_END();
