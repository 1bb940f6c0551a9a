#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "relight/filtering.hpp"
#include "test_util.hpp"

using namespace relight;
using relight::testing::TempDir;

namespace {
std::vector<std::string> make_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("img" + std::to_string(i));
    return ids;
}
} // namespace

TEST(Filter, AverageAndStrictThreshold) {
    const std::vector<double> s{0.2, 0.22, 0.21};
    EXPECT_DOUBLE_EQ(average_scores(s), (0.2 + 0.22 + 0.21) / 3);
    EXPECT_FALSE(passes_threshold(0.21));
    EXPECT_TRUE(passes_threshold(std::nextafter(0.21, 1.0)));
    EXPECT_FALSE(passes_threshold(0.2099));
    EXPECT_THROW(average_scores({}), Error);
    const std::vector<double> bad{0.1, std::nan("")};
    EXPECT_THROW(average_scores(bad), Error);
}

TEST(Filter, DefaultPrompts) {
    const auto& p = default_lighting_prompts();
    EXPECT_EQ(p.size(), 7u);
    EXPECT_EQ(std::set<std::string>(p.begin(), p.end()).size(), 7u);
}

TEST(Split, ExactCountsDisjointAndDeterministic) {
    const auto ids = make_ids(120);
    const SplitCounts counts{100, 10, 10};
    const auto a = split_dataset(ids, counts, 3);
    ASSERT_EQ(a.size(), 120u);
    std::map<Split, std::size_t> n;
    std::set<std::string> seen;
    for (const auto& x : a) {
        ++n[x.split];
        EXPECT_TRUE(seen.insert(x.image_id).second);
    }
    EXPECT_EQ(n[Split::train], 100u);
    EXPECT_EQ(n[Split::val], 10u);
    EXPECT_EQ(n[Split::test], 10u);
    EXPECT_EQ(a, split_dataset(ids, counts, 3));
    EXPECT_NE(a, split_dataset(ids, counts, 4));
}

TEST(Split, IndependentOfInputOrder) {
    auto ids = make_ids(50);
    const auto a = split_dataset(ids, {30, 10, 10}, 9);
    std::reverse(ids.begin(), ids.end());
    EXPECT_EQ(a, split_dataset(ids, {30, 10, 10}, 9));
}

TEST(Split, SurplusIsLeftOutAndShortfallThrows) {
    const auto a = split_dataset(make_ids(20), {5, 2, 2}, 1);
    EXPECT_EQ(a.size(), 9u);
    try {
        split_dataset(make_ids(8), {5, 2, 2}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientIds);
    }
    EXPECT_THROW(split_dataset({"a", "b", "a"}, {1, 1, 0}, 1), Error);
}

TEST(Split, NamesRoundTrip) {
    for (auto s : {Split::train, Split::val, Split::test, Split::unassigned}) EXPECT_EQ(parse_split(to_string(s)), s);
    EXPECT_THROW(parse_split("holdout"), Error);
}

TEST(ScoreRows, ParseAndReject) {
    const auto fs = parse_score_row(R"({"image_id": "x", "prompt_scores": [0.2, 0.3]})", 2);
    EXPECT_EQ(fs.image_id, "x");
    EXPECT_DOUBLE_EQ(fs.mean_score, 0.25);
    for (const char* bad : {R"({"image_id": "x", "prompt_scores": [0.2]})", R"({"prompt_scores": [0.2, 0.3]})",
                            R"({"image_id": "x", "prompt_scores": [0.2, "a"]})", R"(not json)",
                            R"({"image_id": "", "prompt_scores": [0.2, 0.3]})"}) {
        try {
            parse_score_row(bad, 2);
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::MalformedRow) << bad;
        }
    }
}

TEST(ScoreRows, FileReportsBadLinesWithoutAborting) {
    TempDir tmp;
    relight::testing::write_text(tmp / "s.jsonl", "{\"image_id\": \"a\", \"prompt_scores\": [0.3]}\n"
                                                  "\n"
                                                  "garbage\n"
                                                  "{\"image_id\": \"b\", \"prompt_scores\": [0.1]}\n");
    const auto rows = read_scores(tmp / "s.jsonl", 1);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_TRUE(rows[0].score);
    EXPECT_FALSE(rows[1].score);
    EXPECT_EQ(rows[1].line_number, 3u);
    EXPECT_FALSE(rows[1].error.empty());
    EXPECT_EQ(rows[2].image_id, "b");
    EXPECT_THROW(read_scores(tmp / "nope.jsonl", 1), Error);
}
