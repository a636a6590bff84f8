#include <gtest/gtest.h>

#include <random>

#include "holopulse/skeleton.hpp"
#include "oracles.hpp"

using namespace holopulse;

namespace {

BinaryMask from_rows(const std::vector<std::string>& rows) {
    BinaryMask m(rows.size(), rows.front().size());
    for (std::size_t y = 0; y < rows.size(); ++y)
        for (std::size_t x = 0; x < rows[y].size(); ++x) m(y, x) = rows[y][x] == '#';
    return m;
}

bool has_solid_2x2(const BinaryMask& m) {
    for (std::size_t y = 0; y + 1 < m.height(); ++y)
        for (std::size_t x = 0; x + 1 < m.width(); ++x)
            if (m(y, x) && m(y + 1, x) && m(y, x + 1) && m(y + 1, x + 1)) return true;
    return false;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

}  // namespace

TEST(Skeletonize, EmptyAndSinglePixel) {
    BinaryMask empty(6, 6);
    EXPECT_EQ(skeletonize(empty), empty);
    BinaryMask one(5, 5);
    one(2, 3) = 1;
    EXPECT_EQ(skeletonize(one), one);
}

TEST(Skeletonize, SolidBarMatchesReferenceThinning) {
    BinaryMask bar(9, 16);
    for (std::size_t y = 3; y < 6; ++y)
        for (std::size_t x = 3; x < 13; ++x) bar(y, x) = 1;
    const auto sk = skeletonize(bar);
    EXPECT_EQ(sk, oracle::zhang_suen(bar));
    // A horizontal line on the middle row.
    std::size_t n = 0;
    for (std::size_t y = 0; y < 9; ++y)
        for (std::size_t x = 0; x < 16; ++x)
            if (sk(y, x)) {
                EXPECT_EQ(y, 4u);
                ++n;
            }
    EXPECT_GE(n, 6u);
    EXPECT_LE(n, 10u);
}

TEST(Skeletonize, TwoByTwoBlockKeepsOnePixel) {
    BinaryMask sq(4, 4);
    sq(1, 1) = sq(1, 2) = sq(2, 1) = sq(2, 2) = 1;
    // Plain Zhang-Suen erases the block completely.
    EXPECT_EQ(count_foreground(oracle::zhang_suen(sq)), 0u);
    const auto sk = skeletonize(sq);
    EXPECT_EQ(count_foreground(sk), 1u);
    EXPECT_TRUE(subset(sk, sq));
}

TEST(Skeletonize, StaircaseBecomesEightConnectedPath) {
    const auto m = from_rows({
        "##......",
        ".##.....",
        "..##....",
        "...##...",
        "....##..",
    });
    const auto sk = skeletonize(m);
    EXPECT_TRUE(find_junctions(sk).empty());
    EXPECT_EQ(oracle::component_count(sk), 1u);
    EXPECT_EQ(label_segments(sk).count, 1u);
}

TEST(FindJunctions, LineHasNone) {
    BinaryMask line(5, 9);
    for (std::size_t x = 1; x < 8; ++x) line(2, x) = 1;
    EXPECT_TRUE(find_junctions(line).empty());
}

TEST(FindJunctions, PlusSignCentre) {
    const auto plus = from_rows({
        "...#...",
        "...#...",
        "...#...",
        "#######",
        "...#...",
        "...#...",
        "...#...",
    });
    // The four pixels next to the centre see three or more neighbours too.
    const std::vector<Pixel> expected{{2, 3}, {3, 2}, {3, 3}, {3, 4}, {4, 3}};
    EXPECT_EQ(find_junctions(plus), expected);
}

TEST(FindJunctions, YShapeMatchesBruteForce) {
    const auto y = from_rows({
        "#.....#",
        ".#...#.",
        "..#.#..",
        "...#...",
        "...#...",
        "...#...",
    });
    std::vector<Pixel> brute;
    for (long r = 0; r < 6; ++r)
        for (long c = 0; c < 7; ++c)
            if (y(r, c) && oracle::neighbours(y, r, c) >= 3) brute.push_back({r, c});
    EXPECT_EQ(find_junctions(y), brute);
    ASSERT_EQ(brute.size(), 1u);
    EXPECT_EQ(brute[0], (Pixel{3, 3}));
}

TEST(LabelSegments, PlusSignGivesFourArms) {
    const auto plus = from_rows({
        "...#...",
        "...#...",
        "...#...",
        "#######",
        "...#...",
        "...#...",
        "...#...",
    });
    auto without_junctions = plus;
    for (long y = 0; y < 7; ++y)
        for (long x = 0; x < 7; ++x)
            if (plus(y, x) && oracle::neighbours(plus, y, x) >= 3) without_junctions(y, x) = 0;
    const auto segs = label_segments(plus);
    EXPECT_EQ(segs.count, oracle::component_count(without_junctions));
    EXPECT_EQ(segs.count, 4u);
    // Row-major first-pixel order: top arm, left arm, right arm, bottom arm.
    EXPECT_EQ(segs.labels(0, 3), 1);
    EXPECT_EQ(segs.labels(3, 0), 2);
    EXPECT_EQ(segs.labels(3, 6), 3);
    EXPECT_EQ(segs.labels(6, 3), 4);
    EXPECT_EQ(segs.labels(3, 3), 0);
}

TEST(LabelSegments, LineAndEmpty) {
    BinaryMask line(5, 9);
    for (std::size_t x = 1; x < 8; ++x) line(2, x) = 1;
    const auto s = label_segments(line);
    EXPECT_EQ(s.count, 1u);
    EXPECT_EQ(segment_sizes(s)[1], 7u);
    EXPECT_EQ(label_segments(BinaryMask(4, 4)).count, 0u);
}

TEST(LabelSegments, IsolatedPixelsAreDropped) {
    // Removing the T junction leaves the stub pixel below it alone.
    const auto t = from_rows({
        "#######",
        "...#...",
        ".......",
    });
    const auto segs = label_segments(t);
    EXPECT_EQ(segs.labels(1, 3), 0);
    EXPECT_EQ(segs.count, 2u);
}

TEST(PruneShortSegments, Identity) {
    std::mt19937_64 rng(5);
    const auto segs = label_segments(skeletonize(oracle::random_blobs(rng, 40, 40, 6)));
    EXPECT_EQ(prune_short_segments(segs, 1), segs);
    EXPECT_THROW(prune_short_segments(segs, 0), Error);
}

TEST(PruneShortSegments, ThresholdAndRelabel) {
    LabeledSegments segs{Grid<std::int32_t>(3, 12, 0), 2};
    for (std::size_t x = 0; x < 3; ++x) segs.labels(0, x) = 1;
    for (std::size_t x = 0; x < 10; ++x) segs.labels(2, x) = 2;
    const auto p = prune_short_segments(segs, 5);
    EXPECT_EQ(p.count, 1u);
    EXPECT_EQ(p.labels(0, 0), 0);
    EXPECT_EQ(p.labels(2, 0), 1);
    EXPECT_EQ(segment_sizes(p)[1], 10u);
}

TEST(PruneShortSegments, SurvivorsMeetMinimumLength) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto segs = label_segments(skeletonize(oracle::random_blobs(rng, 48, 48, 8)));
        const std::size_t k = 1 + trial % 7;
        const auto p = prune_short_segments(segs, k);
        const auto sizes = segment_sizes(p);
        for (std::size_t l = 1; l <= p.count; ++l) EXPECT_GE(sizes[l], k);
        const auto before = segment_sizes(segs);
        std::size_t expected = 0;
        for (std::size_t l = 1; l < before.size(); ++l) expected += before[l] >= k;
        EXPECT_EQ(p.count, expected);
    }
}

TEST(Skeletonize, PropertiesOnRandomBlobs) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const auto mask = oracle::random_blobs(rng, 40, 40, 5);
        const auto sk = skeletonize(mask);
        EXPECT_TRUE(subset(sk, mask));
        EXPECT_EQ(skeletonize(sk), sk);
        EXPECT_FALSE(has_solid_2x2(sk));
        EXPECT_EQ(oracle::component_count(sk), oracle::component_count(mask));
        const auto segs = label_segments(sk);
        for (long y = 0; y < 40; ++y) {
            for (long x = 0; x < 40; ++x) {
                const auto l = segs.labels(y, x);
                if (!l) continue;
                int same = 0;
                for (long dy = -1; dy <= 1; ++dy)
                    for (long dx = -1; dx <= 1; ++dx)
                        if ((dy || dx) && segs.labels.at_or(y + dy, x + dx, 0) == l) ++same;
                EXPECT_LE(same, 2);
            }
        }
    }
}

TEST(LabelComponents, MatchesUnionFindCount) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_mask(rng, 20, 20, 0.3);
        EXPECT_EQ(label_components(m).count, oracle::component_count(m));
    }
}
