#include <doctest.h>

#include <cmath>
#include <set>

#include "repstab/brainprep.hpp"
#include "repstab/errors.hpp"
#include "repstab/reference.hpp"
#include "repstab/simcore.hpp"
#include "repstab/synth.hpp"
#include "testutil.hpp"

using namespace repstab;

namespace {

ScanSeries make_series(Matrix values, std::vector<std::string> regions = {},
                       double period = 2.0) {
    ScanSeries s;
    if (regions.empty()) regions.assign(values.cols(), "r0");
    s.values = std::move(values);
    s.region_of_voxel = std::move(regions);
    s.subject_id = "test";
    s.scan_period_s = period;
    return s;
}

ScanSeries random_series(std::uint64_t seed, std::size_t t, std::size_t v) {
    Rng rng(seed);
    return make_series(random_matrix(rng, t, v));
}

std::vector<double> column(const ScanSeries& s, std::size_t j) {
    std::vector<double> col(s.n_scans());
    for (std::size_t t = 0; t < s.n_scans(); ++t) col[t] = s.values(t, j);
    return col;
}

} // namespace

TEST_CASE("center: [1,3] becomes [-1,1] and centered input is unchanged") {
    const ScanSeries out = center(make_series(Matrix(2, 1, {1, 3})));
    CHECK(out.values(0, 0) == -1.0);
    CHECK(out.values(1, 0) == 1.0);
    const ScanSeries again = center(out);
    CHECK(again.values == out.values);
}

TEST_CASE("center: random series has column means below 1e-12") {
    const ScanSeries out = center(random_series(1, 20, 5));
    for (std::size_t j = 0; j < 5; ++j) {
        double m = 0.0;
        for (double v : column(out, j)) m += v;
        CHECK(std::fabs(m / 20.0) <= 1e-12);
    }
}

TEST_CASE("detrend: exact line is removed to 1e-9") {
    Matrix m(10, 2);
    for (std::size_t t = 0; t < 10; ++t) {
        m(t, 0) = 3.5 * static_cast<double>(t) - 2.0;
        m(t, 1) = -0.25 * static_cast<double>(t) + 7.0;
    }
    const ScanSeries out = detrend_linear(make_series(std::move(m)));
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(std::fabs(out.values(t, 0)) <= 1e-9);
        CHECK(std::fabs(out.values(t, 1)) <= 1e-9);
    }
}

TEST_CASE("detrend: zero column stays zero") {
    const ScanSeries out = detrend_linear(make_series(Matrix(6, 1, 0.0)));
    for (std::size_t t = 0; t < 6; ++t) CHECK(out.values(t, 0) == 0.0);
}

TEST_CASE("detrend: residual is orthogonal to constant and linear regressors") {
    const ScanSeries out = detrend_linear(random_series(2, 30, 4));
    for (std::size_t j = 0; j < 4; ++j) {
        double dot_ones = 0.0, dot_t = 0.0;
        for (std::size_t t = 0; t < 30; ++t) {
            dot_ones += out.values(t, j);
            dot_t += out.values(t, j) * static_cast<double>(t + 1);
        }
        CHECK(std::fabs(dot_ones) <= 1e-8);
        CHECK(std::fabs(dot_t) <= 1e-8);
    }
}

TEST_CASE("highpass: constant columns map to zero") {
    const ScanSeries out = highpass_dct(make_series(Matrix(16, 1, 5.0)), 0.005);
    for (std::size_t t = 0; t < 16; ++t) CHECK(std::fabs(out.values(t, 0)) <= 1e-12);
}

TEST_CASE("highpass: drift frequencies are attenuated, analysis band is kept") {
    const std::size_t t_len = 300;
    const double period = 2.0;
    Matrix m(t_len, 2);
    for (std::size_t t = 0; t < t_len; ++t) {
        const double secs = static_cast<double>(t) * period;
        m(t, 0) = std::sin(2.0 * M_PI * 0.001 * secs + 0.3);
        m(t, 1) = std::sin(2.0 * M_PI * 0.05 * secs + 0.3);
    }
    const ScanSeries out = highpass_dct(make_series(std::move(m)), 0.005);

    Matrix orig(t_len, 2);
    for (std::size_t t = 0; t < t_len; ++t) {
        const double secs = static_cast<double>(t) * period;
        orig(t, 0) = std::sin(2.0 * M_PI * 0.001 * secs + 0.3);
        orig(t, 1) = std::sin(2.0 * M_PI * 0.05 * secs + 0.3);
    }
    std::vector<double> slow_in(t_len), slow_out(t_len), fast_in(t_len), fast_out(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
        slow_in[t] = orig(t, 0);
        fast_in[t] = orig(t, 1);
        slow_out[t] = out.values(t, 0);
        fast_out[t] = out.values(t, 1);
    }
    CHECK(ref::dft_power(slow_out) <= 0.01 * ref::dft_power(slow_in));
    CHECK(ref::dft_power(fast_out) >= 0.90 * ref::dft_power(fast_in));
}

TEST_CASE("highpass is idempotent within 1e-9") {
    const ScanSeries once = highpass_dct(random_series(3, 64, 3), 0.01);
    const ScanSeries twice = highpass_dct(once, 0.01);
    CHECK(testutil::max_abs_diff(once.values, twice.values) <= 1e-9);
}

TEST_CASE("highpass: cutoff at or above Nyquist is a config error, zero disables") {
    const ScanSeries s = random_series(4, 16, 2);
    CHECK_THROWS_AS(highpass_dct(s, 0.25), ConfigError); // Nyquist for 2 s period
    const ScanSeries out = highpass_dct(s, 0.0);
    CHECK(out.values == s.values);
}

TEST_CASE("standardize: [0,2] becomes [-1,1] and is idempotent") {
    const ScanSeries out = standardize(make_series(Matrix(2, 1, {0, 2})));
    CHECK(out.values(0, 0) == -1.0);
    CHECK(out.values(1, 0) == 1.0);
    const ScanSeries again = standardize(out);
    CHECK(testutil::max_abs_diff(again.values, out.values) <= 1e-10);
}

TEST_CASE("standardize: random series hits mean 0 and population std 1") {
    const ScanSeries out = standardize(random_series(5, 50, 7));
    for (std::size_t j = 0; j < 7; ++j) {
        const std::vector<double> col = column(out, j);
        double m = 0.0;
        for (double v : col) m += v;
        m /= 50.0;
        double ss = 0.0;
        for (double v : col) ss += (v - m) * (v - m);
        CHECK(std::fabs(m) <= 1e-10);
        CHECK(std::fabs(std::sqrt(ss / 50.0) - 1.0) <= 1e-10);
    }
}

TEST_CASE("standardize: constant column error names the voxel indices") {
    Matrix m(4, 3, 1.0);
    for (std::size_t t = 0; t < 4; ++t) m(t, 1) = static_cast<double>(t);
    CHECK_THROWS_WITH_AS(standardize(make_series(std::move(m))),
                         doctest::Contains("[0, 2]"), ValidationError);
}

TEST_CASE("drop_constant_voxels: constant column of fives is removed") {
    Matrix m(3, 3);
    for (std::size_t t = 0; t < 3; ++t) {
        m(t, 0) = static_cast<double>(t);
        m(t, 1) = 5.0;
        m(t, 2) = static_cast<double>(t) * 2.0;
    }
    const auto [out, mask] = drop_constant_voxels(make_series(std::move(m), {"a", "b", "c"}));
    CHECK(out.n_voxels() == 2);
    CHECK(out.region_of_voxel == std::vector<std::string>{"a", "c"});
    CHECK(mask.keep == std::vector<bool>{true, false, true});
}

TEST_CASE("drop_constant_voxels: no constants is the identity with an all-true mask") {
    const ScanSeries s = random_series(6, 10, 4);
    const auto [out, mask] = drop_constant_voxels(s);
    CHECK(out.values == s.values);
    CHECK(mask.count() == 4);
}

TEST_CASE("drop_constant_voxels: randomized placement matches a range-scan oracle") {
    Rng rng(7);
    Matrix m = random_matrix(rng, 12, 100);
    std::set<std::size_t> constants;
    while (constants.size() < 10) constants.insert(rng.integer(100));
    for (std::size_t j : constants)
        for (std::size_t t = 0; t < 12; ++t) m(t, j) = 3.25;
    const ScanSeries s = make_series(std::move(m));
    const auto [out, mask] = drop_constant_voxels(s);
    for (std::size_t j = 0; j < 100; ++j) {
        double lo = s.values(0, j), hi = s.values(0, j);
        for (std::size_t t = 1; t < 12; ++t) {
            lo = std::min(lo, s.values(t, j));
            hi = std::max(hi, s.values(t, j));
        }
        CHECK(mask.keep[j] == (hi - lo != 0.0));
        CHECK(mask.keep[j] == (constants.count(j) == 0));
    }
    CHECK(out.n_voxels() == 90);
}

TEST_CASE("drop_constant_voxels: all-constant series is an error") {
    CHECK_THROWS_AS(drop_constant_voxels(make_series(Matrix(3, 2, 1.0))), ValidationError);
}

TEST_CASE("canonical pipeline: detrended output is invariant under a further center") {
    const ScanSeries cleaned = detrend_linear(center(random_series(8, 25, 3)));
    const ScanSeries recentred = center(cleaned);
    CHECK(testutil::max_abs_diff(cleaned.values, recentred.values) <= 1e-12);
}

TEST_CASE("preprocess applies the configured stages") {
    const ScanSeries s = random_series(9, 40, 4);
    PreprocessConfig config;
    const ScanSeries out = preprocess(s, config);
    for (std::size_t j = 0; j < 4; ++j) {
        const std::vector<double> col = column(out, j);
        double m = 0.0;
        for (double v : col) m += v;
        CHECK(std::fabs(m / 40.0) <= 1e-10);
    }
    PreprocessConfig bad;
    bad.highpass_cutoff_hz = 10.0;
    CHECK_THROWS_AS(preprocess(s, bad), ConfigError);
}

TEST_CASE("rank_regions: identical subjects score 1 for every region") {
    ScanSeries a = random_series(10, 12, 6);
    a.region_of_voxel = {"r0", "r0", "r1", "r1", "r2", "r2"};
    ScanSeries b = a;
    b.subject_id = "other";
    const RegionRanking ranking = rank_regions_cross_subject({a, b});
    REQUIRE(ranking.entries.size() == 3);
    for (const auto& e : ranking.entries) CHECK(e.mean_cross_subject_rsa == 1.0);
}

TEST_CASE("rank_regions: planted signal regions rank on top") {
    const RepresentationSet reps = testutil::random_reps(11, 40, 8);
    SynthBrainOptions opts;
    opts.n_regions = 10;
    opts.voxels_per_region = 6;
    opts.n_subjects = 3;
    opts.sigma = 0.1;
    opts.signal_regions = {2, 7};
    opts.seed = 12;
    const std::vector<ScanSeries> subjects = synth_brain(reps, opts);
    const RegionRanking ranking = rank_regions_cross_subject(subjects);
    REQUIRE(ranking.entries.size() == 10);
    const std::set<std::string> top = {ranking.entries[0].region, ranking.entries[1].region};
    CHECK(top == std::set<std::string>{"region2", "region7"});
}

TEST_CASE("rank_regions matches the exhaustive per-pair rsa oracle") {
    std::vector<ScanSeries> subjects;
    const std::vector<std::string> regions = {"a", "a", "b", "b", "b", "c"};
    for (std::uint64_t s = 0; s < 3; ++s) {
        ScanSeries series = random_series(20 + s, 10, 6);
        series.region_of_voxel = regions;
        series.subject_id = "s" + std::to_string(s);
        subjects.push_back(std::move(series));
    }
    const RegionRanking ranking = rank_regions_cross_subject(subjects);

    for (const char* region : {"a", "b", "c"}) {
        std::vector<Matrix> slices;
        for (const auto& sub : subjects) slices.push_back(slice_region(sub, region).values);
        double acc = 0.0;
        int pairs = 0;
        for (std::size_t i = 0; i < slices.size(); ++i)
            for (std::size_t j = i + 1; j < slices.size(); ++j) {
                acc += ref::rsa(slices[i], slices[j]);
                ++pairs;
            }
        const double expected = acc / pairs;
        const auto it = std::find_if(ranking.entries.begin(), ranking.entries.end(),
                                     [&](const RegionScore& e) { return e.region == region; });
        REQUIRE(it != ranking.entries.end());
        CHECK(it->mean_cross_subject_rsa == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("rank_regions is invariant under subject order") {
    std::vector<ScanSeries> subjects;
    for (std::uint64_t s = 0; s < 3; ++s) {
        ScanSeries series = random_series(30 + s, 8, 4);
        series.region_of_voxel = {"a", "a", "b", "b"};
        subjects.push_back(std::move(series));
    }
    const RegionRanking fwd = rank_regions_cross_subject(subjects);
    std::swap(subjects[0], subjects[2]);
    const RegionRanking rev = rank_regions_cross_subject(subjects);
    REQUIRE(fwd.entries.size() == rev.entries.size());
    for (std::size_t i = 0; i < fwd.entries.size(); ++i) {
        CHECK(fwd.entries[i].region == rev.entries[i].region);
        CHECK(fwd.entries[i].mean_cross_subject_rsa ==
              doctest::Approx(rev.entries[i].mean_cross_subject_rsa).epsilon(1e-12));
    }
}

TEST_CASE("rank_regions skips regions missing from a subject, errors on disjoint atlases") {
    ScanSeries a = random_series(40, 8, 2);
    a.region_of_voxel = {"x", "y"};
    ScanSeries b = random_series(41, 8, 2);
    b.region_of_voxel = {"x", "z"};
    const RegionRanking ranking = rank_regions_cross_subject({a, b});
    REQUIRE(ranking.entries.size() == 1);
    CHECK(ranking.entries[0].region == "x");
    CHECK(ranking.skipped == std::vector<std::string>{"y", "z"});

    ScanSeries c = random_series(42, 8, 2);
    c.region_of_voxel = {"p", "q"};
    CHECK_THROWS_AS(rank_regions_cross_subject({a, c}), AlignmentError);

    ScanSeries d = random_series(43, 9, 2); // different scan count
    d.region_of_voxel = {"x", "y"};
    CHECK_THROWS_AS(rank_regions_cross_subject({a, d}), AlignmentError);
}

TEST_CASE("select_top_k masks") {
    RegionRanking ranking;
    ranking.entries = {{"b", 0.9}, {"a", 0.5}, {"c", 0.1}};
    const std::vector<std::string> atlas_of_voxel = {"a", "b", "c", "b", "a"};

    SUBCASE("k equal to all regions keeps everything") {
        const VoxelMask mask = select_top_k(ranking, atlas_of_voxel, 3);
        CHECK(mask.count() == 5);
    }
    SUBCASE("k = 1 keeps the top region only") {
        const VoxelMask mask = select_top_k(ranking, atlas_of_voxel, 1);
        CHECK(mask.keep == std::vector<bool>{false, true, false, true, false});
    }
    SUBCASE("k out of range is a config error") {
        CHECK_THROWS_AS(select_top_k(ranking, atlas_of_voxel, 0), ConfigError);
        CHECK_THROWS_AS(select_top_k(ranking, atlas_of_voxel, 4), ConfigError);
    }
}

TEST_CASE("select_top_k equals the union-of-regions set oracle") {
    Rng rng(50);
    RegionRanking ranking;
    for (int r = 0; r < 6; ++r)
        ranking.entries.push_back({"reg" + std::to_string(r), rng.uniform()});
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const RegionScore& a, const RegionScore& b) {
                         return a.mean_cross_subject_rsa > b.mean_cross_subject_rsa;
                     });
    std::vector<std::string> atlas_of_voxel;
    for (int j = 0; j < 40; ++j)
        atlas_of_voxel.push_back("reg" + std::to_string(rng.integer(6)));

    const VoxelMask mask = select_top_k(ranking, atlas_of_voxel, 3);
    std::set<std::string> top;
    for (int i = 0; i < 3; ++i) top.insert(ranking.entries[static_cast<std::size_t>(i)].region);
    for (std::size_t j = 0; j < atlas_of_voxel.size(); ++j)
        CHECK(mask.keep[j] == (top.count(atlas_of_voxel[j]) == 1));
}

TEST_CASE("slice_region: slices partition the columns") {
    ScanSeries s = random_series(60, 6, 5);
    s.region_of_voxel = {"l", "r", "l", "r", "l"};
    const ScanSeries left = slice_region(s, "l");
    const ScanSeries right = slice_region(s, "r");
    CHECK(left.n_voxels() == 3);
    CHECK(right.n_voxels() == 2);
    for (std::size_t t = 0; t < 6; ++t) {
        CHECK(left.values(t, 0) == s.values(t, 0));
        CHECK(left.values(t, 1) == s.values(t, 2));
        CHECK(left.values(t, 2) == s.values(t, 4));
        CHECK(right.values(t, 0) == s.values(t, 1));
        CHECK(right.values(t, 1) == s.values(t, 3));
    }
    CHECK_THROWS_AS(slice_region(s, "nope"), ValidationError);
}

TEST_CASE("slice_region: single-voxel region gives a T x 1 series") {
    ScanSeries s = random_series(61, 4, 3);
    s.region_of_voxel = {"a", "b", "a"};
    const ScanSeries b = slice_region(s, "b");
    CHECK(b.n_voxels() == 1);
    CHECK(b.n_scans() == 4);
}

TEST_CASE("mask CSV round trip") {
    VoxelMask mask;
    mask.keep = {true, false, true};
    const std::string csv = mask_to_csv(mask);
    const VoxelMask back = mask_from_csv(csv);
    CHECK(back.keep == mask.keep);
}
