#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "repstab/errors.hpp"
#include "repstab/repstore.hpp"
#include "repstab/synth.hpp"
#include "repstab/textio.hpp"
#include "testutil.hpp"

using namespace repstab;
using testutil::TempDir;

namespace {

RepresentationSet small_set() {
    RepresentationSet reps;
    reps.values = Matrix(3, 2, {1, 2, 3, 4, 5, 6});
    reps.meta.model_name = "toy";
    reps.meta.layer = 1;
    reps.meta.context_length = 3;
    reps.meta.block_id = 2;
    reps.meta.stimulus_ids = {"a", "b", "c"};
    return reps;
}

} // namespace

TEST_CASE("BXM1 round-trip is the identity on values and metadata") {
    TempDir dir;
    const RepresentationSet reps = small_set();
    const std::string path = dir.file("m.bxm1");
    save_representations(path, reps);
    const RepresentationSet back = load_representations(path);
    CHECK(back == reps);

    // Bytes themselves are stable: saving the loaded set reproduces the file.
    const std::string path2 = dir.file("m2.bxm1");
    save_representations(path2, back);
    CHECK(testutil::slurp(path) == testutil::slurp(path2));
}

TEST_CASE("BXM1 header promising more rows than the payload is a truncation error") {
    TempDir dir;
    const std::string path = dir.file("trunc.bxm1");
    std::ofstream out(path, std::ios::binary);
    out << "BXM1\n" << R"({"rows":3,"cols":2,"dtype":"f64","meta":{}})" << "\n";
    const double two_rows[4] = {1, 2, 3, 4};
    out.write(reinterpret_cast<const char*>(two_rows), sizeof(two_rows));
    out.close();
    CHECK_THROWS_AS(load_representations(path), FormatError);
}

TEST_CASE("BXM1 bad magic is a format error") {
    TempDir dir;
    const std::string path = dir.file("bad.bxm1");
    write_text_file(path, "BXM2\nnope");
    CHECK_THROWS_AS(load_bxm1(path), FormatError);
}

TEST_CASE("CSV variant parses to exactly the same values") {
    TempDir dir;
    Rng rng(99);
    RepresentationSet reps;
    reps.values = random_matrix(rng, 7, 5);
    reps.meta.stimulus_ids = make_default_ids(7);
    const std::string bin_path = dir.file("m.bxm1");
    const std::string csv_path = dir.file("m.csv");
    save_representations(bin_path, reps, FileFormat::bxm1);
    save_representations(csv_path, reps, FileFormat::csv);
    const RepresentationSet from_bin = load_representations(bin_path);
    const RepresentationSet from_csv = load_representations(csv_path);
    CHECK(from_bin.values == from_csv.values); // shortest round-trip decimals are exact
    CHECK(from_bin.meta == from_csv.meta);
}

TEST_CASE("CSV without meta line gets default ids") {
    TempDir dir;
    const std::string path = dir.file("plain.csv");
    write_text_file(path, "1,2\n3,4\n5,6\n");
    const RepresentationSet reps = load_representations(path);
    CHECK(reps.meta.stimulus_ids == std::vector<std::string>{"s0", "s1", "s2"});
    CHECK(reps.values(2, 1) == 6.0);
}

TEST_CASE("ragged CSV rows are a format error") {
    TempDir dir;
    const std::string path = dir.file("ragged.csv");
    write_text_file(path, "1,2\n3\n");
    CHECK_THROWS_AS(load_matrix_csv(path), FormatError);
}

TEST_CASE("f32 payloads widen on read") {
    TempDir dir;
    const std::string path = dir.file("f32.bxm1");
    std::ofstream out(path, std::ios::binary);
    out << "BXM1\n" << R"({"rows":1,"cols":2,"dtype":"f32","meta":{}})" << "\n";
    const float vals[2] = {1.5f, -2.25f};
    out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    out.close();
    const Bxm1 raw = load_bxm1(path);
    CHECK(raw.values(0, 0) == 1.5);
    CHECK(raw.values(0, 1) == -2.25);
}

TEST_CASE("loaders surface NaN as a validation error") {
    TempDir dir;
    const std::string path = dir.file("nan.csv");
    write_text_file(path, "1,nan\n2,3\n");
    CHECK_THROWS_AS(load_matrix_csv(path), ValidationError);
}

TEST_CASE("embedding table basics") {
    TempDir dir;
    const std::string path = dir.file("emb.txt");
    write_text_file(path, "a 1 0\nb 0 1\n");
    const EmbeddingTable table = load_embedding_table(path);
    CHECK(table.dim() == 2);
    CHECK(table.size() == 2);
    REQUIRE(table.find("a"));
    CHECK((*table.find("a"))[0] == 1.0);
    CHECK(table.find("zzz") == nullptr);
}

TEST_CASE("embedding table with mixed dimensions is a format error") {
    TempDir dir;
    const std::string path = dir.file("emb.txt");
    write_text_file(path, "a 1 0\nb 0 1 2\n");
    CHECK_THROWS_AS(load_embedding_table(path), FormatError);
}

TEST_CASE("embedding table rejects duplicate tokens") {
    TempDir dir;
    const std::string path = dir.file("emb.txt");
    write_text_file(path, "a 1 0\na 0 1\n");
    CHECK_THROWS_AS(load_embedding_table(path), ValidationError);
}

TEST_CASE("random embedding table agrees with a naive line parser") {
    TempDir dir;
    Rng rng(7);
    std::string text;
    std::vector<std::string> tokens;
    for (int i = 0; i < 50; ++i) {
        tokens.push_back("tok" + std::to_string(i));
        text += tokens.back();
        for (int j = 0; j < 4; ++j) text += " " + format_double(rng.gaussian());
        text += "\n";
    }
    const std::string path = dir.file("emb.txt");
    write_text_file(path, text);
    const EmbeddingTable table = load_embedding_table(path);

    // Independent parser: istringstream per line.
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string token;
        fields >> token;
        std::vector<double> vec;
        double v;
        while (fields >> v) vec.push_back(v);
        REQUIRE(table.find(token));
        CHECK(*table.find(token) == vec);
    }
}

TEST_CASE("corpus loader enforces ordering invariants") {
    TempDir dir;
    const std::string good = dir.file("good.tsv");
    write_text_file(good, "x\t0\t1\ny\t0\t1\na\t1\t1\nb\t1\t2\n");
    const StimulusCorpus corpus = load_corpus(good);
    CHECK(corpus.n_words() == 4);
    CHECK(corpus.block_ids() == std::vector<int>{1, 2});
    CHECK(corpus.block_range(1) == std::pair<std::size_t, std::size_t>{0, 3});

    const std::string decreasing = dir.file("bad1.tsv");
    write_text_file(decreasing, "x\t1\t1\ny\t0\t1\n");
    CHECK_THROWS_AS(load_corpus(decreasing), ValidationError);

    const std::string split_block = dir.file("bad2.tsv");
    write_text_file(split_block, "x\t0\t1\ny\t0\t2\nz\t1\t1\n");
    CHECK_THROWS_AS(load_corpus(split_block), ValidationError);

    const std::string save_path = dir.file("saved.tsv");
    save_corpus(save_path, corpus);
    CHECK(load_corpus(save_path).words == corpus.words);
}

TEST_CASE("lexicon entries are normalized at load") {
    TempDir dir;
    const std::string path = dir.file("lex.txt");
    write_text_file(path, "Harry\nRON.\n");
    const auto lexicon = load_lexicon(path);
    CHECK(lexicon.count("harry") == 1);
    CHECK(lexicon.count("ron") == 1);
}

TEST_CASE("token normalization lowercases and strips punctuation") {
    CHECK(normalize_token("Harry.") == "harry");
    CHECK(normalize_token("\"Dudley,\"") == "dudley");
    CHECK(normalize_token("don't") == "don't"); // inner punctuation stays
    CHECK(normalize_token("...") == "");
}

TEST_CASE("bag of words: two-token sentence mean") {
    StimulusCorpus corpus;
    corpus.words = {{"a", 0, 0}, {"b", 0, 0}};
    EmbeddingTable table;
    table.insert("a", {1, 0});
    table.insert("b", {0, 1});
    const RepresentationSet reps = compose_bag_of_words(corpus, table);
    CHECK(reps.n_stimuli() == 1);
    CHECK(reps.values(0, 0) == 0.5);
    CHECK(reps.values(0, 1) == 0.5);
}

TEST_CASE("bag of words: repeated token keeps the mean idempotent") {
    StimulusCorpus corpus;
    corpus.words = {{"a", 0, 0}, {"a", 0, 0}};
    EmbeddingTable table;
    table.insert("a", {1, 0});
    const RepresentationSet reps = compose_bag_of_words(corpus, table);
    CHECK(reps.values(0, 0) == 1.0);
    CHECK(reps.values(0, 1) == 0.0);
}

TEST_CASE("bag of words matches a direct summation oracle on a random corpus") {
    Rng rng(31);
    EmbeddingTable table;
    const int vocab = 12, dim = 3;
    std::vector<std::vector<double>> vectors(vocab);
    for (int t = 0; t < vocab; ++t) {
        vectors[t] = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
        table.insert("w" + std::to_string(t), vectors[t]);
    }
    StimulusCorpus corpus;
    std::vector<std::vector<int>> sentences(20);
    for (int s = 0; s < 20; ++s) {
        const int len = 1 + static_cast<int>(rng.integer(6));
        for (int i = 0; i < len; ++i) {
            const int tok = static_cast<int>(rng.integer(vocab));
            sentences[s].push_back(tok);
            corpus.words.push_back({"w" + std::to_string(tok), s, 0});
        }
    }
    const RepresentationSet reps = compose_bag_of_words(corpus, table);
    REQUIRE(reps.n_stimuli() == 20);
    for (int s = 0; s < 20; ++s) {
        for (int j = 0; j < dim; ++j) {
            double acc = 0.0;
            for (int tok : sentences[s]) acc += vectors[tok][j];
            acc /= static_cast<double>(sentences[s].size());
            CHECK(reps.values(s, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("bag of words is exactly permutation invariant within a unit") {
    EmbeddingTable table;
    table.insert("x", {0.1, 0.7});
    table.insert("y", {-0.3, 0.2});
    table.insert("z", {0.9, -0.5});
    StimulusCorpus fwd, rev;
    fwd.words = {{"x", 0, 0}, {"y", 0, 0}, {"z", 0, 0}};
    rev.words = {{"z", 0, 0}, {"x", 0, 0}, {"y", 0, 0}};
    const RepresentationSet a = compose_bag_of_words(fwd, table);
    const RepresentationSet b = compose_bag_of_words(rev, table);
    CHECK(a.values == b.values);
}

TEST_CASE("bag of words scales linearly with the table") {
    Rng rng(5);
    EmbeddingTable table, scaled;
    for (int t = 0; t < 6; ++t) {
        std::vector<double> v{rng.gaussian(), rng.gaussian()};
        std::vector<double> sv{3.0 * v[0], 3.0 * v[1]};
        table.insert("w" + std::to_string(t), v);
        scaled.insert("w" + std::to_string(t), sv);
    }
    StimulusCorpus corpus;
    for (int i = 0; i < 9; ++i)
        corpus.words.push_back({"w" + std::to_string(i % 6), i / 3, 0});
    const RepresentationSet a = compose_bag_of_words(corpus, table);
    const RepresentationSet b = compose_bag_of_words(corpus, scaled);
    for (std::size_t i = 0; i < a.values.rows(); ++i)
        for (std::size_t j = 0; j < a.values.cols(); ++j)
            CHECK(b.values(i, j) == doctest::Approx(3.0 * a.values(i, j)).epsilon(1e-12));
}

TEST_CASE("all-OOV unit yields a zero vector and a warning count") {
    StimulusCorpus corpus;
    corpus.words = {{"known", 0, 0}, {"unknown1", 1, 0}, {"unknown2", 1, 0}};
    EmbeddingTable table;
    table.insert("known", {2, 4});
    ComposeStats stats;
    const RepresentationSet reps = compose_bag_of_words(corpus, table, {}, &stats);
    CHECK(stats.all_oov_units == 1);
    CHECK(stats.oov_tokens == 2);
    CHECK(reps.values(1, 0) == 0.0);
    CHECK(reps.values(1, 1) == 0.0);
    CHECK(reps.values(0, 0) == 2.0);
}

TEST_CASE("bag of words normalization maps Harry. to harry; can be disabled") {
    StimulusCorpus corpus;
    corpus.words = {{"Harry.", 0, 0}};
    EmbeddingTable table;
    table.insert("harry", {1, 1});
    const RepresentationSet norm = compose_bag_of_words(corpus, table);
    CHECK(norm.values(0, 0) == 1.0);
    ComposeOptions opts;
    opts.normalize_tokens = false;
    ComposeStats stats;
    compose_bag_of_words(corpus, table, opts, &stats);
    CHECK(stats.all_oov_units == 1);
}

TEST_CASE("bag of words over scan windows groups per block") {
    StimulusCorpus corpus;
    for (int i = 0; i < 5; ++i) corpus.words.push_back({"a", 0, 0});
    for (int i = 0; i < 2; ++i) corpus.words.push_back({"a", 0, 1});
    EmbeddingTable table;
    table.insert("a", {1.0});
    ComposeOptions opts;
    opts.unit = UnitKind::scan_window;
    opts.words_per_scan = 4;
    const RepresentationSet reps = compose_bag_of_words(corpus, table, opts);
    // Block 0: windows of 4 and 1 words; block 1: one window of 2 words.
    CHECK(reps.n_stimuli() == 3);
    CHECK(reps.meta.stimulus_ids == std::vector<std::string>{"b0_w0", "b0_w1", "b1_w0"});
}

TEST_CASE("scan series round-trip preserves values bit-exactly") {
    TempDir dir;
    Rng rng(17);
    ScanSeries series;
    series.values = random_matrix(rng, 5, 4);
    series.region_of_voxel = {"r1", "r1", "r2", "r2"};
    series.subject_id = "subA";
    series.block_id = 1;
    series.scan_period_s = 2.0;
    const std::string path = dir.file("scan.bxm1");
    save_scan_series(path, series);
    const ScanSeries back = load_scan_series(path);
    CHECK(back == series);
    CHECK(back.region_of_voxel.size() == 4);
}

TEST_CASE("scan series with wrong region array length is rejected") {
    TempDir dir;
    const std::string path = dir.file("scan.bxm1");
    nlohmann::json meta = {{"kind", "scans"},
                           {"subject_id", "s"},
                           {"block_id", 0},
                           {"scan_period_s", 2.0},
                           {"regions", {"r1", "r2"}}}; // V is actually 3
    save_bxm1(path, Matrix(4, 3, 1.0), meta);
    CHECK_THROWS_AS(load_scan_series(path), ValidationError);
}

TEST_CASE("representation file with scans kind is rejected by the reps loader") {
    TempDir dir;
    Rng rng(3);
    ScanSeries series;
    series.values = random_matrix(rng, 4, 2);
    series.region_of_voxel = {"r", "r"};
    series.subject_id = "s";
    const std::string path = dir.file("scan.bxm1");
    save_scan_series(path, series);
    CHECK_THROWS_AS(load_representations(path), FormatError);
}
