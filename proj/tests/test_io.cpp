#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "llae/io.hpp"
#include "test_support.hpp"

using namespace llae;
using namespace llae::testing;
namespace fs = std::filesystem;

namespace {

TripleList parse(const std::string& text, ValueMode mode = ValueMode::count) {
    std::istringstream in(text);
    return read_sparse_triples(in, mode);
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("llae_io_" + std::to_string(::getpid()) + "_" + name);
}

TrainedModel small_trained_model() {
    std::mt19937_64 rng(97);
    ModelConfig cfg;
    cfg.lambda = 0.7;
    cfg.beta = 3.0;
    cfg.rank_r = 1;
    cfg.seed = 12345;
    cfg.normalization = ColumnNormalization::l2;
    return train(random_matrix(4, 30, rng), random_matrix(3, 30, rng), cfg);
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Triples, EmptyAndCommentOnlyInput) {
    EXPECT_TRUE(parse("").empty());
    const auto t = parse("# header\n\n#another\n");
    EXPECT_TRUE(t.empty());
    EXPECT_TRUE(t.row_ids.empty());
}

TEST(Triples, BinaryModeClampsToOne) {
    const auto t = parse("u1\ti1\t3\n", ValueMode::binary);
    ASSERT_EQ(t.triples.size(), 1u);
    EXPECT_EQ(t.row_ids[0], "u1");
    EXPECT_EQ(t.col_ids[0], "i1");
    EXPECT_EQ(t.triples[0], (Triple{0, 0, 1.0}));
}

TEST(Triples, InternsInFirstAppearanceOrder) {
    const auto t = parse("b\tz\t1\na\ty\t2\nb\tx\t0.5\r\n");
    EXPECT_EQ(t.row_ids, (std::vector<std::string>{"b", "a"}));
    EXPECT_EQ(t.col_ids, (std::vector<std::string>{"z", "y", "x"}));
    EXPECT_EQ(t.triples[2], (Triple{0, 2, 0.5}));
}

TEST(Triples, DuplicatesSumOrCollapse) {
    const std::string text = "u\ti\t2\nu\tj\t1\nu\ti\t3\n";
    const auto counts = parse(text, ValueMode::count);
    ASSERT_EQ(counts.triples.size(), 2u);
    EXPECT_EQ(counts.triples[0].value, 5.0);
    EXPECT_EQ(counts.collapsed, 1u);
    const auto binary = parse(text + "u\tk\t0\n", ValueMode::binary);
    EXPECT_EQ(binary.triples.size(), 2u);
    EXPECT_EQ(binary.triples[0].value, 1.0);
    EXPECT_EQ(binary.collapsed, 1u);
    EXPECT_EQ(binary.zero_dropped, 1u);
}

TEST(Triples, MalformedLinesReportLineNumber) {
    const std::vector<std::pair<std::string, std::size_t>> cases{
        {"u\ti\t1\nu i 1\n", 2},      {"# c\nu\ti\tx\n", 2},   {"u\ti\t1\tz\n", 1},
        {"u\ti\t1\n\nu\ti\t-1\n", 3}, {"u\t\t1\n", 1},         {"u\ti\tnan\n", 1},
    };
    for (const auto& [text, line] : cases) {
        try {
            parse(text);
            ADD_FAILURE() << "no error for: " << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << text;
        }
    }
    EXPECT_THROW(load_sparse_triples("/nonexistent/triples.tsv", ValueMode::binary), DataError);
    EXPECT_EQ(parse("u\ta\t-1.5\n", ValueMode::real).triples[0].value, -1.5);
}

TEST(Triples, RoundTripThousandRandomTriples) {
    std::mt19937_64 rng(101);
    std::ostringstream text;
    std::uniform_int_distribution<int> id(0, 200);
    std::uniform_real_distribution<double> val(0.001, 50.0);
    std::set<std::pair<int, int>> seen;
    while (seen.size() < 1000) {
        const int r = id(rng), c = id(rng);
        if (!seen.insert({r, c}).second) continue;
        text << "user" << r << "\titem" << c << "\t" << detail::format_double(val(rng)) << "\n";
    }
    const auto first = parse(text.str());
    ASSERT_EQ(first.triples.size(), 1000u);
    const fs::path p = temp_file("roundtrip.tsv");
    save_sparse_triples(p.string(), first);
    const auto second = load_sparse_triples(p.string(), ValueMode::count);
    fs::remove(p);
    EXPECT_EQ(second.row_ids, first.row_ids);
    EXPECT_EQ(second.col_ids, first.col_ids);
    EXPECT_EQ(second.triples, first.triples);
}

TEST(Assemble, FullySpecifiedSmallCase) {
    const auto beh = parse("u1\ti1\t1\nu1\ti2\t0\nu1\ti3\t1\nu2\ti1\t0\nu2\ti2\t1\nu2\ti3\t1\n");
    const auto att = parse("u1\ta1\t0.5\nu1\ta2\t2\nu2\ta1\t1.5\nu2\ta2\t-0\n");
    const auto a = assemble(beh, att);
    EXPECT_EQ(a.dataset.x, (Matrix{{1, 0}, {0, 1}, {1, 1}}));
    EXPECT_EQ(a.dataset.s, (Matrix{{0.5, 1.5}, {2, 0}}));
    EXPECT_EQ(a.users_without_behavior, 0u);
    EXPECT_EQ(a.users_without_attributes, 0u);
    EXPECT_NO_THROW(a.dataset.validate());
}

TEST(Assemble, AttributeOnlyUserIsCold) {
    const auto beh = parse("u1\ti1\t1\n");
    const auto att = parse("u1\ta\t1\nu2\ta\t2\n");
    const auto a = assemble(beh, att);
    ASSERT_EQ(a.dataset.users(), 2u);
    EXPECT_EQ(a.dataset.user_ids[1], "u2");
    EXPECT_EQ(a.dataset.x(0, 1), 0.0);
    EXPECT_EQ(a.dataset.s(0, 1), 2.0);
    EXPECT_EQ(a.users_without_behavior, 1u);
    EXPECT_THROW(assemble(parse(""), parse("")), DataError);
}

TEST(Assemble, MatchesLoopReconstructionAndNoDataLoss) {
    std::mt19937_64 rng(103);
    std::ostringstream beh, att;
    std::uniform_int_distribution<int> user(0, 59), item(0, 29), attr(0, 9);
    for (int i = 0; i < 500; ++i) beh << "u" << user(rng) << "\ti" << item(rng) << "\t1\n";
    for (int i = 0; i < 300; ++i) att << "u" << user(rng) << "\ta" << attr(rng) << "\t" << (i % 7) * 0.25 << "\n";
    const auto b = parse(beh.str(), ValueMode::binary);
    const auto s = parse(att.str(), ValueMode::count);
    const auto a = assemble(b, s);

    Matrix x(a.dataset.items(), a.dataset.users()), sm(a.dataset.attributes(), a.dataset.users());
    auto user_index = [&](const std::string& id) {
        return static_cast<std::size_t>(std::find(a.dataset.user_ids.begin(), a.dataset.user_ids.end(), id) -
                                        a.dataset.user_ids.begin());
    };
    for (const auto& t : b.triples) x(t.col, user_index(b.row_ids[t.row])) = t.value;
    for (const auto& t : s.triples) sm(t.col, user_index(s.row_ids[t.row])) += t.value;
    EXPECT_EQ(a.dataset.x, x);
    EXPECT_EQ(a.dataset.s, sm);
    const auto nonzero = std::count_if(x.data().begin(), x.data().end(), [](double v) { return v != 0.0; });
    EXPECT_EQ(static_cast<std::size_t>(nonzero), b.triples.size());
}

TEST(Assemble, LineOrderOnlyRelabels) {
    const std::vector<std::string> lines{"u1\ti1\t1", "u2\ti2\t1", "u3\ti1\t1", "u1\ti3\t1", "u2\ti3\t1"};
    auto join = [](const std::vector<std::string>& ls) {
        std::string s;
        for (const auto& l : ls) s += l + "\n";
        return s;
    };
    auto reversed = lines;
    std::reverse(reversed.begin(), reversed.end());
    const auto att = parse("u1\ta\t1\n");
    const auto a = assemble(parse(join(lines), ValueMode::binary), att).dataset;
    const auto b = assemble(parse(join(reversed), ValueMode::binary), att).dataset;
    for (std::size_t u = 0; u < a.users(); ++u) {
        const auto bu = static_cast<std::size_t>(
            std::find(b.user_ids.begin(), b.user_ids.end(), a.user_ids[u]) - b.user_ids.begin());
        for (std::size_t i = 0; i < a.items(); ++i) {
            const auto bi = static_cast<std::size_t>(
                std::find(b.item_ids.begin(), b.item_ids.end(), a.item_ids[i]) - b.item_ids.begin());
            EXPECT_EQ(a.x(i, u), b.x(bi, bu));
        }
    }
}

TEST(DenseCsv, RoundTripAndErrors) {
    std::mt19937_64 rng(107);
    const Matrix m = random_matrix(5, 7, rng);
    std::stringstream buf;
    write_dense_csv(buf, m);
    EXPECT_EQ(read_dense_csv(buf), m);

    std::istringstream ragged("1,2,3\n4,5\n");
    try {
        read_dense_csv(ragged);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream bad("1,x\n");
    EXPECT_THROW(read_dense_csv(bad), ParseError);
}

TEST(ModelFile, RoundTripIsBitExact) {
    const TrainedModel m = small_trained_model();
    ASSERT_FALSE(m.objective_trace.empty());
    const fs::path p = temp_file("model.llae");
    save_model(m, p.string());
    const TrainedModel back = load_model(p.string());
    fs::remove(p);
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.w.shape(), "3x4");
    EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST(ModelFile, EmptyTraceRoundTrips) {
    std::mt19937_64 rng(109);
    ModelConfig cfg;
    cfg.max_iters = 0;
    const TrainedModel m = train(random_matrix(4, 10, rng), random_matrix(3, 10, rng), cfg);
    EXPECT_TRUE(m.objective_trace.empty());
    EXPECT_EQ(deserialize_model(serialize_model(m)), m);
}

TEST(ModelFile, DistinctErrorsForEachCorruption) {
    const std::string good = serialize_model(small_trained_model());
    const fs::path p = temp_file("corrupt.llae");

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    write_bytes(p, bad_magic);
    EXPECT_THROW(load_model(p.string()), MagicError);

    std::string bad_version = good;
    bad_version[4] = 9;
    EXPECT_THROW(deserialize_model(bad_version), VersionError);

    EXPECT_THROW(deserialize_model(good.substr(0, good.size() - 3)), TruncatedError);
    EXPECT_THROW(deserialize_model(good.substr(0, 30)), TruncatedError);
    EXPECT_THROW(deserialize_model(good.substr(0, 2)), TruncatedError);

    std::string flipped = good;
    flipped[good.size() - 20] ^= 0x01;
    EXPECT_THROW(deserialize_model(flipped), ChecksumError);

    EXPECT_THROW(deserialize_model(good + "x"), FormatError);
    EXPECT_THROW(load_model((p.string() + ".missing")), DataError);
    fs::remove(p);
    EXPECT_EQ(read_bytes(p), "");
}
