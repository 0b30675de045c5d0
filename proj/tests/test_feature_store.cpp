#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "imret/feature_store.hpp"
#include "test_util.hpp"

using namespace imret;

TEST_CASE("binary file with two dim-3 records loads") {
    TempDir dir;
    FeatureSet set;
    set.add("a", {1.0, 2.0, 3.0});
    set.add("b", {4.0, 5.0, 6.0});
    save_features(set, dir.file("f.fvs"), FileFormat::binary);

    FeatureSet loaded = load_features(dir.file("f.fvs"), FileFormat::binary);
    CHECK(loaded.size() == 2);
    CHECK(loaded.dim() == 3);
    CHECK(loaded.id(0) == "a");
    CHECK(loaded.id(1) == "b");
    CHECK(loaded == set);
}

TEST_CASE("binary save/load round-trip is byte identical") {
    TempDir dir;
    std::mt19937_64 rng(7);
    FeatureSet set = random_feature_set(rng, 17, 5);
    save_features(set, dir.file("a.fvs"), FileFormat::binary);
    FeatureSet loaded = load_features(dir.file("a.fvs"), FileFormat::binary);
    save_features(loaded, dir.file("b.fvs"), FileFormat::binary);
    CHECK(read_file(dir.file("a.fvs")) == read_file(dir.file("b.fvs")));
}

TEST_CASE("dimension mismatch is reported at the offending record") {
    TempDir dir;
    std::ofstream out(dir.file("bad.tsv"));
    out << "a\t1\t2\t3\n";
    out << "b\t1\t2\t3\t4\n";
    out.close();
    try {
        load_features(dir.file("bad.tsv"), FileFormat::tsv);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("record 2") != std::string::npos);
    }
}

TEST_CASE("saving an empty set is an error") {
    TempDir dir;
    FeatureSet set;
    CHECK_THROWS_AS(save_features(set, dir.file("e.fvs"), FileFormat::binary), DataError);
}

TEST_CASE("single record binary layout: magic, counts, id, one float") {
    TempDir dir;
    FeatureSet set;
    set.add("x", {0.5});
    save_features(set, dir.file("one.fvs"), FileFormat::binary);

    std::string bytes = read_file(dir.file("one.fvs"));
    REQUIRE(bytes.size() == 4 + 4 + 4 + 2 + 1 + 4);
    CHECK(bytes.compare(0, 4, "FVS1") == 0);
    auto u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
    };
    CHECK(u32(4) == 1);  // count
    CHECK(u32(8) == 1);  // dim
    CHECK(static_cast<unsigned char>(bytes[12]) == 1); // id length, little end
    CHECK(static_cast<unsigned char>(bytes[13]) == 0);
    CHECK(bytes[14] == 'x');
    float value;
    std::memcpy(&value, bytes.data() + 15, 4);
    CHECK(value == 0.5f);
}

TEST_CASE("load(save(S)) == S for random sets, both formats") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        TempDir dir;
        std::size_t n = 1 + rng() % 20, d = 1 + rng() % 16;
        FeatureSet set = random_feature_set(rng, n, d, -100.0, 100.0);

        save_features(set, dir.file("s.fvs"), FileFormat::binary);
        CHECK(load_features(dir.file("s.fvs"), FileFormat::binary) == set);

        save_features(set, dir.file("s.tsv"), FileFormat::tsv);
        CHECK(load_features(dir.file("s.tsv"), FileFormat::tsv) == set);
    }
}

TEST_CASE("two loads of one file agree exactly") {
    TempDir dir;
    std::mt19937_64 rng(3);
    FeatureSet set = random_feature_set(rng, 9, 4);
    save_features(set, dir.file("s.fvs"), FileFormat::binary);
    FeatureSet first = load_features(dir.file("s.fvs"), FileFormat::binary);
    FeatureSet second = load_features(dir.file("s.fvs"), FileFormat::binary);
    CHECK(first == second);
}

TEST_CASE("get returns stored vector; unknown id throws") {
    FeatureSet set;
    set.add("a", {1.0, 2.0});
    auto row = set.get("a");
    CHECK(FeatureVector(row.begin(), row.end()) == FeatureVector{1.0, 2.0});
    CHECK_THROWS_AS(set.get("missing"), DataError);
    CHECK(!set.contains("missing"));
    CHECK(set.contains("a"));
}

TEST_CASE("duplicate and empty ids are rejected") {
    FeatureSet set;
    set.add("a", {1.0});
    CHECK_THROWS_AS(set.add("a", {2.0}), DataError);
    CHECK_THROWS_AS(set.add("", {2.0}), DataError);
}

TEST_CASE("strict load rejects non-finite values with a record index") {
    TempDir dir;
    std::ofstream out(dir.file("nan.tsv"));
    out << "a\t1\t2\n";
    out << "b\tnan\t2\n";
    out.close();
    try {
        load_features(dir.file("nan.tsv"), FileFormat::tsv);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("record 2") != std::string::npos);
    }
}

TEST_CASE("truncated and corrupted binary files are rejected") {
    TempDir dir;
    FeatureSet set;
    set.add("ab", {1.0, 2.0});
    set.add("cd", {3.0, 4.0});
    save_features(set, dir.file("ok.fvs"), FileFormat::binary);
    std::string bytes = read_file(dir.file("ok.fvs"));

    auto write_bytes = [&](const std::string& path, const std::string& data) {
        std::ofstream out(path, std::ios::binary);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
    };

    write_bytes(dir.file("trunc.fvs"), bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_features(dir.file("trunc.fvs"), FileFormat::binary), DataError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    write_bytes(dir.file("magic.fvs"), bad_magic);
    CHECK_THROWS_AS(load_features(dir.file("magic.fvs"), FileFormat::binary), DataError);

    write_bytes(dir.file("trail.fvs"), bytes + "zz");
    CHECK_THROWS_AS(load_features(dir.file("trail.fvs"), FileFormat::binary), DataError);
}

TEST_CASE("validate: clean set, NaN component, zero vector") {
    FeatureSet clean;
    clean.add("a", {1.0, 2.0});
    CHECK(validate(clean).issues.empty());
    CHECK(validate(clean).clean());

    FeatureSet with_nan;
    with_nan.add("ok", {1.0, 2.0});
    with_nan.add("broken", {1.0, std::nan("")});
    ValidationReport report = validate(with_nan);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].severity == ValidationIssue::Severity::error);
    CHECK(report.issues[0].item_id == "broken");
    CHECK(report.issues[0].component == 1);
    CHECK(!report.ok());

    FeatureSet with_zero;
    with_zero.add("z", {0.0, 0.0});
    ValidationReport zero_report = validate(with_zero);
    REQUIRE(zero_report.issues.size() == 1);
    CHECK(zero_report.issues[0].severity == ValidationIssue::Severity::warning);
    CHECK(zero_report.ok());     // warnings do not fail validation
    CHECK(!zero_report.clean()); // but the set is not clean
}

TEST_CASE("format is inferred from the file extension") {
    CHECK(format_from_extension("x.tsv") == FileFormat::tsv);
    CHECK(format_from_extension("x.fvs") == FileFormat::binary);
    CHECK(format_from_extension("x") == FileFormat::binary);
}
