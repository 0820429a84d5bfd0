#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "fedscore/csv.hpp"
#include "fedscore/errors.hpp"
#include "helpers.hpp"

using namespace fedscore;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

Schema mixed_schema() {
    Schema s;
    VariableSpec age;
    age.name = "age";
    age.kind = VariableKind::Continuous;
    VariableSpec drug;
    drug.name = "drug";
    drug.kind = VariableKind::Categorical;
    drug.categories = {"P1", "P2", "P3", "P4"};
    s.variables = {age, drug};
    s.outcome_name = "y";
    return s;
}

}  // namespace

TEST_CASE("three matching rows load as a three-row dataset") {
    const auto p = temp_file("csv_ok.csv", "age,drug,y\n1.5,P1,0\n2.5,P2,1\n3.5,P4,1\n");
    LoadReport report;
    const SiteDataset d = load_csv(p, mixed_schema(), &report);
    CHECK(d.n_rows() == 3);
    CHECK(report.rows_loaded == 3);
    CHECK(report.rows_excluded_missing == 0);
    CHECK(d.numeric_column("age")[1] == 2.5);
    CHECK(d.categorical_column("drug")[2] == 3);
    CHECK(d.outcome == std::vector<int>{0, 1, 1});
}

TEST_CASE("a missing cell drops the row and counts it") {
    const auto p = temp_file("csv_missing.csv", "age,drug,y\n1.5,P1,0\n,P2,1\n3.5,NA,1\n");
    LoadReport report;
    const SiteDataset d = load_csv(p, mixed_schema(), &report);
    CHECK(d.n_rows() == 1);
    CHECK(report.rows_excluded_missing == 2);
}

TEST_CASE("an unknown category label is an error naming row and column") {
    const auto p = temp_file("csv_badcat.csv", "age,drug,y\n1.5,P1,0\n2.5,P5,1\n");
    try {
        load_csv(p, mixed_schema());
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("drug") != std::string::npos);
        // Rows are numbered as in the file, header included, so the bad
        // label on the second data line is row 3.
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("P5") != std::string::npos);
    }
}

TEST_CASE("a non-numeric continuous cell is an error") {
    const auto p = temp_file("csv_badnum.csv", "age,drug,y\nxyz,P1,0\n");
    CHECK_THROWS_AS(load_csv(p, mixed_schema()), DataError);
}

TEST_CASE("columns are matched by header name, not position") {
    const auto p = temp_file("csv_reorder.csv", "y,drug,age\n1,P3,9.5\n");
    const SiteDataset d = load_csv(p, mixed_schema());
    CHECK(d.numeric_column("age")[0] == 9.5);
    CHECK(d.outcome[0] == 1);
}

TEST_CASE("a column absent from the schema is an error") {
    const auto p = temp_file("csv_extra.csv", "age,drug,y,bmi\n1.5,P1,0,22\n");
    CHECK_THROWS_AS(load_csv(p, mixed_schema()), DataError);
}

TEST_CASE("save/load round-trips values and split tags") {
    SiteDataset d = fedscore::testing::planted_signal(37, 3, 0.1, 21);
    d = split_train_valid_test(std::move(d), {0.7, 0.1, 0.2}, 5);
    const fs::path p = fs::temp_directory_path() / "csv_roundtrip.csv";
    save_csv(p, d, true);
    const SiteDataset back = load_csv(p, d.schema);
    REQUIRE(back.n_rows() == d.n_rows());
    CHECK(back.split == d.split);
    CHECK(back.outcome == d.outcome);
    for (std::size_t v = 0; v < d.columns.size(); ++v) {
        const auto& a = d.numeric_column(v);
        const auto& b = back.numeric_column(v);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("quoted fields with commas survive a round-trip") {
    Schema s;
    VariableSpec v;
    v.name = "group";
    v.kind = VariableKind::Categorical;
    v.categories = {"low, actually", "high"};
    s.variables = {v};
    s.outcome_name = "y";
    const auto p =
        temp_file("csv_quotes.csv", "group,y\n\"low, actually\",0\nhigh,1\n");
    const SiteDataset d = load_csv(p, s);
    CHECK(d.categorical_column("group")[0] == 0);
    CHECK(d.categorical_column("group")[1] == 1);
}
