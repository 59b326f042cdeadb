#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chac/hac.hpp"
#include "chac/io.hpp"
#include "chac/metrics.hpp"
#include "oracles.hpp"

using namespace chac;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/chac_test_") + std::to_string(::getpid()) + "_" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << body;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CHAC_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("csv points: basic parse and header detection") {
    std::istringstream plain("0,0\n3,4\n");
    const Dataset a = read_points_csv(plain, "plain");
    CHECK(a.size() == 2);
    CHECK(a.dim == 2);
    CHECK(a[1][1] == 4.0);

    std::istringstream with_header("x,y\n1.5,2.5\n");
    const Dataset b = read_points_csv(with_header, "hdr");
    CHECK(b.size() == 1);
    CHECK(b[0][0] == 1.5);

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(read_points_csv(ragged, "ragged"), ParseError);

    std::istringstream nonfinite("1,2\n3,nan\n");
    CHECK_THROWS_AS(read_points_csv(nonfinite, "nan"), ParseError);

    std::istringstream text_later("1,2\nfoo,bar\n");
    CHECK_THROWS_AS(read_points_csv(text_later, "text"), ParseError);
}

TEST_CASE("fvecs: exact byte layout of a single record") {
    Dataset pts(2);
    pts.push_back(Point{1.0, 2.0});
    const std::string path = temp_path("one.fvecs");
    write_points(pts, path, PointFormat::fvecs);
    const std::string bytes = slurp(path);
    const unsigned char want[] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80,
                                  0x3F, 0x00, 0x00, 0x00, 0x40};
    REQUIRE(bytes.size() == sizeof(want));
    for (std::size_t i = 0; i < sizeof(want); ++i) {
        CHECK(static_cast<unsigned char>(bytes[i]) == want[i]);
    }
    const Dataset back = load_points(path, PointFormat::fvecs);
    CHECK(back.size() == 1);
    CHECK(back[0][0] == 1.0);
    CHECK(back[0][1] == 2.0);
    std::remove(path.c_str());
}

TEST_CASE("fvecs: dimension mismatch and truncation are parse errors") {
    const std::string path = temp_path("bad.fvecs");
    {
        std::string body;
        const std::int32_t d2 = 2, d3 = 3;
        const float f = 1.0f;
        body.append(reinterpret_cast<const char*>(&d2), 4);
        body.append(reinterpret_cast<const char*>(&f), 4);
        body.append(reinterpret_cast<const char*>(&f), 4);
        body.append(reinterpret_cast<const char*>(&d3), 4);
        body.append(reinterpret_cast<const char*>(&f), 4);
        spit(path, body);
    }
    CHECK_THROWS_AS(load_points(path, PointFormat::fvecs), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("point round trips through both formats") {
    Dataset pts = oracle::random_dataset(100, 5, 1717);
    const std::string csv = temp_path("rt.csv");
    write_points(pts, csv, PointFormat::csv);
    const Dataset via_csv = load_points(csv, PointFormat::csv);
    REQUIRE(via_csv.size() == pts.size());
    CHECK(via_csv.data == pts.data);  // %.17g round-trips doubles

    // fvecs narrows to float32; compare after narrowing
    Dataset narrowed(pts.dim);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Point row(pts.dim);
        for (std::size_t k = 0; k < pts.dim; ++k) {
            row[k] = static_cast<double>(static_cast<float>(pts[i][k]));
        }
        narrowed.push_back(row);
    }
    const std::string fv = temp_path("rt.fvecs");
    write_points(pts, fv, PointFormat::fvecs);
    const Dataset via_fvecs = load_points(fv, PointFormat::fvecs);
    CHECK(via_fvecs.data == narrowed.data);
    std::remove(csv.c_str());
    std::remove(fv.c_str());
}

TEST_CASE("dendrogram file: header, reload, and validation") {
    const Dataset pts = oracle::random_dataset(30, 2, 1919);
    const Dendrogram dend = exact_hac(pts);
    const std::string path = temp_path("dend.csv");
    write_dendrogram(dend, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "left_id,right_id,new_id,distance,size");
    in.close();

    const Dendrogram back = load_dendrogram(path);
    CHECK(back.num_leaves == dend.num_leaves);
    REQUIRE(back.merges.size() == dend.merges.size());
    for (std::size_t k = 0; k < dend.merges.size(); ++k) {
        CHECK(back.merges[k].left_id == dend.merges[k].left_id);
        CHECK(back.merges[k].distance == dend.merges[k].distance);  // 17 digits round-trip
    }
    std::remove(path.c_str());
}

TEST_CASE("labels and leaf maps") {
    const std::string labels = temp_path("labels.csv");
    spit(labels, "label\n2\n2\n5\n");
    const std::vector<std::int64_t> raw = load_labels(labels);
    CHECK(raw == std::vector<std::int64_t>{2, 2, 5});
    CHECK(normalize_labels(raw).labels == std::vector<std::uint32_t>{0, 0, 1});
    std::remove(labels.c_str());

    const std::string map = temp_path("map.csv");
    write_leaf_map({0, 0, 1}, map);
    CHECK(load_leaf_map(map) == std::vector<std::uint32_t>{0, 0, 1});
    std::remove(map.c_str());
}

TEST_CASE("stats json carries the counters and gamma") {
    RunStats s;
    s.merges = 100;
    s.stale_dequeues = 61;
    s.requeues = 7;
    const nlohmann::json j = stats_to_json(s);
    CHECK(j["merges"] == 100);
    CHECK(std::abs(j["gamma"].get<double>() - 0.61) <= 1e-6);
    CHECK(j.contains("phases"));
}

TEST_CASE("cli: cluster on the triangle emits the expected rows") {
    const std::string out = temp_path("tri.csv");
    const int rc = run_cli("cluster --input " CHAC_DATA_DIR "/triangle.csv --mode exact --output " +
                           out);
    REQUIRE(rc == 0);
    const Dendrogram dend = load_dendrogram(out);
    REQUIRE(dend.merges.size() == 2);
    CHECK(dend.merges[0].distance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dend.merges[1].distance == doctest::Approx(0.8660254).epsilon(1e-6));
    std::remove(out.c_str());
}

TEST_CASE("cli: missing input exits 2, conflicting flags exit 2") {
    CHECK(run_cli("cluster --input /does/not/exist.csv --output /tmp/chac_x.csv") == 2);
    CHECK(run_cli("cluster --input " CHAC_DATA_DIR "/triangle.csv --mode exact --epsilon 0.5 "
                  "--output /tmp/chac_x.csv") == 2);
    CHECK(run_cli("cluster --input " CHAC_DATA_DIR "/triangle.csv --mode exact --nns lsh "
                  "--output /tmp/chac_x.csv") == 2);
    CHECK(run_cli("nonsense") == 2);
}

TEST_CASE("cli: identical seeds give byte-identical outputs") {
    const Dataset pts = oracle::random_dataset(40, 3, 2121);
    const std::string input = temp_path("pts.csv");
    write_points(pts, input, PointFormat::csv);
    const std::string out1 = temp_path("d1.csv");
    const std::string out2 = temp_path("d2.csv");
    const std::string flags = " --mode heap --nns lsh --epsilon 0.1 --lsh-k 4 --lsh-l 6 --seed 9 ";
    REQUIRE(run_cli("cluster --input " + input + flags + "--output " + out1) == 0);
    REQUIRE(run_cli("cluster --input " + input + flags + "--output " + out2) == 0);
    CHECK(slurp(out1) == slurp(out2));
    std::remove(input.c_str());
    std::remove(out1.c_str());
    std::remove(out2.c_str());
}

TEST_CASE("cli: metrics scores a clustered fixture") {
    const std::string dend = temp_path("m_dend.csv");
    const std::string labels = temp_path("m_labels.csv");
    const std::string scores = temp_path("m_scores.json");
    spit(labels, "0\n0\n1\n");
    REQUIRE(run_cli("cluster --input " CHAC_DATA_DIR "/triangle.csv --mode exact --output " +
                    dend) == 0);
    REQUIRE(run_cli("metrics --dendrogram " + dend + " --labels " + labels +
                    " --input " CHAC_DATA_DIR "/triangle.csv --output " + scores) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(scores));
    CHECK(j.contains("ari"));
    CHECK(j.contains("nmi"));
    CHECK(j.contains("purity"));
    CHECK(j.contains("dasgupta"));
    CHECK(j["ari"]["score"].get<double>() <= 1.0);
    std::remove(dend.c_str());
    std::remove(labels.c_str());
    std::remove(scores.c_str());
}

TEST_CASE("cli: bench and invariant-check run clean on small inputs") {
    CHECK(run_cli("bench --input " CHAC_DATA_DIR "/triangle.csv --mode exact > /dev/null") == 0);
    CHECK(run_cli("invariant-check --input " CHAC_DATA_DIR "/triangle.csv --mode exact "
                  "> /dev/null") == 0);
    CHECK(run_cli("invariant-check --input " CHAC_DATA_DIR "/iris.csv --epsilon 0.3 "
                  "> /dev/null") == 0);
}
