#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "linesfm/image.hpp"
#include "linesfm/io.hpp"
#include "test_util.hpp"

namespace linesfm {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("linesfm_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path Path(const std::string& name) const { return dir_ / name; }
  void WriteFile(const std::string& name, const std::string& bytes) const {
    std::ofstream out(Path(name), std::ios::binary);
    out << bytes;
  }

  fs::path dir_;
};

// --- hashing

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(io::Sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(io::Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(io::Sha256Hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_F(IoTest, Sha256FileMatchesBytes) {
  WriteFile("a.bin", std::string("x\0y", 3));
  EXPECT_EQ(io::Sha256File(Path("a.bin")), io::Sha256Hex(std::string("x\0y", 3)));
  EXPECT_THROW(io::Sha256File(Path("missing")), Error);
}

// --- JSON

TEST_F(IoTest, JsonRoundTripIsByteStable) {
  io::Json doc{{"b", 1.0 / 3.0}, {"a", {1, 2, 3}}, {"c", "text"}};
  io::WriteJson(Path("a.json"), doc);
  const io::Json back = io::ReadJson(Path("a.json"));
  EXPECT_EQ(back, doc);
  EXPECT_EQ(back["b"].get<double>(), 1.0 / 3.0);
  io::WriteJson(Path("b.json"), back);
  EXPECT_EQ(io::ReadText(Path("a.json")), io::ReadText(Path("b.json")));
  EXPECT_EQ(io::ReadText(Path("a.json")).back(), '\n');
}

TEST_F(IoTest, JsonErrors) {
  WriteFile("bad.json", "{\"a\": ");
  try {
    io::ReadJson(Path("bad.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
  EXPECT_THROW(io::ReadJson(Path("missing.json")), Error);
}

// --- PLY

TEST_F(IoTest, ScanPlyRoundTrip) {
  std::mt19937_64 rng(1);
  LidarScan scan;
  scan.num_rings = 4;
  for (int i = 0; i < 100; ++i) {
    scan.points.push_back(testing::RandomVec3(rng, 10.0));
    scan.rings.push_back(i / 25);
  }
  io::WriteScanPly(Path("s.ply"), scan);
  const LidarScan back = io::ReadScanPly(Path("s.ply"));
  ASSERT_EQ(back.points.size(), scan.points.size());
  for (std::size_t i = 0; i < scan.points.size(); ++i) EXPECT_EQ(back.points[i], scan.points[i]);
  EXPECT_EQ(back.rings, scan.rings);
  EXPECT_EQ(back.num_rings, 4);
}

TEST_F(IoTest, ScanPlyAsciiAndFloatBinary) {
  WriteFile("a.ply",
            "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\n"
            "property float z\nproperty ushort ring\nend_header\n1 2 3 0\n-4.5 5 6 1\n");
  const LidarScan a = io::ReadScanPly(Path("a.ply"));
  ASSERT_EQ(a.points.size(), 2u);
  EXPECT_EQ(a.points[1], Vec3(-4.5, 5, 6));
  EXPECT_EQ(a.rings, (std::vector<int>{0, 1}));

  // Binary with float32 coordinates, a uint8 ring and an extra property.
  std::string body = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                     "property float z\nproperty float intensity\nproperty uchar ring\nend_header\n";
  const float xyzi[4] = {0.5f, -1.25f, 8.0f, 99.0f};
  body.append(reinterpret_cast<const char*>(xyzi), sizeof(xyzi));
  body.push_back(static_cast<char>(3));
  WriteFile("b.ply", body);
  const LidarScan b = io::ReadScanPly(Path("b.ply"));
  ASSERT_EQ(b.points.size(), 1u);
  EXPECT_EQ(b.points[0], Vec3(0.5, -1.25, 8.0));
  EXPECT_EQ(b.rings[0], 3);
  EXPECT_EQ(b.num_rings, 4);
}

TEST_F(IoTest, PlyErrors) {
  WriteFile("nomagic.ply", "plx\nformat ascii 1.0\nelement vertex 0\nend_header\n");
  EXPECT_THROW(io::ReadScanPly(Path("nomagic.ply")), Error);
  WriteFile("noring.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                          "property float z\nend_header\n1 2 3\n");
  EXPECT_THROW(io::ReadScanPly(Path("noring.ply")), Error);
  WriteFile("short.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                         "property float z\nend_header\n1 2 3\n");
  EXPECT_THROW(io::ReadCloudPly(Path("short.ply")), Error);
  WriteFile("be.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nend_header\n");
  EXPECT_THROW(io::ReadCloudPly(Path("be.ply")), Error);
  WriteFile("list.ply", "ply\nformat ascii 1.0\nelement vertex 0\nproperty list uchar int idx\nend_header\n");
  EXPECT_THROW(io::ReadCloudPly(Path("list.ply")), Error);
  EXPECT_THROW(io::ReadCloudPly(Path("missing.ply")), Error);
}

TEST_F(IoTest, CloudPlyRoundTripWithAndWithoutCounts) {
  PointCloud c;
  c.points = {Vec3(1, 2, 3), Vec3(-0.1, 1e-9, 7e5)};
  io::WriteCloudPly(Path("plain.ply"), c);
  const PointCloud plain = io::ReadCloudPly(Path("plain.ply"));
  EXPECT_EQ(plain.points, c.points);
  EXPECT_TRUE(plain.counts.empty());

  c.counts = {4, 1};
  io::WriteCloudPly(Path("counted.ply"), c);
  const PointCloud counted = io::ReadCloudPly(Path("counted.ply"));
  EXPECT_EQ(counted.points, c.points);
  EXPECT_EQ(counted.counts, c.counts);

  // Header declares binary little-endian doubles.
  const std::string text = io::ReadText(Path("counted.ply"));
  EXPECT_NE(text.find("format binary_little_endian 1.0\nelement vertex 2\nproperty double x"), std::string::npos);
  const std::size_t body = text.find("end_header\n") + 11;
  ASSERT_EQ(text.size() - body, 2u * (3 * 8 + 4));
  double x0;
  std::memcpy(&x0, text.data() + body, 8);
  EXPECT_EQ(x0, 1.0);

  c.counts = {1};
  EXPECT_THROW(io::WriteCloudPly(Path("bad.ply"), c), Error);
}

// --- TUM

TEST_F(IoTest, TumStoresCameraToWorld) {
  // Camera at (1, 2, 3) rotated 90 degrees about world z.
  WriteFile("t.txt", "# comment\n0.5 1 2 3 0 0 0.7071067811865476 0.7071067811865476\n\n");
  const auto poses = io::ReadTum(Path("t.txt"));
  ASSERT_EQ(poses.size(), 1u);
  EXPECT_EQ(poses[0].timestamp, 0.5);
  EXPECT_LT((poses[0].pose.Center() - Vec3(1, 2, 3)).norm(), 1e-12);
  // Camera x axis expressed in the world is world +y.
  const Mat3 R_wc = poses[0].pose.R().transpose();
  EXPECT_LT((R_wc.col(0) - Vec3(0, 1, 0)).norm(), 1e-12);
  // World-to-camera maps the center to the origin.
  EXPECT_LT(poses[0].pose.Apply(Vec3(1, 2, 3)).norm(), 1e-12);
}

TEST_F(IoTest, TumRoundTrip) {
  std::mt19937_64 rng(2);
  std::vector<io::TimedPose> poses;
  for (int i = 0; i < 20; ++i) poses.push_back({0.1 * i + 1e6, testing::RandomPose(rng, 5.0)});
  io::WriteTum(Path("t.txt"), poses);
  const auto back = io::ReadTum(Path("t.txt"));
  ASSERT_EQ(back.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_EQ(back[i].timestamp, poses[i].timestamp);
    EXPECT_LT((back[i].pose.R() - poses[i].pose.R()).norm(), 1e-14);
    EXPECT_LT((back[i].pose.translation() - poses[i].pose.translation()).norm(), 1e-12);
  }
}

TEST_F(IoTest, TumMalformedLine) {
  WriteFile("t.txt", "0 1 2 3 0 0 0\n");
  EXPECT_THROW(io::ReadTum(Path("t.txt")), Error);
}

// --- images

TEST_F(IoTest, PgmRoundTripAndComments) {
  GrayImage img(7, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 11);
  WritePgm(Path("a.pgm"), img);
  const GrayImage back = ReadPgm(Path("a.pgm"));
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.data, img.data);

  WriteFile("c.pgm", std::string("P5\n# made by hand\n2 1\n255\n") + '\x05' + '\xfa');
  const GrayImage c = ReadPgm(Path("c.pgm"));
  EXPECT_EQ(c.at(0, 0), 5);
  EXPECT_EQ(c.at(1, 0), 250);

  WriteFile("p2.pgm", "P2\n1 1\n255\n7\n");
  EXPECT_THROW(ReadPgm(Path("p2.pgm")), Error);
  WriteFile("trunc.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(ReadPgm(Path("trunc.pgm")), Error);
}

TEST_F(IoTest, PfmRoundTripBottomToTop) {
  FloatImage img(3, 2);
  img.at(0, 0) = 1.5f;   // top-left
  img.at(2, 1) = -7.25f; // bottom-right
  img.at(1, 1) = 0.0f;
  WritePfm(Path("a.pfm"), img);
  const FloatImage back = ReadPfm(Path("a.pfm"));
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.data, img.data);

  // First stored row is the bottom image row.
  const std::string bytes = io::ReadText(Path("a.pfm"));
  const std::string header = "Pf\n3 2\n-1.0\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  float first_row[3];
  std::memcpy(first_row, bytes.data() + header.size(), sizeof(first_row));
  EXPECT_EQ(first_row[2], -7.25f);
  float second_row_first;
  std::memcpy(&second_row_first, bytes.data() + header.size() + 12, 4);
  EXPECT_EQ(second_row_first, 1.5f);

  WriteFile("be.pfm", "Pf\n1 1\n1.0\n\x00\x00\x00\x00");
  EXPECT_THROW(ReadPfm(Path("be.pfm")), Error);
  WriteFile("color.pfm", "PF\n1 1\n-1.0\n");
  EXPECT_THROW(ReadPfm(Path("color.pfm")), Error);
}

// --- stage artifacts

TEST(JsonArtifacts, SegmentsRoundTrip) {
  Segment3D a(Vec3(0, 0, 1), Vec3(1, 0, 1), 3);
  a.seg2d = Segment2D(Vec2(10, 20), Vec2(30, 40.5));
  Eigen::VectorXd d(4);
  d << 0.1, 0.2, 0.3, 1.0 / 3.0;
  a.descriptor = d;
  const Segment3D b(Vec3(0, 1, 2), Vec3(0.1, 1.2, 2.3), 3);
  int view = -1;
  const auto back = io::SegmentsFromJson(io::Json::parse(io::SegmentsToJson(3, {a, b}).dump()), &view);
  EXPECT_EQ(view, 3);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].start, a.start);
  EXPECT_EQ(back[0].end, a.end);
  EXPECT_EQ(back[0].view_id, 3);
  ASSERT_TRUE(back[0].seg2d && back[0].descriptor);
  EXPECT_EQ(back[0].seg2d->end, a.seg2d->end);
  EXPECT_EQ(*back[0].descriptor, d);
  EXPECT_FALSE(back[1].seg2d);
  EXPECT_FALSE(back[1].descriptor);
}

TEST(JsonArtifacts, ZeroLengthSegmentRejected) {
  const io::Json doc{{"view_id", 0}, {"segments", {{{"start", {1, 1, 1}}, {"end", {1, 1, 1}}}}}};
  EXPECT_THROW(io::SegmentsFromJson(doc), Error);
}

TEST(JsonArtifacts, MatchesAndClustersRoundTrip) {
  const std::vector<PairwiseMatch> m = {{{0, 1}, {2, 3}, 0.25}, {{1, 0}, {4, 7}, 1.0 / 7.0}};
  const auto mb = io::MatchesFromJson(io::Json::parse(io::MatchesToJson(m).dump()));
  ASSERT_EQ(mb.size(), 2u);
  EXPECT_EQ(mb[1].b.index, 7);
  EXPECT_EQ(mb[1].score, 1.0 / 7.0);

  LineCluster c;
  c.id = 5;
  c.observations = {{0, 1}, {2, 3}};
  c.initial_line = PluckerFromEndpoints(Vec3(0, 0, 1), Vec3(1, 2, 3));
  LineCluster e;
  e.id = 6;
  e.observations = {{1, 1}};
  const auto cb = io::ClustersFromJson(io::Json::parse(io::ClustersToJson({c, e}).dump()));
  ASSERT_EQ(cb.size(), 2u);
  EXPECT_EQ(cb[0].id, 5);
  ASSERT_EQ(cb[0].observations.size(), 2u);
  EXPECT_EQ(cb[0].observations[1].view, 2);
  ASSERT_TRUE(cb[0].initial_line);
  EXPECT_LT(testing::PluckerDistance(*cb[0].initial_line, *c.initial_line), 1e-15);
  EXPECT_FALSE(cb[1].initial_line);
}

TEST(JsonArtifacts, SceneAndObservationsRoundTrip) {
  synthetic::SceneSpec spec = synthetic::CourtyardSpec(2, 10);
  synthetic::Scene scene = synthetic::GenerateScene(spec, 4);
  scene.faces[0].stripes = {{0.2, 0.3}};
  const synthetic::Scene back = io::SceneFromJson(io::Json::parse(io::SceneToJson(scene).dump()));
  EXPECT_EQ(io::SceneToJson(back).dump(), io::SceneToJson(scene).dump());
  ASSERT_EQ(back.points.size(), 10u);
  EXPECT_EQ(back.points[3].position, scene.points[3].position);

  const Pose P = synthetic::OrbitTrajectory(1, Vec3(0, 0, 0.8), 8, 1.6, 0)[0];
  const auto obs = synthetic::SimulateObservations(scene, P, testing::TestIntrinsics(), 0.5, 1);
  ASSERT_FALSE(obs.segments.empty());
  const auto ob = io::ObservationsFromJson(io::Json::parse(io::ObservationsToJson(obs).dump()));
  EXPECT_EQ(io::ObservationsToJson(ob).dump(), io::ObservationsToJson(obs).dump());
  EXPECT_EQ(ob.segments[0].segment.start, obs.segments[0].segment.start);
}

TEST(JsonArtifacts, IntrinsicsAndPose) {
  const CameraIntrinsics K = testing::TestIntrinsics();
  const CameraIntrinsics Kb = io::IntrinsicsFromJson(io::IntrinsicsToJson(K));
  EXPECT_EQ(Kb.fx, K.fx);
  EXPECT_EQ(Kb.cy, K.cy);
  EXPECT_EQ(Kb.height, K.height);
  io::Json bad = io::IntrinsicsToJson(K);
  bad["fx"] = -1.0;
  EXPECT_THROW(io::IntrinsicsFromJson(bad), Error);

  std::mt19937_64 rng(3);
  const Pose P = testing::RandomPose(rng, 4.0);
  const io::Json j = io::PoseToJson(P);
  ASSERT_EQ(j["q"].size(), 4u);
  const Pose Pb = io::PoseFromJson(io::Json::parse(j.dump()));
  EXPECT_LT((Pb.R() - P.R()).norm(), 1e-15);
  EXPECT_EQ(Pb.translation(), P.translation());
  // Identity serializes as q = [1, 0, 0, 0].
  EXPECT_EQ(io::PoseToJson(Pose::Identity())["q"][0].get<double>(), 1.0);
}

}  // namespace
}  // namespace linesfm
