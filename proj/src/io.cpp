#include "linesfm/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace linesfm::io {

Json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    Throw(ErrorCode::kIoError, path.string() + ": " + e.what());
  }
}

void WriteJson(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    Throw(ErrorCode::kIoError, "SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string Sha256File(const std::filesystem::path& path) { return Sha256Hex(ReadText(path)); }

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

struct PlyProperty {
  std::string name;
  std::string type;
  int size = 0;
};

struct PlyVertices {
  std::vector<PlyProperty> props;
  std::vector<std::vector<double>> rows;

  int Column(const std::string& name) const {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }
};

int TypeSize(const std::string& type) {
  static const std::map<std::string, int> sizes{
      {"char", 1},  {"int8", 1},   {"uchar", 1},   {"uint8", 1},  {"short", 2},   {"int16", 2},
      {"ushort", 2}, {"uint16", 2}, {"int", 4},     {"int32", 4},  {"uint", 4},    {"uint32", 4},
      {"float", 4}, {"float32", 4}, {"double", 8}, {"float64", 8}};
  const auto it = sizes.find(type);
  return it == sizes.end() ? 0 : it->second;
}

double DecodeBinary(const char* p, const std::string& type) {
  auto get = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (type == "char" || type == "int8") return get(std::int8_t{});
  if (type == "uchar" || type == "uint8") return get(std::uint8_t{});
  if (type == "short" || type == "int16") return get(std::int16_t{});
  if (type == "ushort" || type == "uint16") return get(std::uint16_t{});
  if (type == "int" || type == "int32") return get(std::int32_t{});
  if (type == "uint" || type == "uint32") return get(std::uint32_t{});
  if (type == "float" || type == "float32") return get(float{});
  return get(double{});
}

PlyVertices ReadPlyVertices(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIoError, "cannot open " + path.string());
  auto fail = [&](const std::string& what) { Throw(ErrorCode::kIoError, path.string() + ": " + what); };
  std::string line;
  std::getline(in, line);
  if (line != "ply" && line != "ply\r") fail("missing ply magic");

  std::string format;
  long long count = -1;
  bool in_vertex = false;
  PlyVertices out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "format") {
      ls >> format;
    } else if (key == "element") {
      std::string name;
      long long n = 0;
      ls >> name >> n;
      if (count >= 0) fail("only a single vertex element is supported");
      if (name != "vertex") fail("first element must be 'vertex'");
      count = n;
      in_vertex = true;
    } else if (key == "property" && in_vertex) {
      PlyProperty p;
      ls >> p.type;
      if (p.type == "list") fail("list properties are not supported");
      ls >> p.name;
      p.size = TypeSize(p.type);
      if (p.size == 0) fail("unknown property type '" + p.type + "'");
      out.props.push_back(p);
    }
  }
  if (count < 0) fail("no vertex element");
  out.rows.resize(static_cast<std::size_t>(count));
  if (format == "ascii") {
    for (auto& row : out.rows) {
      row.resize(out.props.size());
      for (double& v : row) {
        if (!(in >> v)) fail("truncated ASCII vertex data");
      }
    }
  } else if (format == "binary_little_endian") {
    int stride = 0;
    for (const auto& p : out.props) stride += p.size;
    std::vector<char> buf(static_cast<std::size_t>(stride));
    for (auto& row : out.rows) {
      if (!in.read(buf.data(), stride)) fail("truncated binary vertex data");
      row.resize(out.props.size());
      int offset = 0;
      for (std::size_t i = 0; i < out.props.size(); ++i) {
        row[i] = DecodeBinary(buf.data() + offset, out.props[i].type);
        offset += out.props[i].size;
      }
    }
  } else {
    fail("unsupported PLY format '" + format + "'");
  }
  return out;
}

void WriteBinaryPly(const std::filesystem::path& path, std::size_t n,
                    const std::vector<std::pair<std::string, std::string>>& props,
                    const std::function<void(std::size_t, std::ostream&)>& write_row) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << "\n";
  for (const auto& [type, name] : props) out << "property " << type << " " << name << "\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < n; ++i) write_row(i, out);
}

template <typename T>
void Put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

Vec3 Vec3FromJson(const Json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }
Json ToJson(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json ToJson(const Vec2& v) { return Json::array({v.x(), v.y()}); }
Vec2 Vec2FromJson(const Json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

}  // namespace

LidarScan ReadScanPly(const std::filesystem::path& path) {
  const PlyVertices v = ReadPlyVertices(path);
  const int x = v.Column("x");
  const int y = v.Column("y");
  const int z = v.Column("z");
  const int ring = v.Column("ring");
  if (x < 0 || y < 0 || z < 0 || ring < 0) {
    Throw(ErrorCode::kIoError, path.string() + ": scan PLY needs x, y, z and ring properties");
  }
  LidarScan scan;
  for (const auto& row : v.rows) {
    scan.points.emplace_back(row[x], row[y], row[z]);
    scan.rings.push_back(static_cast<int>(row[ring]));
    scan.num_rings = std::max(scan.num_rings, scan.rings.back() + 1);
  }
  scan.Validate();
  return scan;
}

void WriteScanPly(const std::filesystem::path& path, const LidarScan& scan) {
  scan.Validate();
  WriteBinaryPly(path, scan.points.size(), {{"double", "x"}, {"double", "y"}, {"double", "z"}, {"int", "ring"}},
                 [&](std::size_t i, std::ostream& out) {
                   for (int k = 0; k < 3; ++k) Put(out, scan.points[i](k));
                   Put(out, static_cast<std::int32_t>(scan.rings[i]));
                 });
}

PointCloud ReadCloudPly(const std::filesystem::path& path) {
  const PlyVertices v = ReadPlyVertices(path);
  const int x = v.Column("x");
  const int y = v.Column("y");
  const int z = v.Column("z");
  const int count = v.Column("count");
  if (x < 0 || y < 0 || z < 0) Throw(ErrorCode::kIoError, path.string() + ": cloud PLY needs x, y, z");
  PointCloud cloud;
  for (const auto& row : v.rows) {
    cloud.points.emplace_back(row[x], row[y], row[z]);
    if (count >= 0) cloud.counts.push_back(static_cast<int>(row[count]));
  }
  return cloud;
}

void WriteCloudPly(const std::filesystem::path& path, const PointCloud& cloud) {
  const bool with_count = !cloud.counts.empty();
  if (with_count && cloud.counts.size() != cloud.points.size()) {
    Throw(ErrorCode::kInvalidArgument, "cloud counts must parallel points");
  }
  std::vector<std::pair<std::string, std::string>> props{{"double", "x"}, {"double", "y"}, {"double", "z"}};
  if (with_count) props.emplace_back("int", "count");
  WriteBinaryPly(path, cloud.points.size(), props, [&](std::size_t i, std::ostream& out) {
    for (int k = 0; k < 3; ++k) Put(out, cloud.points[i](k));
    if (with_count) Put(out, static_cast<std::int32_t>(cloud.counts[i]));
  });
}

std::vector<TimedPose> ReadTum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<TimedPose> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      Throw(ErrorCode::kIoError, path.string() + ":" + std::to_string(lineno) + ": expected 8 numbers");
    }
    const Eigen::Quaterniond q_wc = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    out.push_back(TimedPose{ts, Pose::FromCenter(q_wc.toRotationMatrix(), Vec3(tx, ty, tz))});
  }
  return out;
}

void WriteTum(const std::filesystem::path& path, const std::vector<TimedPose>& poses) {
  std::ofstream out(path);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& tp : poses) {
    const Vec3 c = tp.pose.Center();
    const Eigen::Quaterniond q = tp.pose.rotation().conjugate();
    out << tp.timestamp << " " << c.x() << " " << c.y() << " " << c.z() << " " << q.x() << " " << q.y() << " "
        << q.z() << " " << q.w() << "\n";
  }
}

Json SegmentsToJson(int view_id, const std::vector<Segment3D>& segments) {
  Json arr = Json::array();
  for (const auto& s : segments) {
    Json j{{"start", ToJson(s.start)}, {"end", ToJson(s.end)}};
    j["seg2d"] = s.seg2d ? Json::array({ToJson(s.seg2d->start), ToJson(s.seg2d->end)}) : Json();
    if (s.descriptor) j["descriptor"] = std::vector<double>(s.descriptor->data(), s.descriptor->data() + s.descriptor->size());
    arr.push_back(j);
  }
  return Json{{"view_id", view_id}, {"segments", arr}};
}

std::vector<Segment3D> SegmentsFromJson(const Json& doc, int* view_id) {
  const int view = doc.at("view_id").get<int>();
  if (view_id) *view_id = view;
  std::vector<Segment3D> out;
  for (const auto& j : doc.at("segments")) {
    Segment3D s(Vec3FromJson(j.at("start")), Vec3FromJson(j.at("end")), view);
    if (j.contains("seg2d") && !j["seg2d"].is_null()) {
      s.seg2d = Segment2D(Vec2FromJson(j["seg2d"].at(0)), Vec2FromJson(j["seg2d"].at(1)));
    }
    if (j.contains("descriptor")) {
      const auto d = j["descriptor"].get<std::vector<double>>();
      s.descriptor = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

Json MatchesToJson(const std::vector<PairwiseMatch>& matches) {
  Json arr = Json::array();
  for (const auto& m : matches) {
    arr.push_back({{"a", {m.a.view, m.a.index}}, {"b", {m.b.view, m.b.index}}, {"score", m.score}});
  }
  return Json{{"matches", arr}};
}

std::vector<PairwiseMatch> MatchesFromJson(const Json& doc) {
  std::vector<PairwiseMatch> out;
  for (const auto& j : doc.at("matches")) {
    PairwiseMatch m;
    m.a = {j.at("a").at(0).get<int>(), j.at("a").at(1).get<int>()};
    m.b = {j.at("b").at(0).get<int>(), j.at("b").at(1).get<int>()};
    m.score = j.at("score").get<double>();
    out.push_back(m);
  }
  return out;
}

Json ClustersToJson(const std::vector<LineCluster>& clusters) {
  Json arr = Json::array();
  for (const auto& c : clusters) {
    Json members = Json::array();
    for (const auto& r : c.observations) members.push_back({r.view, r.index});
    Json plucker;
    if (c.initial_line) plucker = Json::array({ToJson(c.initial_line->d()), ToJson(c.initial_line->m())});
    arr.push_back({{"id", c.id}, {"members", members}, {"plucker", plucker}});
  }
  return Json{{"clusters", arr}};
}

std::vector<LineCluster> ClustersFromJson(const Json& doc) {
  std::vector<LineCluster> out;
  for (const auto& j : doc.at("clusters")) {
    LineCluster c;
    c.id = j.at("id").get<int>();
    for (const auto& m : j.at("members")) c.observations.push_back({m.at(0).get<int>(), m.at(1).get<int>()});
    if (j.contains("plucker") && !j["plucker"].is_null()) {
      c.initial_line = PluckerLine(Vec3FromJson(j["plucker"].at(0)), Vec3FromJson(j["plucker"].at(1)));
    }
    out.push_back(std::move(c));
  }
  return out;
}

Json SceneToJson(const synthetic::Scene& scene) {
  Json segments = Json::array();
  for (const auto& s : scene.segments) {
    segments.push_back({{"id", s.id}, {"start", ToJson(s.start)}, {"end", ToJson(s.end)}, {"faces", s.faces}});
  }
  Json faces = Json::array();
  for (const auto& f : scene.faces) {
    Json stripes = Json::array();
    for (const auto& [lo, hi] : f.stripes) stripes.push_back({lo, hi});
    faces.push_back({{"id", f.id},
                     {"origin", ToJson(f.origin)},
                     {"edge_u", ToJson(f.edge_u)},
                     {"edge_v", ToJson(f.edge_v)},
                     {"normal", ToJson(f.normal)},
                     {"shade", f.shade},
                     {"stripes", stripes},
                     {"stripe_shade", f.stripe_shade}});
  }
  Json points = Json::array();
  for (const auto& p : scene.points) {
    points.push_back({{"id", p.id}, {"position", ToJson(p.position)}, {"face", p.face}});
  }
  return Json{{"segments", segments}, {"faces", faces}, {"points", points}};
}

synthetic::Scene SceneFromJson(const Json& doc) {
  synthetic::Scene scene;
  for (const auto& j : doc.at("segments")) {
    synthetic::SceneSegment s;
    s.id = j.at("id").get<int>();
    s.start = Vec3FromJson(j.at("start"));
    s.end = Vec3FromJson(j.at("end"));
    s.faces = j.at("faces").get<std::array<int, 2>>();
    scene.segments.push_back(s);
  }
  for (const auto& j : doc.at("faces")) {
    synthetic::Face f;
    f.id = j.at("id").get<int>();
    f.origin = Vec3FromJson(j.at("origin"));
    f.edge_u = Vec3FromJson(j.at("edge_u"));
    f.edge_v = Vec3FromJson(j.at("edge_v"));
    f.normal = Vec3FromJson(j.at("normal"));
    f.shade = j.at("shade").get<std::uint8_t>();
    for (const auto& s : j.at("stripes")) f.stripes.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
    f.stripe_shade = j.at("stripe_shade").get<std::uint8_t>();
    scene.faces.push_back(std::move(f));
  }
  for (const auto& j : doc.at("points")) {
    scene.points.push_back({Vec3FromJson(j.at("position")), j.at("id").get<int>(), j.at("face").get<int>()});
  }
  return scene;
}

Json ObservationsToJson(const synthetic::Observations& obs) {
  Json segments = Json::array();
  for (const auto& s : obs.segments) {
    segments.push_back({{"gt_id", s.gt_id},
                        {"seg2d", {ToJson(s.segment.start), ToJson(s.segment.end)}},
                        {"camera_start", ToJson(s.camera_start)},
                        {"camera_end", ToJson(s.camera_end)}});
  }
  Json points = Json::array();
  for (const auto& p : obs.points) points.push_back({{"gt_id", p.gt_id}, {"pixel", ToJson(p.pixel)}, {"depth", p.depth}});
  return Json{{"segments", segments}, {"points", points}};
}

synthetic::Observations ObservationsFromJson(const Json& doc) {
  synthetic::Observations obs;
  for (const auto& j : doc.at("segments")) {
    synthetic::SegmentObservation s;
    s.gt_id = j.at("gt_id").get<int>();
    s.segment = Segment2D(Vec2FromJson(j.at("seg2d").at(0)), Vec2FromJson(j.at("seg2d").at(1)));
    s.camera_start = Vec3FromJson(j.at("camera_start"));
    s.camera_end = Vec3FromJson(j.at("camera_end"));
    obs.segments.push_back(s);
  }
  for (const auto& j : doc.at("points")) {
    obs.points.push_back({j.at("gt_id").get<int>(), Vec2FromJson(j.at("pixel")), j.at("depth").get<double>()});
  }
  return obs;
}

Json IntrinsicsToJson(const CameraIntrinsics& K) {
  return Json{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

CameraIntrinsics IntrinsicsFromJson(const Json& doc) {
  CameraIntrinsics K;
  K.fx = doc.at("fx").get<double>();
  K.fy = doc.at("fy").get<double>();
  K.cx = doc.at("cx").get<double>();
  K.cy = doc.at("cy").get<double>();
  K.width = doc.at("width").get<int>();
  K.height = doc.at("height").get<int>();
  K.Validate();
  return K;
}

Json PoseToJson(const Pose& P) {
  const auto& q = P.rotation();
  return Json{{"q", {q.w(), q.x(), q.y(), q.z()}}, {"t", ToJson(P.translation())}};
}

Pose PoseFromJson(const Json& doc) {
  const auto& q = doc.at("q");
  return Pose(Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                 q.at(3).get<double>())
                  .normalized(),
              Vec3FromJson(doc.at("t")));
}

}  // namespace linesfm::io
