#include "htsc/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace htsc {

namespace {
bool is_pow2(int n) { return n >= 8 && (n & (n - 1)) == 0; }

std::string base64_encode(const unsigned char* data, std::size_t len) {
  static const char* tbl =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    unsigned v = data[i] << 16;
    if (i + 1 < len) v |= data[i + 1] << 8;
    if (i + 2 < len) v |= data[i + 2];
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(i + 1 < len ? tbl[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? tbl[v & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/')
      return 63;
    return -1;
  };
  std::vector<unsigned char> out;
  int buf = 0, bits = 0;
  for (char c : s) {
    const int v = val(c);
    if (v < 0) continue;
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buf >> bits) & 0xff));
    }
  }
  return out;
}
}  // namespace

void GridSpec::validate() const {
  if (d < 1 || p < 1) throw DomainError("grid: d, p must be positive");
  if (!is_pow2(nv) || !is_pow2(nz))
    throw DomainError("grid: sample counts must be powers of two, >= 8");
  if (!(Lv > 0) || !(Lz > 0)) throw DomainError("grid: extents must be positive");
  if (k_center.size() != 0 && k_center.size() != p)
    throw DimensionError("grid: k_center must have p entries");
}

std::size_t GridSpec::v_count() const {
  std::size_t n = 1;
  for (int i = 0; i < 2 * d; ++i) n *= nv;
  return n;
}

std::size_t GridSpec::z_count() const {
  std::size_t n = 1;
  for (int i = 0; i < p; ++i) n *= nz;
  return n;
}

double GridSpec::cell_volume() const {
  return std::pow(dv(), 2 * d) * std::pow(dz(), p);
}

VectorXi GridSpec::center() const {
  if (k_center.size() == p) return k_center;
  return VectorXi::Zero(p);
}

VectorXd GridSpec::lambda_center() const {
  return center().cast<double>() * dlambda();
}

bool GridSpec::operator==(const GridSpec& o) const {
  return d == o.d && p == o.p && Lv == o.Lv && Lz == o.Lz && nv == o.nv &&
         nz == o.nz && center() == o.center();
}

std::string GridSpec::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["p"] = p;
  j["Lv"] = Lv;
  j["Lz"] = Lz;
  j["nv"] = nv;
  j["nz"] = nz;
  const VectorXi c = center();
  j["k_center"] = std::vector<int>(c.data(), c.data() + c.size());
  return j.dump();
}

GridSpec GridSpec::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GridSpec g;
  g.d = j.at("d").get<int>();
  g.p = j.at("p").get<int>();
  g.Lv = j.at("Lv").get<double>();
  g.Lz = j.at("Lz").get<double>();
  g.nv = j.at("nv").get<int>();
  g.nz = j.at("nz").get<int>();
  if (j.contains("k_center")) {
    const auto v = j["k_center"].get<std::vector<int>>();
    g.k_center = Eigen::Map<const VectorXi>(v.data(), v.size());
  }
  g.validate();
  return g;
}

LambdaGrid::LambdaGrid(const GridSpec& grid) : grid_(grid) {
  grid.validate();
  const int half = grid.nz / 2;
  const VectorXi c = grid.center();
  std::vector<int> offsets;
  for (int k = -(half - 1); k <= half - 1; ++k) offsets.push_back(k);

  VectorXi idx = VectorXi::Zero(grid.p);
  const std::size_t per_axis = offsets.size();
  std::size_t count = 1;
  for (int a = 0; a < grid.p; ++a) count *= per_axis;
  points_.reserve(count);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    VectorXi k(grid.p);
    for (int a = grid.p - 1; a >= 0; --a) {
      k[a] = offsets[rem % per_axis];
      rem /= per_axis;
    }
    k += c;
    if (k.isZero()) continue;
    LambdaPoint pt;
    pt.k = k;
    pt.lambda = k.cast<double>() * grid.dlambda();
    std::size_t bin = 0;
    for (int a = 0; a < grid.p; ++a) {
      int rel = k[a] - c[a];
      const int wrapped = rel >= 0 ? rel : rel + grid.nz;
      bin = bin * grid.nz + static_cast<std::size_t>(wrapped);
    }
    pt.bin = bin;
    pt.weight = std::pow(pt.lambda.norm(), grid.d) * std::pow(grid.dlambda(), grid.p);
    points_.push_back(pt);
  }
}

long LambdaGrid::find(const VectorXi& k) const {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (points_[i].k == k) return static_cast<long>(i);
  return -1;
}

PhysicalState PhysicalState::zero(const GridSpec& grid) {
  grid.validate();
  return {grid, VectorXcd::Zero(grid.total())};
}

double l2_norm(const PhysicalState& f) {
  return f.values.norm() * std::sqrt(f.grid.cell_volume());
}

cd inner(const PhysicalState& f, const PhysicalState& g) {
  if (!(f.grid == g.grid)) throw DimensionError("inner: grids differ");
  return (g.values.dot(f.values)) * f.grid.cell_volume();
}

void save_state(const PhysicalState& f, const std::string& path_base) {
  // NPY v1 header for a flat complex128 array.
  std::string header = "{'descr': '<c16', 'fortran_order': False, 'shape': (" +
                       std::to_string(f.values.size()) + ",), }";
  const std::size_t base = 10 + header.size() + 1;
  header += std::string((64 - base % 64) % 64, ' ');
  header += '\n';
  std::ofstream npy(path_base + ".npy", std::ios::binary);
  if (!npy) throw NumericsError("save_state: cannot open " + path_base + ".npy");
  const unsigned char magic[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  npy.write(reinterpret_cast<const char*>(magic), 8);
  const std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
  npy.write(reinterpret_cast<const char*>(&hlen), 2);
  npy.write(header.data(), header.size());
  npy.write(reinterpret_cast<const char*>(f.values.data()),
            sizeof(cd) * f.values.size());

  std::ofstream side(path_base + ".json");
  side << f.grid.to_json() << "\n";
}

PhysicalState load_state(const std::string& path_base) {
  std::ifstream side(path_base + ".json");
  if (!side) throw NumericsError("load_state: missing sidecar");
  std::string text((std::istreambuf_iterator<char>(side)),
                   std::istreambuf_iterator<char>());
  PhysicalState f;
  f.grid = GridSpec::from_json(text);

  std::ifstream npy(path_base + ".npy", std::ios::binary);
  if (!npy) throw NumericsError("load_state: missing payload");
  char magic[8];
  npy.read(magic, 8);
  std::uint16_t hlen = 0;
  npy.read(reinterpret_cast<char*>(&hlen), 2);
  std::string header(hlen, ' ');
  npy.read(header.data(), hlen);
  f.values.resize(f.grid.total());
  npy.read(reinterpret_cast<char*>(f.values.data()), sizeof(cd) * f.values.size());
  if (!npy) throw NumericsError("load_state: truncated payload");
  return f;
}

FiberField FiberField::zero(const GridSpec& grid, const FramePtr& frame) {
  FiberField F{grid, frame, {}};
  const LambdaGrid lg(grid);
  F.ops.assign(lg.size(), MatrixXcd::Zero(frame->size(), frame->size()));
  return F;
}

double hs_norm(const FiberField& F) {
  const LambdaGrid lg(F.grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < lg.size(); ++i)
    acc += lg[i].weight * F.ops[i].squaredNorm();
  return std::sqrt(acc);
}

cd hs_inner(const FiberField& F, const FiberField& G) {
  if (!(F.grid == G.grid)) throw DimensionError("hs_inner: grids differ");
  const LambdaGrid lg(F.grid);
  cd acc = 0.0;
  for (std::size_t i = 0; i < lg.size(); ++i)
    acc += lg[i].weight * (G.ops[i].conjugate().cwiseProduct(F.ops[i])).sum();
  return acc;
}

std::string dump_fiber_operator(const FiberOperator& op) {
  nlohmann::json j;
  j["lambda"] = std::vector<double>(op.lambda.data(), op.lambda.data() + op.lambda.size());
  j["d"] = op.frame->d();
  j["A"] = op.frame->cutoff();
  const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      op.mat;
  j["data"] = base64_encode(reinterpret_cast<const unsigned char*>(rm.data()),
                            sizeof(cd) * rm.size());
  j["layout"] = "row-major";
  return j.dump();
}

FiberOperator load_fiber_operator(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FiberOperator op;
  const auto lv = j.at("lambda").get<std::vector<double>>();
  op.lambda = Eigen::Map<const VectorXd>(lv.data(), lv.size());
  op.frame = make_frame(j.at("d").get<int>(), j.at("A").get<int>());
  const auto raw = base64_decode(j.at("data").get<std::string>());
  const int N = op.frame->size();
  if (raw.size() != sizeof(cd) * static_cast<std::size_t>(N) * N)
    throw DimensionError("load_fiber_operator: payload size mismatch");
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(N, N);
  std::memcpy(rm.data(), raw.data(), raw.size());
  op.mat = rm;
  return op;
}

}  // namespace htsc
