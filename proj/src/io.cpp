#include "hsi/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <regex>
#include <set>

namespace hsi {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void magic(const char (&m)[5]) { bytes(m, 4); }
  template <typename U>
  void uint(U v) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void floats(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(v.data(), v.size() * 4);
    } else {
      for (float f : v) uint(std::bit_cast<std::uint32_t>(f));
    }
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::string origin) : b_(b), origin_(std::move(origin)) {}

  std::size_t remaining() const { return b_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (n > remaining())
      throw FormatError(origin_ + ": truncated " + what + " (need " + std::to_string(n) +
                        " bytes, have " + std::to_string(remaining()) + ")");
  }
  bool match_magic(const char* m) const {
    return remaining() >= 4 && std::memcmp(b_.data() + pos_, m, 4) == 0;
  }
  void expect_magic(const char* m) {
    if (!match_magic(m)) throw FormatError(origin_ + ": bad magic, expected " + std::string(m, 4));
    pos_ += 4;
  }
  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  void floats(std::span<float> out, const char* what) {
    need(out.size() * 4, what);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), b_.data() + pos_, out.size() * 4);
      pos_ += out.size() * 4;
    } else {
      for (float& f : out) f = std::bit_cast<float>(uint<std::uint32_t>(what));
    }
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { pos_ += n; }
  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(origin_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }
  void expect_end_after(std::size_t n) const {
    if (remaining() != n)
      throw FormatError(origin_ + ": payload is " + std::to_string(remaining()) + " bytes, header implies " +
                        std::to_string(n));
  }
  const std::uint8_t* here() const { return b_.data() + pos_; }
  const std::string& origin() const { return origin_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

// Guarded product so corrupted headers cannot overflow into a small allocation.
std::size_t checked_count(std::initializer_list<std::uint64_t> dims, std::size_t elem, const std::string& origin) {
  std::uint64_t n = elem;
  for (auto d : dims) {
    if (d == 0) throw FormatError(origin + ": zero extent in header");
    if (n > std::numeric_limits<std::uint64_t>::max() / d) throw FormatError(origin + ": header extents overflow");
    n *= d;
  }
  return static_cast<std::size_t>(n);
}

// ---- NPY ------------------------------------------------------------------

struct NpyArray {
  std::string descr;
  std::vector<std::size_t> shape;
  std::size_t data_offset = 0;
};

NpyArray parse_npy_header(Reader& r) {
  r.need(10, "NPY preamble");
  const std::uint8_t* h = r.here();
  if (h[0] != 0x93 || std::memcmp(h + 1, "NUMPY", 5) != 0) throw FormatError(r.origin() + ": bad NPY magic");
  const int major = h[6];
  r.skip(8);
  std::size_t hlen;
  if (major == 1) hlen = r.uint<std::uint16_t>("NPY header length");
  else if (major == 2 || major == 3) hlen = r.uint<std::uint32_t>("NPY header length");
  else throw FormatError(r.origin() + ": unsupported NPY version " + std::to_string(major));
  const std::string header = r.str(hlen, "NPY header");

  NpyArray arr;
  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  if (!std::regex_search(header, m, descr_re)) throw FormatError(r.origin() + ": NPY header lacks descr");
  arr.descr = m[1];
  if (!std::regex_search(header, m, order_re)) throw FormatError(r.origin() + ": NPY header lacks fortran_order");
  if (m[1] == "True") throw FormatError(r.origin() + ": Fortran-ordered NPY arrays are not supported");
  if (!std::regex_search(header, m, shape_re)) throw FormatError(r.origin() + ": NPY header lacks shape");
  const std::string dims = m[1];
  static const std::regex num_re(R"(\d+)");
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), num_re); it != std::sregex_iterator(); ++it)
    arr.shape.push_back(static_cast<std::size_t>(std::stoull(it->str())));
  arr.data_offset = r.pos();
  return arr;
}

// Reads every element of an NPY payload as double.
std::vector<double> npy_values(Reader& r, const NpyArray& arr) {
  const std::string& d = arr.descr;
  if (d.size() < 3 || (d[0] != '<' && d[0] != '|'))
    throw FormatError(r.origin() + ": only little-endian NPY dtypes are supported, got '" + d + "'");
  const char kind = d[1];
  const std::size_t width = static_cast<std::size_t>(std::stoul(d.substr(2)));
  std::size_t n = 1;
  for (auto e : arr.shape) n *= e;
  const std::size_t total = checked_count({n}, width, r.origin());
  r.need(total, "NPY payload");
  r.expect_end_after(total);
  std::vector<double> out(n);
  const std::uint8_t* p = r.here();
  auto load = [&](auto tag, std::size_t i) {
    using V = decltype(tag);
    V v;
    std::memcpy(&v, p + i * sizeof(V), sizeof(V));
    return static_cast<double>(v);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == 'f' && width == 4) out[i] = load(float{}, i);
    else if (kind == 'f' && width == 8) out[i] = load(double{}, i);
    else if (kind == 'i' && width == 1) out[i] = load(std::int8_t{}, i);
    else if (kind == 'i' && width == 2) out[i] = load(std::int16_t{}, i);
    else if (kind == 'i' && width == 4) out[i] = load(std::int32_t{}, i);
    else if (kind == 'i' && width == 8) out[i] = load(std::int64_t{}, i);
    else if (kind == 'u' && width == 1) out[i] = load(std::uint8_t{}, i);
    else if (kind == 'u' && width == 2) out[i] = load(std::uint16_t{}, i);
    else if (kind == 'u' && width == 4) out[i] = load(std::uint32_t{}, i);
    else if (kind == 'u' && width == 8) out[i] = load(std::uint64_t{}, i);
    else throw FormatError(r.origin() + ": unsupported NPY dtype '" + d + "'");
  }
  return out;
}

bool is_npy(const std::vector<std::uint8_t>& b) {
  return b.size() >= 6 && b[0] == 0x93 && std::memcmp(b.data() + 1, "NUMPY", 5) == 0;
}

HyperCube cube_from_npy(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  const NpyArray arr = parse_npy_header(r);
  if (arr.shape.size() != 3) throw FormatError(origin + ": cube NPY must be rank 3");
  checked_count({arr.shape[0], arr.shape[1], arr.shape[2]}, 1, origin);
  const auto vals = npy_values(r, arr);
  HyperCube cube(arr.shape[0], arr.shape[1], arr.shape[2]);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const float f = static_cast<float>(vals[i]);
    if (!std::isfinite(f)) throw FormatError(origin + ": non-finite cube value at element " + std::to_string(i));
    cube.values[i] = f;
  }
  return cube;
}

GroundTruth gt_from_npy(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  const NpyArray arr = parse_npy_header(r);
  if (arr.shape.size() != 2) throw FormatError(origin + ": ground-truth NPY must be rank 2");
  checked_count({arr.shape[0], arr.shape[1]}, 1, origin);
  const auto vals = npy_values(r, arr);
  GroundTruth gt(arr.shape[0], arr.shape[1]);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double v = vals[i];
    if (!(v >= 0.0 && v <= 65535.0 && v == std::floor(v)))
      throw FormatError(origin + ": ground-truth label " + std::to_string(v) + " is not a 16-bit class id");
    gt.labels[i] = static_cast<std::uint16_t>(v);
  }
  return gt;
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  in.seekg(0, std::ios::end);
  const auto n = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> b(n);
  if (n && !in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(n)))
    throw IoError("failed reading " + path.string());
  return b;
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// ---- cubes ----------------------------------------------------------------

std::vector<std::uint8_t> encode_cube(const HyperCube& cube) {
  Writer w;
  w.magic("HSC1");
  w.uint<std::uint64_t>(cube.width);
  w.uint<std::uint64_t>(cube.height);
  w.uint<std::uint64_t>(cube.bands);
  w.floats(cube.values.data());
  return w.take();
}

HyperCube decode_cube(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (is_npy(bytes)) return cube_from_npy(bytes, origin);
  Reader r(bytes, origin);
  r.expect_magic("HSC1");
  const auto p = r.uint<std::uint64_t>("cube width");
  const auto q = r.uint<std::uint64_t>("cube height");
  const auto b = r.uint<std::uint64_t>("cube bands");
  const std::size_t payload = checked_count({p, q, b}, 4, origin);
  r.expect_end_after(payload);
  HyperCube cube(p, q, b);
  r.floats(cube.values.data(), "cube payload");
  for (std::size_t i = 0; i < cube.values.size(); ++i)
    if (!std::isfinite(cube.values[i]))
      throw FormatError(origin + ": non-finite cube value at element " + std::to_string(i));
  return cube;
}

HyperCube read_cube(const fs::path& path) { return decode_cube(read_file(path), path.string()); }

void write_cube(const HyperCube& cube, const fs::path& path) { write_file(path, encode_cube(cube)); }

// ---- ground truth -----------------------------------------------------------

std::size_t GroundTruth::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
}

std::uint16_t GroundTruth::max_label() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

void write_ground_truth(const GroundTruth& gt, const fs::path& path) {
  Writer w;
  w.magic("HSG1");
  w.uint<std::uint64_t>(gt.width);
  w.uint<std::uint64_t>(gt.height);
  for (auto v : gt.labels) w.uint<std::uint16_t>(v);
  write_file(path, w.take());
}

GroundTruth read_ground_truth(const fs::path& path) {
  const auto bytes = read_file(path);
  const std::string origin = path.string();
  if (is_npy(bytes)) return gt_from_npy(bytes, origin);
  Reader r(bytes, origin);
  r.expect_magic("HSG1");
  const auto p = r.uint<std::uint64_t>("ground-truth width");
  const auto q = r.uint<std::uint64_t>("ground-truth height");
  r.expect_end_after(checked_count({p, q}, 2, origin));
  GroundTruth gt(p, q);
  for (auto& v : gt.labels) v = r.uint<std::uint16_t>("labels");
  return gt;
}

// ---- checkpoints ------------------------------------------------------------

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries)
    if (n == name) return &t;
  return nullptr;
}

std::size_t Checkpoint::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.second.size();
  return n;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::set<std::string> seen;
  Writer w;
  w.magic("HSTL");
  w.uint<std::uint32_t>(Checkpoint::kVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [name, t] : ckpt.entries) {
    if (!seen.insert(name).second) throw FormatError("duplicate checkpoint entry '" + name + "'");
    if (name.size() > 0xFFFF) throw FormatError("checkpoint entry name too long");
    if (t.rank() > 0xFF) throw FormatError("checkpoint tensor rank too large");
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (auto e : t.shape()) w.uint<std::uint64_t>(e);
    w.floats(t.data());
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  r.expect_magic("HSTL");
  const auto version = r.uint<std::uint32_t>("version");
  if (version != Checkpoint::kVersion)
    throw FormatError(origin + ": checkpoint version " + std::to_string(version) + " is not supported");
  const auto count = r.uint<std::uint32_t>("entry count");
  Checkpoint ckpt;
  std::set<std::string> seen;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = r.uint<std::uint16_t>("name length");
    std::string name = r.str(len, "entry name");
    if (!seen.insert(name).second) throw FormatError(origin + ": duplicate checkpoint entry '" + name + "'");
    const auto rank = r.uint<std::uint8_t>("rank");
    if (rank == 0) throw FormatError(origin + ": entry '" + name + "' has rank 0");
    Shape shape(rank);
    std::uint64_t n = 4;
    for (auto& s : shape) {
      s = r.uint<std::uint64_t>("extent");
      if (s == 0 || n > r.remaining() / s)
        throw FormatError(origin + ": entry '" + name + "' has corrupted extents");
      n *= s;
    }
    r.need(n, "tensor payload");
    Tensor<float> t(shape);
    r.floats(t.data(), "tensor payload");
    ckpt.add(std::move(name), std::move(t));
  }
  r.expect_end();
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) { write_file(path, encode_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const fs::path& path) { return decode_checkpoint(read_file(path), path.string()); }

// ---- patch archives ---------------------------------------------------------

void write_patch_archive(const PatchSet& ps, const fs::path& path) {
  Writer w;
  w.magic("HSP1");
  w.uint<std::uint64_t>(ps.count());
  w.uint<std::uint64_t>(ps.size);
  w.uint<std::uint64_t>(ps.bands);
  w.floats(ps.patches.data());
  for (int l : ps.labels) w.uint<std::uint16_t>(ps.class_values.at(static_cast<std::size_t>(l)));
  for (const auto& [a, b] : ps.coords) {
    w.uint<std::uint32_t>(a);
    w.uint<std::uint32_t>(b);
  }
  write_file(path, w.take());
}

PatchSet read_patch_archive(const fs::path& path) {
  const auto bytes = read_file(path);
  const std::string origin = path.string();
  Reader r(bytes, origin);
  r.expect_magic("HSP1");
  const auto n = r.uint<std::uint64_t>("patch count");
  const auto s = r.uint<std::uint64_t>("patch size");
  const auto b = r.uint<std::uint64_t>("patch bands");
  const std::size_t payload = checked_count({n, s, s, b}, 4, origin);
  r.expect_end_after(payload + checked_count({n}, 2 + 8, origin));

  PatchSet ps;
  ps.size = s;
  ps.bands = b;
  ps.patches = Tensor<float>({n, s, s, b});
  r.floats(ps.patches.data(), "patches");
  std::vector<std::uint16_t> ids(n);
  for (auto& v : ids) {
    v = r.uint<std::uint16_t>("labels");
    if (v == 0) throw FormatError(origin + ": archive contains background label 0");
  }
  ps.coords.resize(n);
  for (auto& [a, c] : ps.coords) {
    a = r.uint<std::uint32_t>("coords");
    c = r.uint<std::uint32_t>("coords");
  }
  ps.class_values = ids;
  std::sort(ps.class_values.begin(), ps.class_values.end());
  ps.class_values.erase(std::unique(ps.class_values.begin(), ps.class_values.end()), ps.class_values.end());
  ps.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    ps.labels[i] = static_cast<int>(std::lower_bound(ps.class_values.begin(), ps.class_values.end(), ids[i]) -
                                    ps.class_values.begin());
  return ps;
}

// ---- label maps -------------------------------------------------------------

Rgb palette_color(std::uint16_t label) {
  if (label == 0) return {0, 0, 0};
  const double h = 360.0 * static_cast<double>((label - 1) % 16) / 16.0;
  const double hp = h / 60.0;
  const double x = 1.0 - std::abs(std::fmod(hp, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = 1; g = x; break;
    case 1: r = x; g = 1; break;
    case 2: g = 1; b = x; break;
    case 3: g = x; b = 1; break;
    case 4: r = x; b = 1; break;
    default: r = 1; b = x; break;
  }
  auto to8 = [](double c) { return static_cast<std::uint8_t>(std::lround(c * 255.0)); };
  return {to8(r), to8(g), to8(b)};
}

std::vector<std::uint8_t> encode_label_map(const GroundTruth& labels) {
  const std::string header = "P6\n" + std::to_string(labels.width) + " " + std::to_string(labels.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + labels.width * labels.height * 3);
  for (std::size_t y = 0; y < labels.height; ++y)
    for (std::size_t x = 0; x < labels.width; ++x) {
      const Rgb c = palette_color(labels.at(x, y));
      out.insert(out.end(), c.begin(), c.end());
    }
  return out;
}

void render_label_map(const GroundTruth& labels, const fs::path& path) {
  write_file(path, encode_label_map(labels));
}

}  // namespace hsi
