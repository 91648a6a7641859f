#include "sparsefilter/dataset_io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sparsefilter/errors.h"

namespace sparsefilter {
namespace {

constexpr std::array<char, 4> kMagic = {'S', 'P', 'F', 'D'};

template <typename T>
void put(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw IoError("truncated dataset file: " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string format_double(double x) {
  std::array<char, 32> buf;
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size())
    throw IoError("bad number '" + s + "' in " + path.string());
  return x;
}

Vector parse_vector(const std::string& s, int d, const std::filesystem::path& path) {
  Vector v(d);
  std::stringstream in(s);
  std::string item;
  int i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= d) throw IoError("vector longer than d in " + path.string());
    v[i++] = parse_double(item, path);
  }
  if (i != d) throw IoError("vector shorter than d in " + path.string());
  return v;
}

const std::string& require(const std::map<std::string, std::string>& meta, const std::string& key,
                           const std::filesystem::path& path) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw IoError("sidecar " + path.string() + " lacks key '" + key + "'");
  return it->second;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta");
}

void write_dataset(const std::filesystem::path& path, const CorruptedDataset& data,
                   const std::map<std::string, std::string>& extra) {
  const auto n = static_cast<std::uint64_t>(data.samples.rows());
  const auto d = static_cast<std::uint64_t>(data.samples.cols());
  if (data.inlier_mask.size() != n) throw InputError("write_dataset: mask length differs from N");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kDatasetFormatVersion);
  put<std::uint64_t>(out, d);
  put<std::uint64_t>(out, n);
  put<double>(out, data.eps);
  put<std::uint8_t>(out, std::holds_alternative<SpikedCovModel>(data.model) ? 1 : 0);
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i)
    for (Eigen::Index j = 0; j < data.samples.cols(); ++j) put<double>(out, data.samples(i, j));
  std::vector<unsigned char> packed((n + 7) / 8, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (data.inlier_mask[i]) packed[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (!out) throw IoError("write failed: " + path.string());

  const auto meta_path = sidecar_path(path);
  std::ofstream meta(meta_path, std::ios::trunc);
  if (!meta) throw IoError("cannot open for writing: " + meta_path.string());
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        meta << "d = " << m.d << "\nk = " << m.k << "\n";
        if constexpr (std::is_same_v<M, SparseMeanModel>) {
          meta << "model = sparse_mean\nmu = " << format_vector(m.mu) << "\n";
        } else {
          meta << "model = spiked_cov\nrho = " << format_double(m.rho) << "\nv = " << format_vector(m.v) << "\n";
        }
      },
      data.model);
  meta << "eps = " << format_double(data.eps) << "\n";
  for (const auto& [key, value] : extra) meta << key << " = " << value << "\n";
  if (!meta) throw IoError("write failed: " + meta_path.string());
}

std::map<std::string, std::string> read_sidecar(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  std::ifstream in(meta_path);
  if (!in) throw IoError("cannot open sidecar: " + meta_path.string());
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return meta;
}

CorruptedDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw IoError("not a dataset file (bad magic): " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kDatasetFormatVersion)
    throw IoError("unsupported dataset version " + std::to_string(version) + ": " + path.string());
  const auto d = get<std::uint64_t>(in, path);
  const auto n = get<std::uint64_t>(in, path);
  const auto eps = get<double>(in, path);
  const auto kind = get<std::uint8_t>(in, path);
  if (kind > 1) throw IoError("unknown model kind in " + path.string());
  if (d == 0 || d > (1u << 24) || n > (1ull << 36)) throw IoError("implausible header in " + path.string());

  CorruptedDataset data;
  data.eps = eps;
  data.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i)
    for (Eigen::Index j = 0; j < data.samples.cols(); ++j) data.samples(i, j) = get<double>(in, path);
  std::vector<unsigned char> packed((n + 7) / 8);
  if (!in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size())))
    throw IoError("truncated mask in " + path.string());
  data.inlier_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.inlier_mask[i] = (packed[i / 8] >> (i % 8)) & 1u;

  const auto meta = read_sidecar(path);
  const int md = static_cast<int>(parse_double(require(meta, "d", path), path));
  const int mk = static_cast<int>(parse_double(require(meta, "k", path), path));
  if (md != static_cast<int>(d)) throw IoError("sidecar dimension disagrees with " + path.string());
  const std::string& model = require(meta, "model", path);
  if ((model == "spiked_cov") != (kind == 1)) throw IoError("sidecar model kind disagrees with " + path.string());
  if (kind == 0) {
    data.model = SparseMeanModel{md, mk, parse_vector(require(meta, "mu", path), md, path)};
  } else {
    data.model = SpikedCovModel{md, mk, parse_double(require(meta, "rho", path), path),
                                parse_vector(require(meta, "v", path), md, path)};
  }
  return data;
}

}  // namespace sparsefilter
