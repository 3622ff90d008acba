#include "chilasso/gdict.hpp"

#include "chilasso/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace chl {
namespace {

constexpr std::string_view kMagic = "GDICT1";

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw_format("GDICT1: truncated file");
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_gdict(const GroupedDictionary& dict) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  const auto m = static_cast<std::uint64_t>(dict.rows());
  const auto p = static_cast<std::uint64_t>(dict.cols());
  put_u64(out, m);
  put_u64(out, p);
  put_u64(out, static_cast<std::uint64_t>(dict.group_count()));
  for (Index s : dict.groups().sizes()) put_u64(out, static_cast<std::uint64_t>(s));
  for (const auto& label : dict.labels()) {
    put_u32(out, static_cast<std::uint32_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.reserve(out.size() + m * p * 8);
  const double* data = dict.atoms().data();  // Eigen default storage is column major
  for (std::uint64_t i = 0; i < m * p; ++i) put_u64(out, std::bit_cast<std::uint64_t>(data[i]));
  return out;
}

GroupedDictionary decode_gdict(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw_format("GDICT1: bad magic");
  }
  std::vector<std::uint8_t> body(bytes.begin() + static_cast<std::ptrdiff_t>(kMagic.size()),
                                 bytes.end());
  Reader in(body);
  const std::uint64_t m = in.u64();
  const std::uint64_t p = in.u64();
  const std::uint64_t groups = in.u64();
  if (m == 0 || p == 0 || groups == 0 || groups > p)
    throw_format("GDICT1: invalid header dimensions");
  if (m > (1ull << 32) || p > (1ull << 32)) throw_format("GDICT1: implausible dimensions");

  std::vector<Index> sizes;
  std::uint64_t total = 0;
  for (std::uint64_t g = 0; g < groups; ++g) {
    const std::uint64_t s = in.u64();
    if (s == 0) throw_format("GDICT1: empty group");
    total += s;
    sizes.push_back(static_cast<Index>(s));
  }
  if (total != p) throw_format("GDICT1: group sizes do not sum to p");

  std::vector<std::string> labels;
  for (std::uint64_t g = 0; g < groups; ++g) labels.push_back(in.str(in.u32()));

  in.need(m * p * 8);
  Eigen::MatrixXd atoms(static_cast<Index>(m), static_cast<Index>(p));
  double* data = atoms.data();
  for (std::uint64_t i = 0; i < m * p; ++i) data[i] = std::bit_cast<double>(in.u64());
  if (!in.at_end()) throw_format("GDICT1: trailing bytes");

  return GroupedDictionary(std::move(atoms), GroupPartition::from_sizes(sizes),
                           std::move(labels));
}

void save_gdict(const GroupedDictionary& dict, const std::filesystem::path& path) {
  const auto bytes = encode_gdict(dict);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw_io("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw_io("write failed: " + path.string());
}

GroupedDictionary load_gdict(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_gdict(bytes);
}

}  // namespace chl
