#include "rssiloc/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "rssiloc/errors.hpp"

namespace rssiloc::nn {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw ParseError(std::string("checkpoint: truncated ") + what);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  const uint32_t len = read_pod<uint32_t>(is, what);
  if (len > (1u << 20))
    throw ParseError(std::string("checkpoint: implausible ") + what);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw ParseError(std::string("checkpoint: truncated ") + what);
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file,
                     const CheckpointHeader& header,
                     const std::vector<Param*>& params) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write " + file.string());
  os.write(kMagic, sizeof kMagic);
  write_pod<uint32_t>(os, kVersion);
  write_string(os, header.arch);
  write_pod<uint32_t>(os, header.window);
  write_pod<uint32_t>(os, header.nodes);
  write_pod<uint32_t>(os, header.n_bins);
  write_pod<uint32_t>(os, static_cast<uint32_t>(header.lstm_units.size()));
  for (uint32_t u : header.lstm_units) write_pod<uint32_t>(os, u);
  write_pod<uint64_t>(os, params.size());
  for (const Param* p : params) {
    write_string(os, p->name);
    write_pod<uint32_t>(os, static_cast<uint32_t>(p->value.rank()));
    for (size_t d : p->value.shape()) write_pod<uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed for " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + file.string());
  char magic[4];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ParseError("checkpoint: bad magic in " + file.string());
  const uint32_t version = read_pod<uint32_t>(is, "version");
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported version " +
                     std::to_string(version));
  Checkpoint ck;
  ck.header.arch = read_string(is, "arch");
  ck.header.window = read_pod<uint32_t>(is, "window");
  ck.header.nodes = read_pod<uint32_t>(is, "nodes");
  ck.header.n_bins = read_pod<uint32_t>(is, "n_bins");
  const uint32_t n_units = read_pod<uint32_t>(is, "lstm unit count");
  for (uint32_t i = 0; i < n_units; ++i)
    ck.header.lstm_units.push_back(read_pod<uint32_t>(is, "lstm units"));
  const uint64_t count = read_pod<uint64_t>(is, "param count");
  for (uint64_t p = 0; p < count; ++p) {
    NamedTensor nt;
    nt.name = read_string(is, "param name");
    const uint32_t rank = read_pod<uint32_t>(is, "rank");
    std::vector<size_t> shape;
    for (uint32_t d = 0; d < rank; ++d)
      shape.push_back(static_cast<size_t>(read_pod<uint64_t>(is, "dim")));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw ParseError("checkpoint: truncated values for " + nt.name);
    nt.value = std::move(t);
    ck.tensors.push_back(std::move(nt));
  }
  return ck;
}

}  // namespace rssiloc::nn
