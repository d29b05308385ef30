#include "nmsp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "nmsp/errors.hpp"

namespace nmsp {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  void read_doubles(std::span<double> out) {
    need(out.size() * sizeof(double));
    std::memcpy(out.data(), data_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw InputError(origin_ + ": checkpoint truncated");
  }

  std::string data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Reader open_checkpoint(const std::filesystem::path& path, LoadedCheckpoint& header) {
  Reader r(read_file(path), path.string());
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw InputError(path.string() + ": not an NMSP checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InputError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  header.config = ModelConfig::parse(r.get_string());
  header.run_config = r.get_string();
  return r;
}

}  // namespace

std::string serialize_parameters(SpellerModel& model) {
  std::string out;
  const ParameterList params = model.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_string(out, p.name);
    const Shape& shape = p.tensor->shape();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(p.tensor->data().data()), p.tensor->size() * sizeof(double));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, SpellerModel& model, const std::string& run_config) {
  std::string bytes(kCheckpointMagic, 4);
  put<std::uint32_t>(bytes, kCheckpointVersion);
  put_string(bytes, model.config().serialize());
  put_string(bytes, run_config);
  bytes += serialize_parameters(model);

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

LoadedCheckpoint read_checkpoint_header(const std::filesystem::path& path) {
  LoadedCheckpoint header;
  open_checkpoint(path, header);
  return header;
}

SpellerModel load_checkpoint(const std::filesystem::path& path, std::string* run_config) {
  LoadedCheckpoint header;
  Reader r = open_checkpoint(path, header);
  SpellerModel model(header.config, 0);
  std::map<std::string, Tensor*> by_name;
  for (const auto& p : model.parameters()) by_name.emplace(p.name, p.tensor);

  const auto count = r.get<std::uint32_t>();
  if (count != by_name.size()) {
    throw InputError(path.string() + ": " + std::to_string(count) + " tensors stored, model has " +
                     std::to_string(by_name.size()));
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.get_string();
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw InputError(path.string() + ": unexpected tensor '" + name + "'");
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = r.get<std::uint64_t>();
    if (shape != it->second->shape()) {
      throw InputError(path.string() + ": tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                       shape_string(it->second->shape()));
    }
    r.read_doubles(it->second->data());
    by_name.erase(it);
  }
  if (!r.done()) throw InputError(path.string() + ": trailing bytes after tensors");
  if (run_config) *run_config = header.run_config;
  return model;
}

}  // namespace nmsp
