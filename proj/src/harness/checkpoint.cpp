#include "memkit/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "memkit/errors.hpp"

namespace memkit::harness {

using nlohmann::json;

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(in[at + static_cast<std::size_t>(k)]);
  return v;
}

void put_doubles(std::string& out, const std::vector<double>& xs) {
  for (double x : xs) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

struct Reader {
  const std::string& in;
  std::size_t at;
  std::vector<double> doubles(std::size_t n) {
    if (n > (in.size() - at) / 8) throw IoError("checkpoint: payload truncated");
    std::vector<double> xs(n);
    for (auto& x : xs) {
      x = std::bit_cast<double>(get_u64(in, at));
      at += 8;
    }
    return xs;
  }
};

}  // namespace

Checkpoint capture(const ad::ParameterSet& params, optim::Optimizer* opt, std::size_t step,
                   const std::string& config_hash) {
  Checkpoint ck;
  ck.config_hash = config_hash;
  ck.step = step;
  for (const auto& p : params.items())
    ck.params.push_back({p.name, p.tensor.rows(), p.tensor.cols(), p.tensor.value()});
  if (opt) ck.optimizer = OptimizerState{optim::to_string(opt->spec().kind), opt->steps(), opt->slots_a(), opt->slots_b()};
  return ck;
}

void restore(const Checkpoint& ck, ad::ParameterSet& params, optim::Optimizer* opt) {
  const auto& items = params.items();
  if (items.size() != ck.params.size()) throw VersionError("checkpoint: parameter count differs from the model");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& s = ck.params[i];
    if (s.name != items[i].name || s.rows != items[i].tensor.rows() || s.cols != items[i].tensor.cols())
      throw VersionError("checkpoint: parameter '" + s.name + "' does not match the model");
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    ad::Tensor t = items[i].tensor;
    t.mutable_value() = ck.params[i].values;
  }
  if (!opt) return;
  if (!ck.optimizer) throw VersionError("checkpoint: no optimizer state stored");
  if (ck.optimizer->kind != optim::to_string(opt->spec().kind))
    throw VersionError("checkpoint: optimizer kind " + ck.optimizer->kind + " differs from the run");
  opt->slots_a() = ck.optimizer->slots_a;
  opt->slots_b() = ck.optimizer->slots_b;
  opt->set_steps(ck.optimizer->steps);
}

std::string serialize(const Checkpoint& ck) {
  json header;
  header["version"] = kCheckpointVersion;
  header["config_hash"] = ck.config_hash;
  header["step"] = ck.step;
  json tensors = json::array();
  for (const auto& p : ck.params) {
    if (p.values.size() != p.rows * p.cols) throw ShapeError("checkpoint: '" + p.name + "' has the wrong size");
    tensors.push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}});
  }
  header["tensors"] = tensors;
  if (ck.optimizer) {
    json a = json::array(), b = json::array();
    for (const auto& s : ck.optimizer->slots_a) a.push_back(s.size());
    for (const auto& s : ck.optimizer->slots_b) b.push_back(s.size());
    header["optimizer"] = {{"kind", ck.optimizer->kind}, {"steps", ck.optimizer->steps}, {"slots_a", a}, {"slots_b", b}};
  } else {
    header["optimizer"] = nullptr;
  }
  const std::string h = header.dump();
  std::string out = std::string(kCheckpointMagic) + "\n";
  put_u64(out, h.size());
  out += h;
  for (const auto& p : ck.params) put_doubles(out, p.values);
  if (ck.optimizer) {
    for (const auto& s : ck.optimizer->slots_a) put_doubles(out, s);
    for (const auto& s : ck.optimizer->slots_b) put_doubles(out, s);
  }
  return out;
}

Checkpoint deserialize(const std::string& bytes) {
  const std::string magic = std::string(kCheckpointMagic) + "\n";
  if (bytes.compare(0, magic.size(), magic) != 0) throw IoError("checkpoint: bad magic");
  if (bytes.size() < magic.size() + 8) throw IoError("checkpoint: truncated header");
  const std::uint64_t hlen = get_u64(bytes, magic.size());
  const std::size_t hstart = magic.size() + 8;
  if (hlen > bytes.size() - hstart) throw IoError("checkpoint: truncated header");
  Checkpoint ck;
  Reader r{bytes, hstart + hlen};
  try {
    const json header = json::parse(bytes.substr(hstart, hlen));
    if (header.at("version").get<int>() != kCheckpointVersion)
      throw VersionError("checkpoint: format version " + header.at("version").dump() + " is not supported");
    ck.config_hash = header.at("config_hash").get<std::string>();
    ck.step = header.at("step").get<std::size_t>();
    for (const auto& t : header.at("tensors")) {
      StoredArray a{t.at("name").get<std::string>(), t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(), {}};
      a.values = r.doubles(a.rows * a.cols);
      ck.params.push_back(std::move(a));
    }
    if (!header.at("optimizer").is_null()) {
      const json& o = header.at("optimizer");
      OptimizerState st{o.at("kind").get<std::string>(), o.at("steps").get<std::size_t>(), {}, {}};
      for (const auto& n : o.at("slots_a")) st.slots_a.push_back(r.doubles(n.get<std::size_t>()));
      for (const auto& n : o.at("slots_b")) st.slots_b.push_back(r.doubles(n.get<std::size_t>()));
      ck.optimizer = std::move(st);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: corrupt header: ") + e.what());
  }
  if (r.at != bytes.size()) throw IoError("checkpoint: trailing bytes after payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const std::string bytes = serialize(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Checkpoint ck = deserialize(buf.str());
  if (expected_hash && ck.config_hash != *expected_hash)
    throw VersionError("checkpoint config hash " + ck.config_hash + " does not match " + *expected_hash);
  return ck;
}

}  // namespace memkit::harness
