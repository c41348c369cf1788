#include "dcitl/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace dcitl::nn {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'I', 'T', 'L', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return value;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  nlohmann::json header = {{"format", "dcitl-checkpoint"},
                           {"version", kVersion},
                           {"seed", seed},
                           {"meta", meta},
                           {"models", nlohmann::json::object()},
                           {"objects", nlohmann::json::object()}};
  std::vector<const Tensor*> blobs;
  std::size_t offset = 0;
  for (const auto& [name, stack] : models) {
    nlohmann::json params = nlohmann::json::array();
    for (const Parameter* p : stack.parameters()) {
      params.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
      offset += p->value.size();
      blobs.push_back(&p->value);
    }
    header["models"][name] = {{"layers", stack.descriptor()}, {"parameters", params}};
  }
  for (const auto& [name, obj] : objects) header["objects"][name] = obj;
  header["value_count"] = offset;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Tensor* t : blobs) {
    out.write(reinterpret_cast<const char*>(t->data().data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("'" + path.string() + "' is not a dcitl checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("checkpoint header truncated");
  const nlohmann::json header = nlohmann::json::parse(text);

  const std::size_t count = header.at("value_count").get<std::size_t>();
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint payload truncated");

  Checkpoint ckpt;
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  ckpt.meta = header.at("meta");
  for (const auto& [name, entry] : header.at("models").items()) {
    LayerStack stack = LayerStack::from_descriptor(entry.at("layers"));
    ParameterSet params = stack.parameters();
    const auto& described = entry.at("parameters");
    if (described.size() != params.size()) {
      throw std::runtime_error("checkpoint model '" + name + "' parameter count mismatch");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto shape = described[p].at("shape").get<std::vector<std::size_t>>();
      const std::size_t off = described[p].at("offset").get<std::size_t>();
      if (shape != params[p].value.shape() || off + params[p].value.size() > count) {
        throw std::runtime_error("checkpoint model '" + name + "' parameter shape mismatch");
      }
      std::memcpy(params[p].value.data().data(), values.data() + off,
                  params[p].value.size() * sizeof(double));
    }
    ckpt.models.emplace(name, std::move(stack));
  }
  for (const auto& [name, obj] : header.at("objects").items()) ckpt.objects.emplace(name, obj);
  return ckpt;
}

}  // namespace dcitl::nn
