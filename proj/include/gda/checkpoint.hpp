#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gda/models.hpp"

namespace gda {

/// File layout: 8-byte little-endian manifest length, JSON manifest, then
/// raw little-endian tensor data at the offsets the manifest records.

namespace detail {

template <typename T>
constexpr const char* dtype_name() {
  if constexpr (sizeof(T) == 4)
    return "f32";
  else
    return "f64";
}

}  // namespace detail

inline nlohmann::json model_spec_to_json(const ModelSpec& s) {
  return {{"encoder", encoder_kind_name(s.encoder)},
          {"in_dim", s.in_dim},
          {"hidden_dim", s.hidden_dim},
          {"num_layers", s.num_layers},
          {"sign_hops", s.sign_hops},
          {"num_classes", s.num_classes},
          {"classifier_hidden", s.classifier_hidden},
          {"link_hidden", s.link_hidden}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.encoder = parse_encoder_kind(j.at("encoder").get<std::string>());
  s.in_dim = j.at("in_dim").get<int>();
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.num_layers = j.at("num_layers").get<int>();
  s.sign_hops = j.at("sign_hops").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  s.classifier_hidden = j.at("classifier_hidden").get<int>();
  s.link_hidden = j.at("link_hidden").get<int>();
  return s;
}

template <typename T>
void save_checkpoint(const ModelBundle<T>& bundle, const std::string& path) {
  const std::vector<Tensor<T>> params = bundle.parameters();
  const std::vector<std::string> names = bundle.parameter_names();
  if (params.size() != names.size()) throw std::logic_error("checkpoint: name/param count mismatch");

  nlohmann::json manifest;
  manifest["format"] = "gda-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = detail::dtype_name<T>();
  manifest["model"] = model_spec_to_json(bundle.spec);
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    tensors.push_back({{"name", names[p]},
                       {"rows", params[p].rows()},
                       {"cols", params[p].cols()},
                       {"offset", offset}});
    offset += params[p].size() * sizeof(T);
  }
  manifest["tensors"] = tensors;
  const std::string m = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::uint64_t mlen = m.size();
  std::uint8_t hdr[8];
  for (int i = 0; i < 8; ++i) hdr[i] = static_cast<std::uint8_t>((mlen >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(hdr), 8);
  out.write(m.data(), static_cast<std::streamsize>(m.size()));
  for (const auto& p : params)
    out.write(reinterpret_cast<const char*>(p.value().data()),
              static_cast<std::streamsize>(p.size() * sizeof(T)));
  if (!out) throw std::runtime_error("write failed for " + path);
}

template <typename T>
ModelBundle<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::uint8_t hdr[8];
  in.read(reinterpret_cast<char*>(hdr), 8);
  if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  std::uint64_t mlen = 0;
  for (int i = 0; i < 8; ++i) mlen |= static_cast<std::uint64_t>(hdr[i]) << (8 * i);
  std::string m(mlen, '\0');
  in.read(m.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  nlohmann::json manifest = nlohmann::json::parse(m);
  if (manifest.at("format").get<std::string>() != "gda-checkpoint")
    throw std::runtime_error("not a checkpoint file: " + path);
  const std::string dtype = manifest.at("dtype").get<std::string>();
  if (dtype != "f32" && dtype != "f64")
    throw std::runtime_error("unknown checkpoint dtype: " + dtype);
  const std::size_t elem = dtype == "f32" ? 4 : 8;

  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::mt19937 rng(0);
  ModelBundle<T> bundle(model_spec_from_json(manifest.at("model")), rng);
  std::vector<Tensor<T>> params = bundle.parameters();
  const std::vector<std::string> names = bundle.parameter_names();

  for (const auto& tj : manifest.at("tensors")) {
    const std::string name = tj.at("name").get<std::string>();
    std::size_t p = 0;
    while (p < names.size() && names[p] != name) ++p;
    if (p == names.size()) throw std::runtime_error("checkpoint tensor unknown to model: " + name);
    if (tj.at("rows").get<std::size_t>() != params[p].rows() ||
        tj.at("cols").get<std::size_t>() != params[p].cols())
      throw std::runtime_error("checkpoint tensor shape mismatch: " + name);
    const std::uint64_t off = tj.at("offset").get<std::uint64_t>();
    const std::size_t bytes = params[p].size() * elem;
    if (off + bytes > data.size()) throw std::runtime_error("checkpoint data out of bounds: " + name);
    if (dtype == "f32") {
      std::vector<float> src(params[p].size());
      std::memcpy(src.data(), data.data() + off, bytes);
      for (std::size_t i = 0; i < src.size(); ++i) params[p].value()[i] = static_cast<T>(src[i]);
    } else {
      std::vector<double> src(params[p].size());
      std::memcpy(src.data(), data.data() + off, bytes);
      for (std::size_t i = 0; i < src.size(); ++i) params[p].value()[i] = static_cast<T>(src[i]);
    }
  }
  return bundle;
}

}  // namespace gda
