#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/model/model.hpp"

namespace rb::model {

using nlohmann::json;
using nlohmann::ordered_json;
using num::Parameter;
using num::Tensor;

namespace {

constexpr const char* kFormatName = "risingballer.checkpoint";

template <class T>
void append_le(std::string& out, const std::vector<T>& values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * sizeof(T));
  std::memcpy(out.data() + start, values.data(), values.size() * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = start; i < out.size(); i += sizeof(T)) std::reverse(out.begin() + i, out.begin() + i + sizeof(T));
  }
}

template <class T>
std::vector<T> read_le(const std::string& bytes, std::size_t offset, std::size_t count) {
  std::vector<T> v(count);
  std::string chunk = bytes.substr(offset, count * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < chunk.size(); i += sizeof(T)) std::reverse(chunk.begin() + i, chunk.begin() + i + sizeof(T));
  }
  std::memcpy(v.data(), chunk.data(), chunk.size());
  return v;
}

template <class T>
std::vector<std::pair<std::string, const Tensor<T>*>> buffers(const Normalizers<T>& n) {
  return {{"norm.input_shift", &n.input_shift},
          {"norm.input_scale", &n.input_scale},
          {"norm.output_shift", &n.output_shift},
          {"norm.output_scale", &n.output_scale}};
}

}  // namespace

json read_checkpoint_manifest(const std::filesystem::path& dir) {
  const std::string text = read_file(dir / "manifest.json");
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!m.is_object() || m.value("format", "") != kFormatName) {
    throw IntegrityError("checkpoint manifest: not a " + std::string(kFormatName) + " file");
  }
  if (m.value("version", -1) != kCheckpointVersion) {
    throw ConfigError("checkpoint version " + m.value("version", json()).dump() + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  return m;
}

std::string checkpoint_precision(const std::filesystem::path& dir) {
  return read_checkpoint_manifest(dir).value("precision", "");
}

template <class T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& dir, const json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

  std::string blob;
  ordered_json arrays = json::array();
  auto add = [&](const std::string& name, const Tensor<T>& t, const char* kind) {
    ordered_json a;
    a["name"] = name;
    a["kind"] = kind;
    a["shape"] = t.shape();
    a["offset"] = blob.size();
    a["count"] = t.size();
    arrays.push_back(std::move(a));
    append_le(blob, t.values());
  };
  params.for_each([&](const Parameter<T>& p) { add(p.name, p.value, "parameter"); });
  for (const auto& [name, t] : buffers(params.norm)) add(name, *t, "buffer");

  ordered_json m;
  m["format"] = kFormatName;
  m["version"] = kCheckpointVersion;
  m["precision"] = precision_name<T>();
  m["byte_order"] = "little";
  m["config"] = config_to_json(params.config);
  m["parameter_count"] = params.parameter_count();
  m["total_bytes"] = blob.size();
  m["params_sha256"] = sha256_hex(blob);
  m["arrays"] = std::move(arrays);
  if (!extra.is_null()) m["extra"] = extra;

  write_file(dir / "params.bin", blob);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

template <class T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& dir) {
  save_checkpoint(params, dir, json());
}

template <class T>
ModelParams<T> load_checkpoint(const std::filesystem::path& dir) {
  const json m = read_checkpoint_manifest(dir);
  const std::string precision = m.value("precision", "");
  if (precision != precision_name<T>()) {
    throw ConfigError("checkpoint precision is " + precision + ", requested " + precision_name<T>());
  }
  const ModelConfig config = config_from_json(m.at("config"));
  const std::string blob = read_file(dir / "params.bin");
  const std::size_t total = m.at("total_bytes").get<std::size_t>();
  if (blob.size() != total) {
    throw IntegrityError("checkpoint params.bin holds " + std::to_string(blob.size()) + " bytes, manifest declares " +
                         std::to_string(total) + " (truncated or corrupt)");
  }
  if (m.contains("params_sha256") && m.at("params_sha256").get<std::string>() != sha256_hex(blob)) {
    throw IntegrityError("checkpoint params.bin does not match its recorded digest (corrupt)");
  }

  const json& arrays = m.at("arrays");
  std::size_t k = 0;
  auto next = [&](const std::string& name, const std::vector<std::size_t>& shape) {
    if (k >= arrays.size()) throw IntegrityError("checkpoint manifest lacks array " + name);
    const json& a = arrays[k++];
    if (a.at("name").get<std::string>() != name || a.at("shape").get<std::vector<std::size_t>>() != shape) {
      throw IntegrityError("checkpoint array " + a.at("name").get<std::string>() + " does not match expected " +
                           name + " " + num::shape_string(shape));
    }
    const std::size_t offset = a.at("offset").get<std::size_t>();
    const std::size_t count = a.at("count").get<std::size_t>();
    if (offset + count * sizeof(T) > blob.size()) throw IntegrityError("checkpoint array " + name + " out of bounds");
    return Tensor<T>(shape, read_le<T>(blob, offset, count));
  };

  ModelParams<T> p = init_model<T>(config, 0);
  p.for_each([&](Parameter<T>& param) { param = Parameter<T>(param.name, next(param.name, param.value.shape())); });
  Normalizers<T> norm = Normalizers<T>::identity(config);
  norm.input_shift = next("norm.input_shift", norm.input_shift.shape());
  norm.input_scale = next("norm.input_scale", norm.input_scale.shape());
  norm.output_shift = next("norm.output_shift", norm.output_shift.shape());
  norm.output_scale = next("norm.output_scale", norm.output_scale.shape());
  p.norm = std::move(norm);
  if (k != arrays.size()) throw IntegrityError("checkpoint manifest lists unexpected extra arrays");
  if (m.contains("parameter_count") && m.at("parameter_count").get<std::size_t>() != p.parameter_count()) {
    throw IntegrityError("checkpoint parameter count disagrees with its arrays");
  }
  return p;
}

template void save_checkpoint<float>(const ModelParams<float>&, const std::filesystem::path&, const json&);
template void save_checkpoint<double>(const ModelParams<double>&, const std::filesystem::path&, const json&);
template void save_checkpoint<float>(const ModelParams<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const ModelParams<double>&, const std::filesystem::path&);
template ModelParams<float> load_checkpoint<float>(const std::filesystem::path&);
template ModelParams<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace rb::model
