#include "pshield/model_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "pshield/text.hpp"

namespace pshield {
namespace {

using json = nlohmann::ordered_json;

// 3072 doubles = 24576 bytes, a multiple of 3, so chunks concatenate into
// one unpadded base64 stream.
constexpr std::size_t kChunkValues = 3072;

void write_f64le(std::ostream& out, std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(kChunkValues * 8);
  for (std::size_t start = 0; start < values.size(); start += kChunkValues) {
    const std::size_t end = std::min(values.size(), start + kChunkValues);
    bytes.clear();
    for (std::size_t i = start; i < end; ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(values[i]);
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
    out << text::base64_encode(bytes);
  }
}

std::vector<double> read_f64le(const std::string& b64, std::size_t expected,
                               const std::string& name) {
  auto bytes = text::base64_decode(b64);
  if (!bytes) throw std::runtime_error("model file: bad base64 in parameter " + name);
  if (bytes->size() != expected * 8) {
    throw std::runtime_error("model file: parameter " + name + " has " +
                             std::to_string(bytes->size() / 8) + " values, shape needs " +
                             std::to_string(expected));
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{(*bytes)[i * 8 + b]} << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return s;
}

}  // namespace

void save_model(const TrainedModel& model, std::ostream& out) {
  if (!model.model) throw std::invalid_argument("save_model: empty model");
  const Model& m = *model.model;
  const json fp = {{"seed", model.fingerprint.seed},
                   {"corpus_hash", hex64(model.fingerprint.corpus_hash)},
                   {"epochs", model.fingerprint.epochs}};
  out << "{\"format\":" << json(kModelFormat).dump() << ",\n";
  out << "\"spec\":" << json::parse(m.spec().to_json()).dump() << ",\n";
  out << "\"fingerprint\":" << fp.dump() << ",\n";
  out << "\"input\":" << json::parse(m.input_json()).dump() << ",\n";
  out << "\"parameters\":[";
  bool first = true;
  for (const auto& p : m.parameter_list()) {
    out << (first ? "\n" : ",\n");
    first = false;
    out << "{\"name\":" << json(p.name()).dump() << ",\"shape\":" << json(p.tensor().shape()).dump()
        << ",\"dtype\":\"f64le\",\"data\":\"";
    write_f64le(out, p.tensor().values());
    out << "\"}";
  }
  out << "]}\n";
}

void save_model_file(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(model, out);
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TrainedModel load_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kModelFormat) {
    throw std::runtime_error("model file: expected format " + std::string(kModelFormat));
  }
  try {
    const ModelSpec spec = ModelSpec::from_json(doc.at("spec").dump());
    std::vector<std::vector<double>> values;
    std::vector<std::string> names;
    for (auto& p : doc.at("parameters")) {
      const auto name = p.at("name").get<std::string>();
      if (p.value("dtype", "") != "f64le") {
        throw std::runtime_error("model file: parameter " + name + " is not f64le");
      }
      const auto shape = p.at("shape").get<nn::Shape>();
      values.push_back(read_f64le(p.at("data").get_ref<const std::string&>(),
                                  nn::shape_size(shape), name));
      p.at("data") = nullptr;  // release the encoded copy early
      names.push_back(name);
    }
    TrainedModel out;
    out.model = restore_model(spec, doc.at("input").dump(), std::move(values));
    const auto& params = out.model->parameter_list();
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name() != names[i]) {
        throw std::runtime_error("model file: parameter " + std::to_string(i) + " is " + names[i] +
                                 ", expected " + params[i].name());
      }
    }
    const auto& fp = doc.at("fingerprint");
    out.fingerprint.seed = fp.at("seed").get<std::uint64_t>();
    out.fingerprint.corpus_hash =
        std::stoull(fp.at("corpus_hash").get<std::string>(), nullptr, 16);
    out.fingerprint.epochs = fp.at("epochs").get<std::size_t>();
    return out;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
}

TrainedModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load_model(in);
}

}  // namespace pshield
