#include <nlohmann/json.hpp>

#include "bnn/error.hpp"
#include "bnn/modelio.hpp"

namespace bnn {

namespace {

using json = nlohmann::json;

json shape_json(const Shape& s) {
  if (s.flat) return json::array({s.channels});
  return json::array({s.channels, s.rows, s.cols});
}

Shape parse_shape(const json& j) {
  const auto dims = j.get<std::vector<std::size_t>>();
  if (dims.size() == 1) return Shape::vector(dims[0]);
  if (dims.size() == 3) return Shape::image(dims[0], dims[1], dims[2]);
  fail(ErrorCode::Parse, "shape must have 1 or 3 extents");
}

json weights_json(const BinaryTensor& t) {
  return json{{"dims", t.dims()}, {"blob", base64_encode(words_to_bytes(t.words()))}};
}

BinaryTensor parse_weights(const json& j, std::size_t layer_number) {
  const Dims dims = j.at("dims").get<Dims>();
  const auto bytes = base64_decode(j.at("blob").get<std::string>());
  const std::size_t count = element_count(dims);
  const std::size_t words = words_for(count);
  if (bytes.size() != words * 8) {
    fail(ErrorCode::Validation, "blob length mismatch layer " + std::to_string(layer_number) + ": expected " +
                                    std::to_string(words * 8) + " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<Word> packed(words, 0);
  for (std::size_t i = 0; i < bytes.size(); ++i) packed[i / 8] |= static_cast<Word>(bytes[i]) << (8 * (i % 8));
  if (words > 0 && (packed.back() & ~low_mask(count - (words - 1) * kWordBits)) != 0) {
    fail(ErrorCode::Validation, "nonzero padding bits in weight blob layer " + std::to_string(layer_number));
  }
  return BinaryTensor(dims, std::move(packed));
}

std::string directions_string(const std::vector<StepDirection>& dirs) {
  std::string s;
  s.reserve(dirs.size());
  for (StepDirection d : dirs) s.push_back(d == StepDirection::Pos ? '+' : '-');
  return s;
}

std::vector<StepDirection> parse_directions(const std::string& s, std::size_t layer_number) {
  std::vector<StepDirection> dirs;
  dirs.reserve(s.size());
  for (char ch : s) {
    if (ch == '+') {
      dirs.push_back(StepDirection::Pos);
    } else if (ch == '-') {
      dirs.push_back(StepDirection::Neg);
    } else {
      fail(ErrorCode::Parse, "layer " + std::to_string(layer_number) + ": direction flags must be '+' or '-'");
    }
  }
  return dirs;
}

json layer_json(const LayerSpec& l) {
  json j{{"kind", std::string(to_string(l.kind))}, {"in", shape_json(l.in_shape)}, {"out", shape_json(l.out_shape)}};
  switch (l.kind) {
    case LayerKind::ConvInt:
    case LayerKind::ConvBin:
      j["out_channels"] = l.out_channels;
      j["weights"] = weights_json(l.weights);
      break;
    case LayerKind::FcBin:
    case LayerKind::FcIntOut:
      j["weights"] = weights_json(l.weights);
      break;
    case LayerKind::Step:
      j["thresholds"] = l.thresholds.values;
      j["directions"] = directions_string(l.directions);
      break;
    default: break;
  }
  return j;
}

LayerSpec parse_layer(const json& j, std::size_t layer_number) {
  LayerSpec l;
  const auto kind_name = j.at("kind").get<std::string>();
  const auto kind = parse_layer_kind(kind_name);
  if (!kind) fail(ErrorCode::Parse, "layer " + std::to_string(layer_number) + ": unknown kind '" + kind_name + "'");
  l.kind = *kind;
  l.in_shape = parse_shape(j.at("in"));
  l.out_shape = parse_shape(j.at("out"));
  switch (l.kind) {
    case LayerKind::ConvInt:
    case LayerKind::ConvBin:
      l.out_channels = j.at("out_channels").get<std::size_t>();
      l.weights = parse_weights(j.at("weights"), layer_number);
      break;
    case LayerKind::FcBin:
    case LayerKind::FcIntOut:
      l.weights = parse_weights(j.at("weights"), layer_number);
      break;
    case LayerKind::Step: {
      auto values = j.at("thresholds").get<std::vector<std::int32_t>>();
      const std::size_t n = values.size();
      l.thresholds = IntTensor(Dims{n}, std::move(values));
      l.directions = parse_directions(j.at("directions").get<std::string>(), layer_number);
      break;
    }
    default: break;
  }
  return l;
}

}  // namespace

std::string serialize_model(const ModelSpec& model) {
  json layers = json::array();
  for (const auto& l : model.layers) layers.push_back(layer_json(l));
  const json j{
      {"format_version", kModelFormatVersion},
      {"name", model.name},
      {"input", {{"channels", model.input.channels}, {"rows", model.input.rows}, {"cols", model.input.cols},
                 {"element", "u8"}}},
      {"num_classes", model.num_classes},
      {"layers", std::move(layers)},
  };
  return j.dump(1) + "\n";
}

ModelSpec parse_model(std::string_view text) {
  ModelSpec m;
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      fail(ErrorCode::UnsupportedVersion, "model format version " + std::to_string(version) + " is not supported");
    }
    m.name = j.at("name").get<std::string>();
    const json& in = j.at("input");
    if (in.value("element", std::string("u8")) != "u8") fail(ErrorCode::Parse, "input element type must be u8");
    m.input = {in.at("channels").get<std::size_t>(), in.at("rows").get<std::size_t>(), in.at("cols").get<std::size_t>()};
    m.num_classes = j.at("num_classes").get<std::size_t>();
    std::size_t number = 1;
    for (const json& l : j.at("layers")) m.layers.push_back(parse_layer(l, number++));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, "model JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("model JSON: ") + e.what());
  }
  const auto violations = validate_model(m);
  if (!violations.empty()) {
    std::string msg = "model '" + m.name + "' is invalid:";
    for (const auto& v : violations) msg += "\n  " + v;
    fail(ErrorCode::Validation, msg);
  }
  return m;
}

ModelSpec load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

void save_model(const ModelSpec& model, const std::filesystem::path& path) { write_file(path, serialize_model(model)); }

std::string model_hash(const ModelSpec& model) { return sha256_hex(serialize_model(model)); }

}  // namespace bnn
