#include <charconv>
#include <random>
#include <sstream>

#include "bnn/error.hpp"
#include "bnn/modelio.hpp"

namespace bnn {

namespace {

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

long parse_field(std::string_view field, std::size_t row) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    fail(ErrorCode::Parse, row_label(row) + ": '" + std::string(field) + "' is not an integer");
  }
  return value;
}

}  // namespace

Dataset parse_dataset(std::string_view text, const InputSpec& input, std::size_t num_classes) {
  const std::size_t pixels = input.channels * input.rows * input.cols;
  std::vector<std::int32_t> values;
  std::vector<std::size_t> labels;
  std::size_t row = 0;
  std::vector<std::string_view> fields;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    fields.clear();
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 1 + pixels) {
      fail(ErrorCode::Parse, row_label(row) + ": expected " + std::to_string(1 + pixels) + " fields (label + " +
                                 std::to_string(pixels) + " pixels), got " + std::to_string(fields.size()));
    }
    const long label = parse_field(fields[0], row);
    if (label < 0 || (num_classes != 0 && static_cast<std::size_t>(label) >= num_classes)) {
      fail(ErrorCode::LabelOutOfRange, row_label(row) + ": label " + std::to_string(label) + " outside [0, " +
                                           std::to_string(num_classes) + ")");
    }
    labels.push_back(static_cast<std::size_t>(label));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const long v = parse_field(fields[i], row);
      if (v < 0 || v > 255) fail(ErrorCode::Parse, row_label(row) + ": pixel value " + std::to_string(v) + " outside 0..255");
      values.push_back(static_cast<std::int32_t>(v));
    }
  }
  Dataset d;
  d.images = IntTensor(Dims{labels.size(), input.channels, input.rows, input.cols}, std::move(values));
  d.labels = std::move(labels);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const InputSpec& input, std::size_t num_classes) {
  return parse_dataset(read_file(path), input, num_classes);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  const std::size_t n = data.size();
  const std::size_t per_image = n == 0 ? 0 : data.images.size() / n;
  std::string out;
  out.reserve(n * (per_image * 4 + 4));
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(data.labels[i]);
    for (std::size_t p = 0; p < per_image; ++p) {
      out.push_back(',');
      out += std::to_string(data.images.values[i * per_image + p]);
    }
    out.push_back('\n');
  }
  write_file(path, out);
}

Dataset synthetic_dataset(const InputSpec& input, std::size_t count, std::size_t num_classes, std::uint64_t seed) {
  if (num_classes == 0) fail(ErrorCode::InvalidArgument, "synthetic dataset needs at least one class");
  std::mt19937_64 rng(seed);
  Dataset d;
  d.images = IntTensor(Dims{count, input.channels, input.rows, input.cols});
  d.labels.resize(count);
  const std::size_t per_image = input.channels * input.rows * input.cols;
  for (std::size_t i = 0; i < count; ++i) {
    d.labels[i] = static_cast<std::size_t>(rng() % num_classes);
    for (std::size_t p = 0; p < per_image; ++p) d.images.values[i * per_image + p] = static_cast<std::int32_t>(rng() & 0xFF);
  }
  return d;
}

}  // namespace bnn
