#include "rebot/model/config.hpp"

#include <charconv>
#include <sstream>
#include <tuple>

#include "rebot/errors.hpp"
#include "rebot/rng.hpp"

namespace rebot {

ModelConfig preset_config(std::string_view name) {
  ModelConfig c;
  c.preset = std::string(name);
  if (name == "S") {
    c.depths = {4, 4, 4, 4};
    c.dims = {28, 36, 48, 64};
  } else if (name == "M") {
    c.depths = {4, 4, 4, 4};
    c.dims = {64, 80, 108, 116};
  } else if (name == "L") {
    c.depths = {5, 5, 5, 4};
    c.dims = {172, 180, 188, 196};
  } else if (name == "tiny") {
    c.depths = {1, 1, 1, 1};
    c.dims = {4, 4, 4, 4};
    c.bottleneck_depth = 1;
    c.branch2_embed = 8;
    c.mixer_hidden = 8;
    c.expansion = 2;
    c.height = 64;
    c.width = 64;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected S, M, L or tiny)");
  }
  return c;
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  for (int i = 0; i < 4; ++i) {
    if (c.depths[i] < 0) fail("depths must be non-negative");
    if (c.dims[i] <= 0) fail("dims must be positive");
  }
  if (c.patch_size != 1) fail("only patch_size 1 is supported");
  if (c.branch2_embed <= 0 || c.mixer_hidden <= 0 || c.expansion <= 0) {
    fail("branch2_embed, mixer_hidden and expansion must be positive");
  }
  if (c.bottleneck_depth < 0) fail("bottleneck_depth must be non-negative");
  if (c.stem_kernel <= 0 || c.stem_kernel % 2 == 0) fail("stem_kernel must be odd");
  if (c.decoder_kernel < 2 || c.decoder_kernel % 2 != 0) {
    fail("decoder_kernel " + std::to_string(c.decoder_kernel) +
         " cannot give exact 2x upsampling with stride 2");
  }
  if (c.frames != 2) fail("the network consumes exactly 2 frames");
  if (c.height <= 0 || c.width <= 0 || c.height % ModelConfig::kReduction != 0 ||
      c.width % ModelConfig::kReduction != 0) {
    fail("resolution " + std::to_string(c.height) + "x" + std::to_string(c.width) +
         " must be positive and divisible by 16");
  }
}

namespace {

std::string join(const std::array<int, 4>& v) {
  std::string s;
  for (int i = 0; i < 4; ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string body(const ModelConfig& c) {
  std::ostringstream os;
  os << "depths=" << join(c.depths) << '\n'
     << "dims=" << join(c.dims) << '\n'
     << "patch_size=" << c.patch_size << '\n'
     << "branch2_embed=" << c.branch2_embed << '\n'
     << "bottleneck_depth=" << c.bottleneck_depth << '\n'
     << "mixer_hidden=" << c.mixer_hidden << '\n'
     << "expansion=" << c.expansion << '\n'
     << "stem_kernel=" << c.stem_kernel << '\n'
     << "decoder_kernel=" << c.decoder_kernel << '\n'
     << "decoder_norm=" << (c.decoder_norm ? 1 : 0) << '\n'
     << "frames=" << c.frames << '\n'
     << "resolution=" << c.height << 'x' << c.width << '\n';
  return os.str();
}

int to_int(std::string_view s, const std::string& key) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("model config: bad integer for " + key + ": '" + std::string(s) + "'");
  }
  return v;
}

std::array<int, 4> to_array(std::string_view s, const std::string& key) {
  std::array<int, 4> out{};
  for (int i = 0; i < 4; ++i) {
    auto comma = s.find(',');
    if ((i < 3) == (comma == std::string_view::npos)) {
      throw ConfigError("model config: " + key + " needs 4 comma-separated values");
    }
    out[i] = to_int(s.substr(0, comma), key);
    s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
  }
  return out;
}

}  // namespace

std::string serialize(const ModelConfig& c) { return "preset=" + c.preset + '\n' + body(c); }

std::pair<int, int> parse_resolution(std::string_view text) {
  auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) {
    throw UsageError("resolution must look like HxW, got '" + std::string(text) + "'");
  }
  try {
    return {to_int(text.substr(0, x), "resolution"), to_int(text.substr(x + 1), "resolution")};
  } catch (const ConfigError&) {
    throw UsageError("resolution must look like HxW, got '" + std::string(text) + "'");
  }
}

ModelConfig parse_model_config(std::string_view text) {
  ModelConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model config: expected key=value: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "preset") c.preset = value;
    else if (key == "depths") c.depths = to_array(value, key);
    else if (key == "dims") c.dims = to_array(value, key);
    else if (key == "patch_size") c.patch_size = to_int(value, key);
    else if (key == "branch2_embed") c.branch2_embed = to_int(value, key);
    else if (key == "bottleneck_depth") c.bottleneck_depth = to_int(value, key);
    else if (key == "mixer_hidden") c.mixer_hidden = to_int(value, key);
    else if (key == "expansion") c.expansion = to_int(value, key);
    else if (key == "stem_kernel") c.stem_kernel = to_int(value, key);
    else if (key == "decoder_kernel") c.decoder_kernel = to_int(value, key);
    else if (key == "decoder_norm") c.decoder_norm = to_int(value, key) != 0;
    else if (key == "frames") c.frames = to_int(value, key);
    else if (key == "resolution") {
      try {
        std::tie(c.height, c.width) = parse_resolution(value);
      } catch (const UsageError& e) {
        throw ConfigError(e.what());
      }
    } else {
      throw ConfigError("model config: unknown key '" + key + "'");
    }
  }
  return c;
}

std::uint32_t fingerprint(const ModelConfig& c) {
  const std::string text = body(c);
  return fnv1a32(text.data(), text.size());
}

}  // namespace rebot
