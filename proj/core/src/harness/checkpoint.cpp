/// @file checkpoint.cpp
/// @brief Checkpoint serialization.
#include "slipflow/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipflow/errors.hpp"

namespace slipflow::harness {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'P', 'F', 'C', 'K', 'P', 'T'};

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

void put_u64(std::string& out, std::uint64_t v) {
  v = to_little(v);
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  std::memcpy(&v, p, 8);
  return to_little(v);
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
double get_f64(const char* p) { return std::bit_cast<double>(get_u64(p)); }

IndexBox payload_box(const GridSpec& g, int component) {
  return component < 0 ? cell_box(g) : face_box(g, component, true);
}

std::size_t payload_values(const GridSpec& g) {
  std::size_t n = cell_box(g).count();
  for (int c = 0; c < 3; ++c) n += face_box(g, c, true).count();
  return n;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const FlowState& s = ckpt.state;
  const GridSpec& g = s.grid();
  nlohmann::json h;
  h["format_version"] = ckpt.format_version;
  h["grid"] = {{"cells", g.cells}, {"extent", g.extent}, {"ghost", g.ghost}};
  h["eos"] = {{"a", ckpt.eos.a},   {"gamma", ckpt.eos.gamma},    {"mu", ckpt.eos.mu},
              {"lambda", ckpt.eos.lambda}, {"rho_bar", ckpt.eos.rho_bar}};
  h["t"] = s.t;
  h["step"] = s.step;
  h["config_hash"] = hex(ckpt.config_hash);
  h["integrals"] = {{"dissipation", ckpt.integrals.dissipation},
                    {"div_linf", ckpt.integrals.div_linf}};
  if (ckpt.sampler_previous) {
    h["sampler_previous"] = {{"energy", ckpt.sampler_previous->first},
                             {"dissipation_integral", ckpt.sampler_previous->second}};
  } else {
    h["sampler_previous"] = nullptr;
  }
  h["payload_bytes"] = 8 * payload_values(g);
  const std::string header = h.dump();

  std::string blob(kMagic, sizeof kMagic);
  put_u64(blob, header.size());
  blob += header;
  blob.reserve(blob.size() + 8 * payload_values(g));
  for (int c = -1; c < 3; ++c) {
    const double* src = c < 0 ? s.rho.data() : s.mom.data(c);
    for_each_index(g, payload_box(g, c), [&](int, int, int, std::size_t q) { put_f64(blob, src[q]); });
  }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    out.flush();
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(path.string() + " is not a slipflow checkpoint");
  }
  const std::uint64_t header_len = get_u64(blob.data() + 8);
  if (header_len > blob.size() - 16) throw CheckpointError("truncated checkpoint header");

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(blob.begin() + 16, blob.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    ck.format_version = h.at("format_version").get<int>();
    if (ck.format_version != kCheckpointVersion) {
      throw CheckpointError("checkpoint format version " + std::to_string(ck.format_version) +
                            " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    const auto& hg = h.at("grid");
    const GridSpec g = build_grid(hg.at("extent").get<std::array<double, 3>>(),
                                  hg.at("cells").get<std::array<int, 3>>(),
                                  hg.at("ghost").get<int>());
    const auto& he = h.at("eos");
    ck.eos.a = he.at("a").get<double>();
    ck.eos.gamma = he.at("gamma").get<double>();
    ck.eos.mu = he.at("mu").get<double>();
    ck.eos.lambda = he.at("lambda").get<double>();
    ck.eos.rho_bar = he.at("rho_bar").get<double>();
    ck.config_hash = std::stoull(h.at("config_hash").get<std::string>(), nullptr, 16);
    ck.integrals.dissipation = h.at("integrals").at("dissipation").get<double>();
    ck.integrals.div_linf = h.at("integrals").at("div_linf").get<double>();
    if (!h.at("sampler_previous").is_null()) {
      const auto& sp = h.at("sampler_previous");
      ck.sampler_previous = std::make_pair(sp.at("energy").get<double>(),
                                           sp.at("dissipation_integral").get<double>());
    }

    const std::size_t expected = 8 * payload_values(g);
    if (h.at("payload_bytes").get<std::size_t>() != expected) {
      throw CheckpointError("checkpoint header payload size disagrees with its grid");
    }
    const std::size_t available = blob.size() - 16 - header_len;
    if (available < expected) {
      throw CheckpointError("truncated payload: expected " + std::to_string(expected) +
                            " bytes, found " + std::to_string(available));
    }
    if (available > expected) {
      throw CheckpointError("checkpoint has " + std::to_string(available - expected) +
                            " trailing bytes");
    }

    FlowState& s = ck.state;
    s.t = h.at("t").get<double>();
    s.step = h.at("step").get<std::int64_t>();
    s.rho = ScalarField(g);
    s.mom = VectorField(g);
    const char* p = blob.data() + 16 + header_len;
    for (int c = -1; c < 3; ++c) {
      double* dst = c < 0 ? s.rho.data() : s.mom.data(c);
      for_each_index(g, payload_box(g, c), [&](int, int, int, std::size_t q) {
        dst[q] = get_f64(p);
        p += 8;
      });
    }
    fill_ghosts(s);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid grid in checkpoint header: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw CheckpointError("malformed config hash in checkpoint header");
  }
  return ck;
}

}  // namespace slipflow::harness
