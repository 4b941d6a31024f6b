#include "ddns/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "ddns/errors.hpp"
#include "ddns/format.hpp"
#include "ddns/hash.hpp"

namespace ddns {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[5] = {'D', 'D', 'N', 'S', '1'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw ValidationError("snapshot file truncated");
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const SolutionState& state) {
  const auto& grid = state.grid();
  const int d = grid.dim();
  std::vector<std::uint8_t> out(kMagic, kMagic + 5);
  put_le<std::uint16_t>(out, kSnapshotVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(d));
  for (int a = 0; a < d; ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n()));
  const int arrays = 1 + d + (state.p ? 1 : 0) + (state.force ? d : 0);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(arrays));
  put_f64(out, state.t);
  put_f64(out, state.mu);
  std::uint32_t flags = 0;
  if (state.p) flags |= kHasPressure;
  if (state.force) flags |= kHasForce;
  if (divergence_defect(state.u) <= 1e-10) flags |= kDivergenceFree;
  put_le(out, flags);
  out.reserve(out.size() + arrays * grid.size() * 8);
  auto dump = [&](const Field& f) {
    for (double v : f.values()) put_f64(out, v);
  };
  dump(state.rho);
  dump(state.u);
  if (state.p) dump(*state.p);
  if (state.force) dump(*state.force);
  return out;
}

SolutionState decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(5);
  if (std::memcmp(bytes.data(), kMagic, 5) != 0) throw ValidationError("not a snapshot file (bad magic)");
  for (int i = 0; i < 5; ++i) r.le<std::uint8_t>();
  const auto version = r.le<std::uint16_t>();
  if (version != kSnapshotVersion)
    throw ValidationError("unsupported snapshot version " + std::to_string(version));
  const int d = r.le<std::uint8_t>();
  if (d < 1 || d > 3) throw ValidationError("snapshot dimension must be 1, 2 or 3");
  std::uint32_t n = 0;
  for (int a = 0; a < d; ++a) {
    const auto na = r.le<std::uint32_t>();
    if (a > 0 && na != n) throw ValidationError("snapshot grids must have equal points per axis");
    n = na;
  }
  if (n > (1u << 16)) throw ValidationError("snapshot grid too large");
  const TorusGrid grid(d, static_cast<int>(n));
  const int arrays = r.le<std::uint8_t>();
  const double t = r.f64();
  const double mu = r.f64();
  const auto flags = r.le<std::uint32_t>();
  const bool has_p = flags & kHasPressure;
  const bool has_f = flags & kHasForce;
  if (flags & ~std::uint32_t{7}) throw ValidationError("unknown snapshot flags");
  if (arrays != 1 + d + (has_p ? 1 : 0) + (has_f ? d : 0))
    throw ValidationError("snapshot array count does not match its flags");
  const std::size_t expected = static_cast<std::size_t>(arrays) * grid.size() * 8;
  if (r.remaining() != expected)
    throw ValidationError("snapshot payload has " + std::to_string(r.remaining()) + " bytes, header implies " +
                          std::to_string(expected));
  if (!std::isfinite(t) || !std::isfinite(mu)) throw ValidationError("snapshot time and viscosity must be finite");

  auto take = [&](int comps) {
    std::vector<double> v(grid.size() * comps);
    for (auto& x : v) x = r.f64();
    return Field(grid, comps, std::move(v));  // rejects non-finite values
  };
  Field rho = take(1);
  Field u = take(d);
  std::optional<Field> p, f;
  if (has_p) p = take(1);
  if (has_f) f = take(d);
  return SolutionState::make(std::move(rho), std::move(u), std::move(p), std::move(f), t, mu);
}

void write_snapshot(const fs::path& path, const SolutionState& state) {
  const auto bytes = encode_snapshot(state);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ValidationError("failed writing " + path.string());
}

SolutionState read_snapshot(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open snapshot " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

// ---------------------------------------------------------------------------

void write_series(const fs::path& dir, const std::vector<SolutionState>& states, const SeriesManifest& manifest) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["format"] = "DDNS1";
  j["config_hash"] = manifest.config_hash;
  j["scheme"] = manifest.scheme;
  j["version"] = manifest.version;
  j["snapshots"] = nlohmann::json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.ddns", i);
    write_snapshot(dir / name, states[i]);
    j["snapshots"].push_back({{"file", name}, {"t", states[i].t}});
  }
  std::ofstream os(dir / "manifest.json");
  if (!os) throw ValidationError("cannot write manifest in " + dir.string());
  os << j.dump(2) << '\n';
}

std::vector<SolutionState> read_series(const fs::path& dir, SeriesManifest* manifest) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw ValidationError("no manifest.json in " + dir.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest: " + std::string(e.what()));
  }
  SeriesManifest m;
  std::vector<SolutionState> states;
  try {
    if (j.at("format").get<std::string>() != "DDNS1") throw ValidationError("manifest format is not DDNS1");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.scheme = j.at("scheme").get<std::string>();
    m.version = j.at("version").get<std::string>();
    for (const auto& s : j.at("snapshots")) {
      m.files.push_back(s.at("file").get<std::string>());
      m.times.push_back(s.at("t").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest: " + std::string(e.what()));
  }
  for (std::size_t i = 0; i < m.files.size(); ++i) {
    const fs::path file = m.files[i];
    if (file.has_parent_path() || file.is_absolute()) throw ValidationError("manifest entries must be plain file names");
    states.push_back(read_snapshot(dir / file));
    if (states.back().t != m.times[i]) throw ValidationError("manifest time disagrees with " + m.files[i]);
  }
  if (states.empty()) throw ValidationError("series " + dir.string() + " holds no snapshots");
  validate_series(states);
  if (manifest) *manifest = std::move(m);
  return states;
}

std::vector<SolutionState> read_states(const fs::path& path) {
  if (path.empty()) throw ValidationError("no input path given");
  if (fs::is_directory(path)) return read_series(path);
  std::vector<SolutionState> v;
  v.push_back(read_snapshot(path));
  return v;
}

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  (void)grid();
  if (cutoff != "smooth" && cutoff != "sharp") throw ValidationError("cutoff must be 'smooth' or 'sharp'");
  if (!(s > 0.0 && s < 1.0) || !(t_smooth > 0.0 && t_smooth < 1.0))
    throw ValidationError("smoothness parameters s, t must lie in (0, 1)");
  if (!(a >= 1.0) || !(b >= 1.0)) throw ValidationError("exponents a, b must lie in [1, inf]");
  if (!(besov_p >= 1.0)) throw ValidationError("besov_p must lie in [1, inf]");
  if (besov_r != "inf" && besov_r != "c0") {
    double r = 0.0;
    try {
      std::size_t used = 0;
      r = std::stod(besov_r, &used);
      if (used != besov_r.size()) throw std::invalid_argument(besov_r);
    } catch (const std::exception&) {
      throw ValidationError("besov_r must be a number >= 1, 'inf' or 'c0'");
    }
    if (!(r >= 1.0)) throw ValidationError("besov_r must be >= 1");
  }
  if (hypothesis_regime) {
    const double rel = (std::isinf(a) ? 0.0 : 1.0 / a) + (std::isinf(b) ? 0.0 : 3.0 / b);
    if (std::abs(rel - 1.0) > 1e-12 || !(b >= 3.0))
      throw ValidationError("hypothesis regime needs 1/a + 3/b = 1 and b >= 3 (got 1/a + 3/b = " +
                            format_double(rel) + ", b = " + format_double(b) + ")");
  }
  if (q_lo && *q_lo < -1) throw ValidationError("q_lo must be >= -1");
  if (q_lo && q_hi && *q_hi < *q_lo) throw ValidationError("q_hi must be >= q_lo");
  if (tail_start < -1) throw ValidationError("tail_start must be >= -1");
  if (lag_radius < 0 || lag_radius >= n / 2) throw ValidationError("lag_radius must lie in [0, N/2)");
  if (!(growth_tolerance > 0.0)) throw ValidationError("growth_tolerance must be positive");
  if (!std::isfinite(time)) throw ValidationError("time must be finite");
  solver_config().validate();
}

SolverConfig RunConfig::solver_config() const {
  SolverConfig c = solver;
  c.n = n;
  return c;
}

CutoffProfile RunConfig::cutoff_profile() const {
  return cutoff == "sharp" ? CutoffProfile::sharp() : CutoffProfile::smooth();
}

std::map<std::string, std::string> RunConfig::canonical_map() const {
  std::map<std::string, std::string> kv;
  std::istringstream lines(solver_config().canonical());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  kv["dim"] = std::to_string(dim);
  kv["n"] = std::to_string(n);
  kv["cutoff"] = cutoff;
  kv["s"] = format_double(s);
  kv["t"] = format_double(t_smooth);
  kv["a"] = format_double(a);
  kv["b"] = format_double(b);
  kv["besov_p"] = format_double(besov_p);
  kv["besov_r"] = besov_r;
  kv["hypothesis_regime"] = hypothesis_regime ? "true" : "false";
  kv["q_lo"] = q_lo ? std::to_string(*q_lo) : "default";
  kv["q_hi"] = q_hi ? std::to_string(*q_hi) : "default";
  kv["tail_start"] = std::to_string(tail_start);
  kv["lag_radius"] = std::to_string(lag_radius);
  kv["growth_tolerance"] = format_double(growth_tolerance);
  kv["reconstruct_pressure"] = reconstruct_pressure ? "true" : "false";
  kv["time"] = format_double(time);
  kv["synth_pressure"] = synth_pressure ? "true" : "false";
  return kv;
}

std::string RunConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : canonical_map()) text += k + "=" + v + "\n";
  return hex64(fnv1a64(text));
}

std::string provenance_line(const RunConfig& config) { return "# config_hash=" + config.hash(); }

}  // namespace ddns
