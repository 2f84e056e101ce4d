#include "cpl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cpl/errors.hpp"

namespace cpl {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::bernoulli: return "bernoulli";
    case ModelKind::gff_level: return "gff-level";
    case ModelKind::interlacement: return "interlacement";
    case ModelKind::vacant_interlacement: return "vacant-interlacement";
    case ModelKind::full: return "full";
    case ModelKind::empty: return "empty";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::bernoulli, ModelKind::gff_level, ModelKind::interlacement,
                 ModelKind::vacant_interlacement, ModelKind::full, ModelKind::empty}) {
    if (to_string(k) == s) return k;
  }
  throw UsageError("unknown model kind: " + std::string(s));
}

Config::Config(Window w, ModelSpec provenance)
    : window_(w), occ_(w.size(), 0), provenance_(std::move(provenance)) {}

Config::Config(Window w, std::vector<std::uint8_t> occupancy, ModelSpec provenance)
    : window_(w), occ_(std::move(occupancy)), provenance_(std::move(provenance)) {
  if (occ_.size() != window_.size()) throw UsageError("occupancy length differs from N^d");
  for (auto& b : occ_) b = b ? 1 : 0;
}

void Config::set(const Point& p, bool v) {
  const std::size_t idx = window_.index(p);
  if (idx == kNoSite) throw UsageError("point outside window: " + p.str());
  set(idx, v);
}

std::size_t Config::count() const {
  return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

int Config::degree(std::size_t idx) const {
  int deg = 0;
  for (int a = 0; a < dim(); ++a) {
    for (int s : {-1, 1}) deg += occupied(window_.neighbor(idx, a, s)) ? 1 : 0;
  }
  return deg;
}

void write_config(std::ostream& os, const Config& c) {
  const Window& w = c.window();
  const ModelSpec& p = c.provenance();
  char ubuf[64];
  std::snprintf(ubuf, sizeof ubuf, "%.17g", p.u);
  os << "cpl-config 1 d=" << w.dim() << " N=" << w.side() << " wrap=" << (w.wrap() ? 1 : 0)
     << " low=" << w.low() << " kind=" << to_string(p.kind) << " u=" << ubuf << " seed=" << p.seed
     << '\n';
  const auto occ = c.occupancy();
  const auto n = static_cast<std::size_t>(w.side());
  std::string row(n, '0');
  for (std::size_t base = 0; base < occ.size(); base += n) {
    for (std::size_t i = 0; i < n; ++i) row[i] = occ[base + i] ? '1' : '0';
    os << row << '\n';
  }
}

Config read_config(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw UsageError("config: missing header");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "cpl-config" || version != "1") throw UsageError("config: bad magic");
  std::map<std::string, std::string> kv;
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw UsageError("config: bad header token " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"d", "N", "wrap", "low", "kind", "u", "seed"}) {
    if (!kv.count(key)) throw UsageError(std::string("config: missing header key ") + key);
  }
  const Window w(std::stoi(kv["d"]), std::stoll(kv["N"]), kv["wrap"] == "1", std::stoll(kv["low"]));
  ModelSpec spec;
  spec.kind = parse_model_kind(kv["kind"]);
  spec.u = std::strtod(kv["u"].c_str(), nullptr);
  spec.seed = std::stoull(kv["seed"]);
  spec.window = w;
  std::vector<std::uint8_t> occ(w.size());
  const auto n = static_cast<std::size_t>(w.side());
  std::string row;
  for (std::size_t base = 0; base < occ.size(); base += n) {
    if (!std::getline(is, row) || row.size() != n) throw UsageError("config: truncated raster");
    for (std::size_t i = 0; i < n; ++i) {
      if (row[i] != '0' && row[i] != '1') throw UsageError("config: bad raster character");
      occ[base + i] = row[i] == '1';
    }
  }
  return Config(w, std::move(occ), spec);
}

void save_config(const std::string& path, const Config& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write " + path);
  write_config(os, c);
}

Config load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path);
  return read_config(is);
}

}  // namespace cpl
