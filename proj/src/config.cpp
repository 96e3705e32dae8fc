#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "driftlimit/harness.hpp"
#include "json.hpp"

namespace driftlimit {

using json = nlohmann::ordered_json;

namespace {

const char* experiment_name(Experiment k) {
  switch (k) {
    case Experiment::DiffusionValidate: return "diffusion-validate";
    case Experiment::Simulate: return "simulate";
    case Experiment::CStudy: return "c-study";
  }
  return "simulate";
}

const char* scheme_name(SchemeSel s) {
  switch (s) {
    case SchemeSel::AP: return "ap";
    case SchemeSel::Classical: return "classical";
    case SchemeSel::Both: return "both";
  }
  return "both";
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Copies patch into base.  Every key of patch must exist in base with a
// compatible type.
void merge_checked(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config: " + (path.empty() ? "document" : path) +
                                            " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value()))
        throw ConfigError("config: key '" + key + "' expects " + std::string(slot.type_name()) +
                          ", got " + it.value().type_name());
      slot = it.value();
    }
  }
}

void apply_override(json& doc, const std::string& ov) {
  const auto eq = ov.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + ov + "' is not of the form key.path=value");
  const std::string path = ov.substr(0, eq);
  const std::string text = ov.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  // build a nested patch so merge_checked reports the full path
  json patch = value;
  std::string rest = path;
  std::vector<std::string> parts;
  std::size_t pos;
  while ((pos = rest.find('.')) != std::string::npos) {
    parts.push_back(rest.substr(0, pos));
    rest = rest.substr(pos + 1);
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override '" + ov + "' has an empty key segment");
    json wrap = json::object();
    wrap[*it] = patch;
    patch = wrap;
  }
  merge_checked(doc, patch, "");
}

double num(const json& j, const std::string&) { return j.get<double>(); }

int integer(const json& j, const std::string& key) {
  const double v = j.get<double>();
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ConfigError("config: key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::vector<double> num_list(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config: key '" + key + "' must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigError("config: key '" + key + "[" + std::to_string(i) + "]' must be a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

std::vector<int> int_list(const json& j, const std::string& key) {
  std::vector<int> out;
  const auto v = num_list(j, key);
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(integer(json(v[i]), key + "[" + std::to_string(i) + "]"));
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

int scaled(int n, double s) { return std::max(2, static_cast<int>(std::lround(n * s))); }

RunConfig from_json(const json& j, Experiment kind) {
  RunConfig c;
  c.kind = kind;
  if (j["experiment"].get<std::string>() != experiment_name(kind))
    throw ConfigError(std::string("config: key 'experiment' is '") +
                      j["experiment"].get<std::string>() + "' but the subcommand is '" +
                      experiment_name(kind) + "'");
  c.n = integer(j["grid"]["n"], "grid.n");
  c.lo = num(j["grid"]["lo"], "grid.lo");
  c.hi = num(j["grid"]["hi"], "grid.hi");
  const json& ph = j["physics"];
  c.phys.tau = num(ph["tau"], "physics.tau");
  c.phys.eps = num(ph["eps"], "physics.eps");
  c.phys.Te = num(ph["Te"], "physics.Te");
  c.phys.C = num(ph["C"], "physics.C");
  c.phys.dt = num(ph["dt"], "physics.dt");
  const std::string form = ph["potential_form"].get<std::string>();
  require(form == "consistent" || form == "literal",
          "key 'physics.potential_form' must be 'consistent' or 'literal'");
  c.phys.form = form == "literal" ? PotentialForm::Literal : PotentialForm::Consistent;
  const std::string sch = j["scheme"].get<std::string>();
  if (sch == "ap")
    c.scheme = SchemeSel::AP;
  else if (sch == "classical")
    c.scheme = SchemeSel::Classical;
  else if (sch == "both")
    c.scheme = SchemeSel::Both;
  else
    throw ConfigError("config: key 'scheme' must be 'ap', 'classical' or 'both'");
  c.t_end = num(j["t_end"], "t_end");
  c.alpha = num(j["field"]["alpha"], "field.alpha");
  const json& pt = j["perturbation"];
  c.eta = num(pt["eta"], "perturbation.eta");
  c.x0 = num(pt["x0"], "perturbation.x0");
  c.y0 = num(pt["y0"], "perturbation.y0");
  c.n0 = num(pt["n0"], "perturbation.n0");
  c.phi0 = num(pt["phi0"], "perturbation.phi0");
  c.out_dir = j["output"]["dir"].get<std::string>();
  c.dump_every = integer(j["output"]["dump_every"], "output.dump_every");
  c.classical.cfl = num(j["classical"]["cfl"], "classical.cfl");
  c.classical.fully_coupled = j["classical"]["fully_coupled"].get<bool>();
  c.classical_stable_dt = j["classical"]["use_stable_dt"].get<bool>();
  const json& so = j["solver"];
  c.ap.solver.rel_tol = num(so["rel_tol"], "solver.rel_tol");
  c.ap.solver.max_iter = integer(so["max_iter"], "solver.max_iter");
  const std::string micro = so["micro"].get<std::string>();
  require(micro == "single" || micro == "two-problem",
          "key 'solver.micro' must be 'single' or 'two-problem'");
  c.ap.solver.micro = micro == "single" ? MicroForm::Single : MicroForm::TwoProblem;
  c.ap.increment_form = so["increment_form"].get<bool>();
  const json& df = j["diffusion"];
  c.diffusion.grids = int_list(df["grids"], "diffusion.grids");
  c.diffusion.taus = num_list(df["taus"], "diffusion.taus");
  c.diffusion.tau_sweep = num_list(df["tau_sweep"], "diffusion.tau_sweep");
  c.diffusion.sweep_n = integer(df["sweep_n"], "diffusion.sweep_n");
  c.diffusion.oracle_tau = num(df["oracle_tau"], "diffusion.oracle_tau");
  c.diffusion.oracle_n = integer(df["oracle_n"], "diffusion.oracle_n");
  const json& cs = j["c_study"];
  c.c_study.C = num_list(cs["C"], "c_study.C");
  c.c_study.dt = num_list(cs["dt"], "c_study.dt");
  c.c_study.t_end = num_list(cs["t_end"], "c_study.t_end");
  c.c_study.band = num(cs["band"], "c_study.band");
  c.c_study.agreement = num(cs["agreement"], "c_study.agreement");
  c.c_study.artifact_factor = num(cs["artifact_factor"], "c_study.artifact_factor");
  c.scale = num(j["scale"], "scale");

  // validation
  require(c.n >= 2, "key 'grid.n' must be >= 2");
  require(c.hi > c.lo, "key 'grid.hi' must exceed 'grid.lo'");
  require(c.t_end > 0.0, "key 't_end' must be > 0");
  require(c.dump_every >= 0, "key 'output.dump_every' must be >= 0");
  require(c.scale > 0.0 && c.scale <= 1.0, "key 'scale' must lie in (0, 1]");
  require(c.ap.solver.rel_tol > 0.0, "key 'solver.rel_tol' must be > 0");
  require(c.ap.solver.max_iter > 0, "key 'solver.max_iter' must be > 0");
  try {
    c.phys.validate(kind != Experiment::DiffusionValidate);
    c.classical.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  require(c.diffusion.grids.size() >= 3, "key 'diffusion.grids' needs >= 3 entries for a slope");
  require(c.diffusion.tau_sweep.size() >= 3, "key 'diffusion.tau_sweep' needs >= 3 entries");
  for (int n : c.diffusion.grids) require(n >= 2, "key 'diffusion.grids' entries must be >= 2");
  for (double t : c.diffusion.taus) require(t >= 0.0, "key 'diffusion.taus' entries must be >= 0");
  for (double t : c.diffusion.tau_sweep)
    require(t > 0.0, "key 'diffusion.tau_sweep' entries must be > 0");
  require(c.diffusion.oracle_tau > 0.0, "key 'diffusion.oracle_tau' must be > 0");
  require(c.c_study.C.size() == c.c_study.t_end.size(),
          "keys 'c_study.C' and 'c_study.t_end' must have equal length");
  require(!c.c_study.dt.empty(), "key 'c_study.dt' must not be empty");
  for (double v : c.c_study.C) require(v > 0.0, "key 'c_study.C' entries must be > 0");
  for (double v : c.c_study.dt) require(v > 0.0, "key 'c_study.dt' entries must be > 0");
  for (double v : c.c_study.t_end) require(v > 0.0, "key 'c_study.t_end' entries must be > 0");
  require(c.c_study.band > 0.0 && c.c_study.band < 0.5, "key 'c_study.band' must lie in (0, 0.5)");

  // desk scale: grids shrink by scale, two-fluid step counts with them
  if (c.scale != 1.0) {
    c.n = scaled(c.n, c.scale);
    for (int& n : c.diffusion.grids) n = scaled(n, c.scale);
    c.diffusion.sweep_n = scaled(c.diffusion.sweep_n, c.scale);
    c.diffusion.oracle_n = scaled(c.diffusion.oracle_n, c.scale);
    if (kind == Experiment::Simulate) c.phys.dt /= c.scale;
  }
  return c;
}

json resolved(const RunConfig& c) {
  json j;
  j["experiment"] = experiment_name(c.kind);
  j["grid"] = {{"n", c.n}, {"lo", c.lo}, {"hi", c.hi}};
  j["physics"] = {{"tau", c.phys.tau},
                  {"eps", c.phys.eps},
                  {"Te", c.phys.Te},
                  {"C", c.phys.C},
                  {"dt", c.phys.dt},
                  {"potential_form",
                   c.phys.form == PotentialForm::Literal ? "literal" : "consistent"}};
  j["scheme"] = scheme_name(c.scheme);
  j["t_end"] = c.t_end;
  j["field"] = {{"alpha", c.alpha}};
  j["perturbation"] = {{"eta", c.eta}, {"x0", c.x0}, {"y0", c.y0}, {"n0", c.n0}, {"phi0", c.phi0}};
  j["output"] = {{"dir", c.out_dir}, {"dump_every", c.dump_every}};
  j["classical"] = {{"cfl", c.classical.cfl},
                    {"fully_coupled", c.classical.fully_coupled},
                    {"use_stable_dt", c.classical_stable_dt}};
  j["solver"] = {{"rel_tol", c.ap.solver.rel_tol},
                 {"max_iter", c.ap.solver.max_iter},
                 {"micro", c.ap.solver.micro == MicroForm::Single ? "single" : "two-problem"},
                 {"increment_form", c.ap.increment_form}};
  j["diffusion"] = {{"grids", c.diffusion.grids},         {"taus", c.diffusion.taus},
                    {"tau_sweep", c.diffusion.tau_sweep}, {"sweep_n", c.diffusion.sweep_n},
                    {"oracle_tau", c.diffusion.oracle_tau}, {"oracle_n", c.diffusion.oracle_n}};
  j["c_study"] = {{"C", c.c_study.C},
                  {"dt", c.c_study.dt},
                  {"t_end", c.c_study.t_end},
                  {"band", c.c_study.band},
                  {"agreement", c.c_study.agreement},
                  {"artifact_factor", c.c_study.artifact_factor}};
  // sizes above are already scaled, so the resolved document is reproducible as is
  j["scale"] = 1.0;
  return j;
}

json defaults(Experiment kind) {
  RunConfig c;
  c.kind = kind;
  return resolved(c);
}

}  // namespace

Vec3 RunConfig::B() const { return {std::sin(alpha), -std::cos(alpha), 0.0}; }

std::string default_config_json(Experiment kind) { return defaults(kind).dump(2); }

RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides,
                       Experiment kind) {
  json doc = defaults(kind);
  if (!json_text.empty()) {
    json user;
    try {
      user = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    merge_checked(doc, user, "");
  }
  for (const auto& ov : overrides) apply_override(doc, ov);
  try {
    RunConfig c = from_json(doc, kind);
    c.source_text = json_text;
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      Experiment kind) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config(text, overrides, kind);
}

std::string resolved_config_json(const RunConfig& cfg) { return resolved(cfg).dump(2); }

std::string git_blob_hash(const std::string& content) {
  std::string obj = "blob " + std::to_string(content.size());
  obj.push_back('\0');
  obj += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(obj.data(), obj.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

void write_meta(const RunConfig& cfg, const std::string& extra_json) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  const json conf = resolved(cfg);
  const std::string conf_text = conf.dump(2);
  json m;
  m["experiment"] = experiment_name(cfg.kind);
  m["config"] = conf;
  m["config_hash"] = git_blob_hash(conf_text);
  m["scale_applied"] = cfg.scale;
  if (!cfg.source_text.empty()) m["source_hash"] = git_blob_hash(cfg.source_text);
  const PhysParams& p = cfg.phys;
  m["derived"] = {{"Ci", p.Ci()},
                  {"Ce", p.Ce()},
                  {"lambda1", p.lambda1()},
                  {"lambda2", p.lambda2()},
                  {"B", {cfg.B()[0], cfg.B()[1], cfg.B()[2]}}};
  m["grid"] = {{"dim", 2}, {"cells", {cfg.n, cfg.n}}, {"lo", {cfg.lo, cfg.lo}},
               {"hi", {cfg.hi, cfg.hi}}, {"h", (cfg.hi - cfg.lo) / cfg.n}};
  json extra = json::parse(extra_json, nullptr, false);
  if (!extra.is_discarded() && extra.is_object() && !extra.empty()) m["results"] = extra;
  const std::string path = (std::filesystem::path(cfg.out_dir) / "meta.json").string();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << m.dump(2) << "\n";
}

}  // namespace driftlimit
