#include "weaksde/experiment.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "weaksde/csv.hpp"
#include "weaksde/plot.hpp"
#include "weaksde/stats.hpp"

namespace weaksde {

namespace fs = std::filesystem;

namespace {

std::string join_key(const std::string& path, const std::string& k) { return path.empty() ? k : path + "." + k; }

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key, "expected a finite number");
  return x;
}

std::uint64_t as_u64(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto x = v.get<std::int64_t>();
    if (x < 0) throw ConfigError(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(x);
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x <= 9007199254740992.0 && std::floor(x) == x) return static_cast<std::uint64_t>(x);
  }
  throw ConfigError(key, "expected a non-negative integer");
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

// Strict view of one JSON object: keys outside `allowed` are rejected up front,
// every accessor records the value actually used (default or given) in `out`.
class Reader {
 public:
  Reader(const json& j, std::string path, const std::set<std::string>& allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) throw ConfigError(key(k), "unknown key");
  }

  std::string key(const std::string& k) const { return join_key(path_, k); }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k) const {
    if (!has(k)) throw ConfigError(key(k), "required key is missing");
    return j_.at(k);
  }

  double number(const std::string& k, std::optional<double> def = std::nullopt) {
    const double x = has(k) || !def ? as_number(at(k), key(k)) : *def;
    out[k] = x;
    return x;
  }
  double positive(const std::string& k, std::optional<double> def = std::nullopt) {
    const double x = number(k, def);
    if (!(x > 0.0)) throw ConfigError(key(k), "must be positive");
    return x;
  }
  std::uint64_t u64(const std::string& k, std::optional<std::uint64_t> def = std::nullopt) {
    const std::uint64_t x = has(k) || !def ? as_u64(at(k), key(k)) : *def;
    out[k] = x;
    return x;
  }
  std::size_t count(const std::string& k, std::size_t def, std::size_t min) {
    const std::size_t x = u64(k, def);
    if (x < min) throw ConfigError(key(k), "must be at least " + std::to_string(min));
    return x;
  }
  std::string string(const std::string& k, std::optional<std::string> def = std::nullopt) {
    std::string s = has(k) || !def ? as_string(at(k), key(k)) : *def;
    out[k] = s;
    return s;
  }
  bool flag(const std::string& k, bool def) {
    bool b = def;
    if (has(k)) {
      if (!at(k).is_boolean()) throw ConfigError(key(k), "expected true or false");
      b = at(k).get<bool>();
    }
    out[k] = b;
    return b;
  }

  json out = json::object();

 private:
  const json& j_;
  std::string path_;
};

Interval parse_interval(const json& v, const std::string& key) {
  const auto xs = as_numbers(v, key);
  if (xs.size() != 2 || !(xs[1] > xs[0])) throw ConfigError(key, "expected [lo, hi] with hi > lo");
  return {xs[0], xs[1]};
}

}  // namespace

std::pair<NoiseSpec, json> parse_noise(const json& j, const std::string& key) {
  if (j.is_string()) return parse_noise(json{{"kind", j.get<std::string>()}}, key);
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(key, "expected a noise name or an object with \"kind\"");
  const std::string kind = as_string(j.at("kind"), join_key(key, "kind"));
  try {
    if (kind == "gaussian" || kind == "skewed_reference") {
      Reader r(j, key, {"kind"});
      r.out["kind"] = kind;
      return {kind == "gaussian" ? NoiseSpec::gaussian() : NoiseSpec::skewed_reference(), r.out};
    }
    if (kind == "two_point_symmetric") {
      Reader r(j, key, {"kind", "amplitude"});
      r.out["kind"] = kind;
      const double a = r.positive("amplitude", 1.0);
      return {NoiseSpec::two_point_symmetric(a), r.out};
    }
    if (kind == "two_point") {
      Reader r(j, key, {"kind", "x_plus", "x_minus", "p_plus"});
      r.out["kind"] = kind;
      const double xp = r.number("x_plus"), xm = r.number("x_minus"), p = r.number("p_plus");
      return {NoiseSpec::two_point(xp, xm, p), r.out};
    }
    if (kind == "standardized_two_point") {
      Reader r(j, key, {"kind", "p_plus"});
      r.out["kind"] = kind;
      return {NoiseSpec::standardized_two_point(r.number("p_plus")), r.out};
    }
    if (kind == "shifted") {
      Reader r(j, key, {"kind", "base", "offset", "scale"});
      r.out["kind"] = kind;
      auto [base, base_json] = parse_noise(r.at("base"), r.key("base"));
      r.out["base"] = base_json;
      const double offset = r.number("offset", 0.0), scale = r.number("scale", 1.0);
      return {NoiseSpec::shifted(base, offset, scale), r.out};
    }
  } catch (const SpecError& e) {
    throw ConfigError(key, e.what());
  }
  throw ConfigError(join_key(key, "kind"), "unknown noise kind '" + kind +
                                               "' (gaussian, two_point_symmetric, two_point, "
                                               "standardized_two_point, skewed_reference, shifted)");
}

std::pair<SdeModel, json> parse_model(const json& j, const std::string& key) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "linear_multiplicative_2d_noise") return {builtin_sde(BuiltinSde::LinearMultiplicative2DNoise), j};
    if (name == "linear_additive") return {builtin_sde(BuiltinSde::LinearAdditive), j};
    if (name == "tanh_sech") return {builtin_sde(BuiltinSde::TanhSech), j};
    throw ConfigError(key, "unknown model '" + name + "' (linear_multiplicative_2d_noise, linear_additive, tanh_sech)");
  }
  Reader outer(j, key, {"polynomial"});
  Reader r(outer.at("polynomial"), outer.key("polynomial"), {"drift", "diffusion", "x0"});
  auto drift = as_numbers(r.at("drift"), r.key("drift"));
  auto diffusion = as_numbers(r.at("diffusion"), r.key("diffusion"));
  r.out["drift"] = drift;
  r.out["diffusion"] = diffusion;
  const double x0 = r.number("x0");
  try {
    return {polynomial_sde(std::move(drift), std::move(diffusion), x0), json{{"polynomial", r.out}}};
  } catch (const SpecError& e) {
    throw ConfigError(outer.key("polynomial"), e.what());
  }
}

std::pair<TargetDensity, json> parse_target(const json& j, const std::string& key) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "std_gaussian") return {std_gaussian_target(1), j};
    if (name == "bimodal_quartic") return {bimodal_quartic_target(), j};
    if (name == "quartic_loss") return {quartic_loss(), j};
    if (name == "gumbel") return parse_target(json{{"gumbel", json::object()}}, key);
    throw ConfigError(key, "unknown target '" + name + "' (std_gaussian, gumbel, bimodal_quartic, quartic_loss)");
  }
  if (!j.is_object() || j.size() != 1) throw ConfigError(key, "expected a target name or {\"gumbel\"|\"polynomial\": {...}}");
  if (j.contains("gumbel")) {
    Reader r(j.at("gumbel"), join_key(key, "gumbel"), {"mu", "beta_scale"});
    GumbelParams p{r.number("mu", 0.0), r.positive("beta_scale", 1.0)};
    return {gumbel_target(p), json{{"gumbel", r.out}}};
  }
  if (j.contains("polynomial")) {
    Reader r(j.at("polynomial"), join_key(key, "polynomial"), {"coeffs", "support"});
    auto coeffs = as_numbers(r.at("coeffs"), r.key("coeffs"));
    const Interval support = parse_interval(r.at("support"), r.key("support"));
    r.out["coeffs"] = coeffs;
    r.out["support"] = {support.lo, support.hi};
    try {
      return {polynomial_target(std::move(coeffs), support), json{{"polynomial", r.out}}};
    } catch (const SpecError& e) {
      throw ConfigError(r.key("coeffs"), e.what());
    }
  }
  throw ConfigError(join_key(key, j.begin().key()), "unknown key");
}

namespace {

const std::set<std::string> kCommonKeys{"experiment", "seed", "threads", "output_dir"};
const std::set<std::string> kChainKeys{"experiment", "seed",    "threads", "output_dir", "target",
                                       "eps",        "n_steps", "burn_in", "thin",       "init"};

std::set<std::string> with(std::set<std::string> a, std::initializer_list<std::string> extra) {
  a.insert(extra.begin(), extra.end());
  return a;
}

ChainSpec parse_chain(Reader& r, const json& default_target, double default_eps) {
  ChainSpec c;
  auto [target, target_json] = parse_target(r.has("target") ? r.at("target") : default_target, r.key("target"));
  c.target = std::move(target);
  r.out["target"] = target_json;
  c.eps = r.positive("eps", default_eps);
  c.n_steps = r.count("n_steps", 1000000, 1);
  c.burn_in = r.count("burn_in", 100000, 0);
  if (c.burn_in >= c.n_steps) throw ConfigError(r.key("burn_in"), "must be smaller than n_steps");
  c.thin = r.count("thin", 1, 1);
  c.init = r.number("init", 0.0);
  return c;
}

Interval parse_range(Reader& r, const TargetDensity& target) {
  const Interval range = r.has("range") ? parse_interval(r.at("range"), r.key("range")) : target.support_hint.at(0);
  r.out["range"] = {range.lo, range.hi};
  return range;
}

void check_label(const std::string& label, const std::string& key) {
  if (label.empty()) throw ConfigError(key, "must not be empty");
  for (char c : label)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      throw ConfigError(key, "may only contain letters, digits, '_' and '-'");
}

WeakOrderSpec parse_weak_order(Reader& r) {
  WeakOrderSpec s;
  auto [model, model_json] = parse_model(r.at("model"), r.key("model"));
  s.model = std::move(model);
  r.out["model"] = model_json;

  const json schemes = r.has("schemes") ? r.at("schemes") : json{"em", "skewed_em"};
  if (!schemes.is_array() || schemes.empty()) throw ConfigError(r.key("schemes"), "expected a non-empty array");
  json schemes_out = json::array();
  std::set<std::string> labels;
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const std::string key = r.key("schemes") + "[" + std::to_string(i) + "]";
    const json entry = schemes[i].is_string() ? json{{"scheme", schemes[i]}} : schemes[i];
    Reader e(entry, key, {"scheme", "noise", "label"});
    SchemeKind kind;
    try {
      kind = scheme_kind_from_string(e.string("scheme"));
    } catch (const SpecError& err) {
      throw ConfigError(e.key("scheme"), err.what());
    }
    auto [noise, noise_json] =
        e.has("noise") ? parse_noise(e.at("noise"), e.key("noise"))
                       : std::pair<NoiseSpec, json>{Scheme::default_noise(kind), json()};
    if (!e.has("noise")) {
      // echo the default as an explicit spec
      noise_json = std::visit(
          [&](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, NoiseSpec::Gaussian>) return {{"kind", "gaussian"}};
            else if constexpr (std::is_same_v<T, NoiseSpec::TwoPointSymmetric>)
              return {{"kind", "two_point_symmetric"}, {"amplitude", k.amplitude}};
            else return {{"kind", "skewed_reference"}};
          },
          noise.kind());
    }
    e.out["noise"] = noise_json;
    const std::string label = e.string("label", to_string(kind));
    check_label(label, e.key("label"));
    if (!labels.insert(label).second) throw ConfigError(e.key("label"), "duplicate scheme label '" + label + "'");
    try {
      s.schemes.push_back({label, Scheme(kind, noise)});
    } catch (const SpecError& err) {
      throw ConfigError(e.key("noise"), err.what());
    }
    schemes_out.push_back(e.out);
  }
  r.out["schemes"] = schemes_out;

  try {
    s.test_function = test_function_from_string(r.string("test_function", "identity"));
  } catch (const SpecError& e) {
    throw ConfigError(r.key("test_function"), e.what());
  }
  r.out["test_function"] = to_string(s.test_function);
  s.horizon = r.positive("horizon", 1.0);
  s.eps_list = r.has("eps_list") ? as_numbers(r.at("eps_list"), r.key("eps_list"))
                                 : std::vector<double>{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  if (s.eps_list.empty()) throw ConfigError(r.key("eps_list"), "expected at least one step size");
  for (std::size_t i = 0; i < s.eps_list.size(); ++i) {
    const double e = s.eps_list[i];
    const double j = std::log2(s.horizon / e);
    if (!(e > 0.0) || j < -1e-9 || std::abs(j - std::round(j)) > 1e-9)
      throw ConfigError(r.key("eps_list") + "[" + std::to_string(i) + "]", "must equal horizon * 2^-j");
    if (i > 0 && !(e < s.eps_list[i - 1])) throw ConfigError(r.key("eps_list"), "must be strictly decreasing");
  }
  r.out["eps_list"] = s.eps_list;
  s.n_paths = r.count("n_paths", 100000, 2);

  const auto& oracle =
      s.test_function == TestFunctionKind::Identity ? s.model.analytic_mean : s.model.analytic_second_moment;
  if (!oracle)
    throw ConfigError(r.key("test_function"), "model '" + s.model.name + "' has no oracle for f = " +
                                                  to_string(s.test_function));
  return s;
}

SampleSpec parse_sample(Reader& r) {
  SampleSpec s;
  s.chain = parse_chain(r, json(), 0.01);
  s.variant_name = r.string("variant", "skewed");
  if (s.variant_name == "gaussian") {
    if (r.has("noise")) throw ConfigError(r.key("noise"), "the gaussian variant takes no noise override");
    s.variant = UlaGaussian{};
  } else if (s.variant_name == "simplified" || s.variant_name == "skewed") {
    const bool skewed = s.variant_name == "skewed";
    const json def = skewed ? json("skewed_reference") : json{{"kind", "two_point_symmetric"}};
    auto [noise, noise_json] = parse_noise(r.has("noise") ? r.at("noise") : def, r.key("noise"));
    r.out["noise"] = noise_json;
    try {
      Scheme::check_compatible(skewed ? SchemeKind::SkewedEM : SchemeKind::SimplifiedEM, noise);
    } catch (const SpecError& e) {
      throw ConfigError(r.key("noise"), e.what());
    }
    if (skewed) s.variant = UlaSkewed{noise};
    else s.variant = UlaSimplified{noise};
  } else {
    throw ConfigError(r.key("variant"), "expected gaussian, simplified or skewed");
  }
  s.bins = r.count("bins", 50, 1);
  s.range = parse_range(r, s.chain.target);
  s.write_samples = r.flag("write_samples", true);
  return s;
}

SgdSpec parse_sgd(Reader& r) {
  SgdSpec s;
  s.chain = parse_chain(r, json("quartic_loss"), 0.1);
  s.m1 = r.number("m1", 0.0);
  s.m2 = r.number("m2");
  if (!(s.m2 - s.m1 * s.m1 > 0.0)) throw ConfigError(r.key("m2"), "m2 - m1^2 must be positive");
  auto [shape, shape_json] =
      parse_noise(r.has("gradient_noise_shape") ? r.at("gradient_noise_shape") : json("skewed_reference"),
                  r.key("gradient_noise_shape"));
  s.shape = shape;
  r.out["gradient_noise_shape"] = shape_json;
  s.bins = r.count("bins", 50, 1);
  s.range = parse_range(r, s.chain.target);
  s.write_samples = r.flag("write_samples", true);
  return s;
}

SgldBetaSpec parse_sgld(Reader& r) {
  SgldBetaSpec s;
  s.chain = parse_chain(r, json("std_gaussian"), 0.1);
  s.m1 = r.number("m1", 0.0);
  s.m2 = r.number("m2");
  if (s.m2 - s.m1 * s.m1 < 0.0) throw ConfigError(r.key("m2"), "m2 - m1^2 must be non-negative");
  auto [shape, shape_json] =
      parse_noise(r.has("gradient_noise_shape") ? r.at("gradient_noise_shape") : json("skewed_reference"),
                  r.key("gradient_noise_shape"));
  s.shape = shape;
  r.out["gradient_noise_shape"] = shape_json;
  s.gamma1 = r.number("gamma1", 0.9);
  s.gamma2 = r.number("gamma2", 0.999);
  for (const char* g : {"gamma1", "gamma2"}) {
    const double v = r.out[g].get<double>();
    if (!(v > 0.0 && v < 1.0)) throw ConfigError(r.key(g), "must lie in (0, 1)");
  }

  const json variants = r.has("variants") ? r.at("variants") : json{"gaussian", "adaptive_two_point"};
  if (!variants.is_array() || variants.empty()) throw ConfigError(r.key("variants"), "expected a non-empty array");
  json out = json::array();
  std::set<std::string> names;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const std::string key = r.key("variants") + "[" + std::to_string(i) + "]";
    const json entry = variants[i].is_string() ? json{{"variant", variants[i]}} : variants[i];
    Reader e(entry, key, {"variant", "noise"});
    const std::string name = e.string("variant");
    if (!names.insert(name).second) throw ConfigError(e.key("variant"), "duplicate variant '" + name + "'");
    if (name == "skewed") {
      auto [noise, noise_json] =
          parse_noise(e.has("noise") ? e.at("noise") : json("skewed_reference"), e.key("noise"));
      try {
        Scheme::check_compatible(SchemeKind::SkewedEM, noise);
      } catch (const SpecError& err) {
        throw ConfigError(e.key("noise"), err.what());
      }
      e.out["noise"] = noise_json;
      s.variants.push_back({name, SgldSkewed{noise}});
    } else {
      if (e.has("noise")) throw ConfigError(e.key("noise"), "only the skewed variant takes a noise override");
      if (name == "gaussian") s.variants.push_back({name, SgldGaussian{}});
      else if (name == "adaptive_two_point") s.variants.push_back({name, SgldAdaptiveTwoPoint{}});
      else throw ConfigError(e.key("variant"), "expected gaussian, skewed or adaptive_two_point");
    }
    out.push_back(e.out);
  }
  r.out["variants"] = out;
  return s;
}

MomentCheckSpec parse_moments(Reader& r) {
  MomentCheckSpec s;
  const json noises = r.has("noises") ? r.at("noises")
                                      : json{{{"name", "gaussian"}, {"noise", "gaussian"}},
                                             {{"name", "two_point_symmetric"}, {"noise", "two_point_symmetric"}},
                                             {{"name", "skewed_reference"}, {"noise", "skewed_reference"}}};
  if (!noises.is_array() || noises.empty()) throw ConfigError(r.key("noises"), "expected a non-empty array");
  json out = json::array();
  std::set<std::string> names;
  for (std::size_t i = 0; i < noises.size(); ++i) {
    Reader e(noises[i], r.key("noises") + "[" + std::to_string(i) + "]", {"name", "noise"});
    const std::string name = e.string("name");
    if (!names.insert(name).second) throw ConfigError(e.key("name"), "duplicate noise name '" + name + "'");
    auto [noise, noise_json] = parse_noise(e.at("noise"), e.key("noise"));
    e.out["noise"] = noise_json;
    s.noises.emplace_back(name, noise);
    out.push_back(e.out);
  }
  r.out["noises"] = out;
  s.n = r.count("n", 1000000, 10000);
  if (r.has("orders")) {
    const auto xs = as_numbers(r.at("orders"), r.key("orders"));
    s.orders.clear();
    for (double x : xs) {
      if (x < 1 || x > 8 || std::floor(x) != x) throw ConfigError(r.key("orders"), "orders must be integers in 1..8");
      s.orders.push_back(static_cast<int>(x));
    }
    if (s.orders.empty()) throw ConfigError(r.key("orders"), "expected at least one order");
  }
  r.out["orders"] = s.orders;
  s.z_threshold = r.positive("z_threshold", 5.0);
  return s;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  if (!j.contains("experiment")) throw ConfigError("experiment", "required key is missing");
  ExperimentConfig c;
  c.experiment = as_string(j.at("experiment"), "experiment");

  std::set<std::string> allowed;
  if (c.experiment == "weak_order")
    allowed = with(kCommonKeys, {"model", "schemes", "test_function", "eps_list", "horizon", "n_paths"});
  else if (c.experiment == "sample")
    allowed = with(kChainKeys, {"variant", "noise", "bins", "range", "write_samples"});
  else if (c.experiment == "sgd_stationary")
    allowed = with(kChainKeys, {"m1", "m2", "gradient_noise_shape", "bins", "range", "write_samples"});
  else if (c.experiment == "sgld_beta")
    allowed = with(kChainKeys, {"m1", "m2", "gradient_noise_shape", "variants", "gamma1", "gamma2"});
  else if (c.experiment == "moment_check")
    allowed = with(kCommonKeys, {"noises", "n", "orders", "z_threshold"});
  else
    throw ConfigError("experiment", "unknown experiment '" + c.experiment +
                                        "' (weak_order, sample, sgd_stationary, sgld_beta, moment_check)");

  Reader r(j, "", allowed);
  r.string("experiment");
  c.seed = r.u64("seed");
  const std::uint64_t threads = r.u64("threads", 0);
  if (threads > 4096) throw ConfigError("threads", "must be at most 4096");
  c.threads = static_cast<int>(threads);
  c.output_dir = r.string("output_dir", "out");

  if (c.experiment == "weak_order") c.weak_order = parse_weak_order(r);
  else if (c.experiment == "sample") c.sample = parse_sample(r);
  else if (c.experiment == "sgd_stationary") c.sgd = parse_sgd(r);
  else if (c.experiment == "sgld_beta") c.sgld = parse_sgld(r);
  else c.moments = parse_moments(r);
  c.canonical = std::move(r.out);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json ExperimentReport::to_json() const {
  return {{"config", config},
          {"output_dir", output_dir.string()},
          {"files", files},
          {"plots", plots},
          {"summary", summary},
          {"runtime_seconds", runtime_seconds}};
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Moments1D {
  double mean;
  double variance;
};

Moments1D sample_moments(std::span<const double> xs) {
  RunningMoments m;
  for (double x : xs) m.push(x);
  return {m.mean, m.variance()};
}

ChainConfig make_chain(const ChainSpec& c, std::uint64_t seed) {
  return ChainConfig{c.target, c.eps, c.n_steps, c.burn_in, c.thin, {c.init}, seed, 0};
}

template <class F>
auto with_context(const std::string& context, F&& f) {
  try {
    return f();
  } catch (const ExperimentError&) {
    throw;
  } catch (const Error& e) {
    throw ExperimentError(context, e);
  }
}

void try_plot(ExperimentReport& rep, const std::vector<fs::path>& csvs, PlotKind kind, const std::string& name) {
  try {
    emit_plot(csvs, kind, rep.output_dir / name);
    rep.plots.push_back(name);
  } catch (const Error& e) {
    rep.summary["plot_errors"].push_back(name + ": " + e.what());
  }
}

void write_samples(const fs::path& path, std::span<const double> xs) {
  CsvWriter w(path, {"theta"});
  for (double x : xs) w.value(x);
  w.close();
}

// Histogram CSV with bin-averaged analytic density; returns the L1 distance.
double write_histogram(const fs::path& path, const Histogram& h, const TargetDensity& density) {
  const auto masses = bin_masses(h, density);
  CsvWriter w(path, {"bin_left", "bin_right", "hist_density", "analytic_density"});
  for (std::size_t b = 0; b < h.bins(); ++b)
    w.row({h.edges[b], h.edges[b + 1], h.densities[b], masses[b] / (h.edges[b + 1] - h.edges[b])});
  w.close();
  return histogram_l1(h, density);
}

void run_weak_order(const ExperimentConfig& c, ExperimentReport& rep, const RunOptions& opt) {
  const auto& s = *c.weak_order;
  std::vector<fs::path> csvs;
  for (std::size_t i = 0; i < s.schemes.size(); ++i) {
    const auto& entry = s.schemes[i];
    const ErrorTable table = with_context("weak_order, scheme '" + entry.label + "'", [&] {
      return weak_error_sweep(s.model, entry.scheme, s.test_function, s.eps_list, s.n_paths, derive_seed(c.seed, i),
                              s.horizon);
    });
    const std::string name = "weak_order_" + entry.label + ".csv";
    CsvWriter w(rep.output_dir / name, {"eps", "error", "std_error", "n_paths"});
    for (const auto& row : table.rows)
      w.row({row.eps, row.error, row.std_error, static_cast<std::uint64_t>(row.n_paths)});
    w.close();
    rep.files.push_back(name);
    csvs.push_back(rep.output_dir / name);

    json js;
    js["exact"] = table.rows.front().exact;
    try {
      const OrderFit fit = fit_order(table);
      js["slope"] = fit.slope;
      js["intercept"] = fit.intercept;
      js["r_squared"] = fit.r_squared;
      js["used_rows"] = fit.used_rows;
      js["excluded_rows"] = fit.excluded_rows;
    } catch (const InsufficientSignal& e) {
      js["slope"] = nullptr;
      js["fit_error"] = e.what();
    }
    rep.summary["schemes"][entry.label] = js;
  }
  if (opt.plots) try_plot(rep, csvs, PlotKind::LoglogError, "weak_order.svg");
}

void run_sample(const ExperimentConfig& c, ExperimentReport& rep, const RunOptions& opt) {
  const auto& s = *c.sample;
  const SampleMatrix samples =
      with_context("sample, variant '" + s.variant_name + "'", [&] { return run_ula(make_chain(s.chain, c.seed), s.variant); });
  const auto xs = samples.column(0);
  const Histogram h = make_histogram(xs, s.range, s.bins);
  const NormalizedDensity nd = with_context("sample, normalizing the target", [&] { return normalize(s.chain.target); });
  const double l1 = write_histogram(rep.output_dir / "histogram.csv", h, nd.density);
  rep.files.push_back("histogram.csv");
  if (s.write_samples) {
    write_samples(rep.output_dir / "samples.csv", xs);
    rep.files.push_back("samples.csv");
  }
  const auto m = sample_moments(xs);
  const auto tm = density_moments(nd.density);
  rep.summary["l1"] = l1;
  rep.summary["kept"] = xs.size();
  rep.summary["below_range"] = h.below;
  rep.summary["above_range"] = h.above;
  rep.summary["sample_mean"] = m.mean;
  rep.summary["sample_variance"] = m.variance;
  rep.summary["target_mean"] = tm.mean;
  rep.summary["target_variance"] = tm.variance;
  if (opt.plots) try_plot(rep, {rep.output_dir / "histogram.csv"}, PlotKind::HistVsDensity, "histogram.svg");
}

void run_sgd_stationary(const ExperimentConfig& c, ExperimentReport& rep, const RunOptions& opt) {
  const auto& s = *c.sgd;
  const NoisyGradientModel gm(s.chain.target, {s.m1}, {s.m2}, s.shape);
  const SampleMatrix samples = with_context("sgd_stationary", [&] { return run_sgd(make_chain(s.chain, c.seed), gm); });
  const StationaryParams params = make_stationary_params({s.m1}, {s.m2}, s.chain.eps);
  const NormalizedDensity nd = with_context("sgd_stationary, building the stationary density",
                                            [&] { return stationary_density(params, s.chain.target); });
  const auto xs = samples.column(0);
  const Histogram h = make_histogram(xs, s.range, s.bins);
  const double l1 = write_histogram(rep.output_dir / "histogram.csv", h, nd.density);
  rep.files.push_back("histogram.csv");
  if (s.write_samples) {
    write_samples(rep.output_dir / "samples.csv", xs);
    rep.files.push_back("samples.csv");
  }
  const double x_star = density_argmax(nd.density, s.range);
  const auto star_bin = std::min<std::size_t>(
      s.bins - 1, static_cast<std::size_t>((x_star - s.range.lo) / h.bin_width()));
  const std::size_t hist_bin = h.argmax();
  const auto m = sample_moments(xs);
  const auto dm = density_moments(nd.density);
  rep.summary["l1"] = l1;
  rep.summary["beta"] = params.beta;
  rep.summary["bias"] = params.bias[0];
  rep.summary["kept"] = xs.size();
  rep.summary["below_range"] = h.below;
  rep.summary["above_range"] = h.above;
  rep.summary["hist_argmax_bin"] = hist_bin;
  rep.summary["hist_argmax_centre"] = 0.5 * (h.edges[hist_bin] + h.edges[hist_bin + 1]);
  rep.summary["density_argmax"] = x_star;
  rep.summary["density_argmax_bin"] = star_bin;
  rep.summary["argmax_bin_distance"] = hist_bin > star_bin ? hist_bin - star_bin : star_bin - hist_bin;
  rep.summary["sample_mean"] = m.mean;
  rep.summary["sample_variance"] = m.variance;
  rep.summary["stationary_mean"] = dm.mean;
  rep.summary["stationary_variance"] = dm.variance;
  if (opt.plots) try_plot(rep, {rep.output_dir / "histogram.csv"}, PlotKind::HistVsDensity, "histogram.svg");
}

void run_sgld_beta(const ExperimentConfig& c, ExperimentReport& rep) {
  const auto& s = *c.sgld;
  const NoisyGradientModel gm(s.chain.target, {s.m1}, {s.m2}, s.shape);
  const NormalizedDensity nd = with_context("sgld_beta, normalizing the target", [&] { return normalize(s.chain.target); });
  const double target_variance = density_moments(nd.density).variance;
  const double eps = s.chain.eps;

  CsvWriter w(rep.output_dir / "sgld_beta.csv", {"variant", "predicted_beta", "empirical_variance", "target_variance"});
  for (std::size_t i = 0; i < s.variants.size(); ++i) {
    const auto& v = s.variants[i];
    SgldConfig cfg{make_chain(s.chain, derive_seed(c.seed, i)), gm, v.diffusion, s.gamma1, s.gamma2};
    const SgldResult res = with_context("sgld_beta, variant '" + v.name + "'", [&] { return run_sgld(cfg); });
    const auto xs = res.samples.column(0);
    const auto m = sample_moments(xs);
    w.row({v.name, res.predicted_beta, m.variance, target_variance});

    // beta from the true gradient-noise moments rather than the trackers
    double x1 = 0.0, x2 = 1.0;
    if (const auto* sk = std::get_if<SgldSkewed>(&v.diffusion)) {
      x1 = sk->noise.declared().m1;
      x2 = sk->noise.declared().m2;
    } else if (std::holds_alternative<SgldAdaptiveTwoPoint>(v.diffusion)) {
      x2 = 1.0 - 0.5 * eps * (s.m2 - s.m1 * s.m1);
    }
    double nominal = std::nan("");
    if (x2 >= 0.0) {
      const auto rho = unified_noise_moments(std::vector<double>{s.m1}, std::vector<double>{s.m2},
                                             std::vector<double>{x1}, std::vector<double>{x2}, eps);
      try {
        nominal = thermodynamic_beta(rho.m_rho1, rho.m_rho2, eps);
      } catch (const SpecError&) {
      }
    }
    rep.summary["variants"][v.name] = {{"predicted_beta", res.predicted_beta},
                                       {"nominal_beta", finite_or_null(nominal)},
                                       {"empirical_mean", m.mean},
                                       {"empirical_variance", m.variance},
                                       {"target_variance", target_variance},
                                       {"final_v", res.final_trackers.v[0]},
                                       {"final_r", res.final_trackers.r[0]}};
  }
  w.close();
  rep.files.push_back("sgld_beta.csv");
}

void run_moment_check(const ExperimentConfig& c, ExperimentReport& rep) {
  const auto& s = *c.moments;
  CsvWriter w(rep.output_dir / "moment_check.csv", {"noise", "order", "empirical", "declared", "z_score", "pass"});
  bool all = true;
  for (std::size_t i = 0; i < s.noises.size(); ++i) {
    const auto& [name, spec] = s.noises[i];
    const auto reports = with_context("moment_check, noise '" + name + "'",
                                      [&] { return verify_moments(spec, s.n, s.orders, derive_seed(c.seed, i)); });
    for (const auto& r : reports) {
      if (r.declared) {
        const bool pass = std::abs(r.z_score) < s.z_threshold;
        all = all && pass;
        w.row({name, static_cast<std::int64_t>(r.order), r.empirical, *r.declared, r.z_score,
               std::string(pass ? "true" : "false")});
      } else {
        w.row({name, static_cast<std::int64_t>(r.order), r.empirical, std::string(), std::string(), std::string()});
      }
    }
  }
  w.close();
  rep.files.push_back("moment_check.csv");
  rep.summary["all_pass"] = all;
}

class ThreadScope {
 public:
  explicit ThreadScope(int n) : saved_(omp_get_max_threads()) {
    if (n > 0) omp_set_num_threads(n);
  }
  ~ThreadScope() { omp_set_num_threads(saved_); }

 private:
  int saved_;
};

}  // namespace

ExperimentReport run_experiment(ExperimentConfig config, const RunOptions& options) {
  if (options.output_dir) {
    config.output_dir = options.output_dir->string();
    config.canonical["output_dir"] = config.output_dir;
  }
  if (options.threads) {
    if (*options.threads < 0) throw ConfigError("threads", "must be non-negative");
    config.threads = *options.threads;
    config.canonical["threads"] = config.threads;
  }
  ThreadScope threads(config.threads);
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport rep;
  rep.config = config.canonical;
  rep.output_dir = config.output_dir;
  rep.summary = json::object();
  fs::create_directories(rep.output_dir);

  if (config.weak_order) run_weak_order(config, rep, options);
  else if (config.sample) run_sample(config, rep, options);
  else if (config.sgd) run_sgd_stationary(config, rep, options);
  else if (config.sgld) run_sgld_beta(config, rep);
  else run_moment_check(config, rep);

  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream out(rep.output_dir / "report.json", std::ios::binary | std::ios::trunc);
  out << rep.to_json().dump(2) << '\n';
  if (!out) throw Error("failed writing " + (rep.output_dir / "report.json").string());
  return rep;
}

ExperimentReport run_config_file(const fs::path& path, const RunOptions& options) {
  return run_experiment(load_config(path), options);
}

}  // namespace weaksde
