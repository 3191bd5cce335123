#include "npspec/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "npspec/error.hpp"

namespace npspec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double radius_at(const std::vector<TrigRadius::Harmonic>& terms, double t) {
  double r = 1.0;
  for (const auto& h : terms) {
    r += h.cos_amp * std::cos(h.m * t) + h.sin_amp * std::sin(h.m * t);
  }
  return r;
}

// Sufficient bound first, grid scan otherwise.
void require_positive_radius(const std::vector<TrigRadius::Harmonic>& terms,
                             const std::string& what) {
  double bound = 0.0;
  int max_m = 1;
  for (const auto& h : terms) {
    bound += std::abs(h.cos_amp) + std::abs(h.sin_amp);
    max_m = std::max(max_m, h.m);
  }
  if (bound < 1.0) return;
  const int samples = std::max(4096, 16 * max_m);
  double min_r = std::numeric_limits<double>::infinity();
  for (int j = 0; j < samples; ++j) {
    min_r = std::min(min_r, radius_at(terms, kTwoPi * j / samples));
  }
  if (!(min_r > 0.0)) {
    throw ConfigError(what + ": radius r(t) must stay positive (min r = " +
                      format_double(min_r) + ")");
  }
}

double parse_real(std::string_view token, std::string_view value) {
  double out = 0.0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (value.empty() || ec != std::errc() || ptr != last || !std::isfinite(out)) {
    throw ConfigError("malformed number in curve token '" + std::string(token) + "'");
  }
  return out;
}

int parse_int(std::string_view token, std::string_view value) {
  int out = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (value.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError("malformed integer in curve token '" + std::string(token) + "'");
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

LameParams::LameParams(double lambda, double mu) : lambda_(lambda), mu_(mu) {
  if (!std::isfinite(lambda) || !std::isfinite(mu)) {
    throw ConfigError("invalid material: Lamé parameters must be finite");
  }
  if (!(mu > 0.0)) {
    throw ConfigError("invalid material: mu must be positive (mu = " + format_double(mu) + ")");
  }
  if (!(2.0 * mu + lambda > 0.0)) {
    throw ConfigError("invalid material: 2 mu + lambda must be positive (2 mu + lambda = " +
                      format_double(2.0 * mu + lambda) + ")");
  }
}

double k0(const LameParams& params) { return params.k0(); }

Curve::Curve(Family family) : family_(std::move(family)) {
  if (const auto* e = std::get_if<Ellipse>(&family_)) {
    if (!std::isfinite(e->a) || !std::isfinite(e->b) || !(e->b > 0.0)) {
      throw ConfigError("ellipse requires b > 0");
    }
    if (e->a < e->b) throw ConfigError("ellipse requires a ≥ b");
  } else if (const auto* tr = std::get_if<TrigRadius>(&family_)) {
    if (tr->harmonics.empty()) throw ConfigError("trig curve needs at least one harmonic");
    std::map<int, TrigRadius::Harmonic> merged;
    for (const auto& h : tr->harmonics) {
      if (h.m < 1) throw ConfigError("trig harmonic index must be >= 1");
      auto& slot = merged.try_emplace(h.m, TrigRadius::Harmonic{h.m, 0.0, 0.0}).first->second;
      slot.cos_amp += h.cos_amp;
      slot.sin_amp += h.sin_amp;
    }
    for (const auto& [m, h] : merged) radius_terms_.push_back(h);
    require_positive_radius(radius_terms_, "trig");
  } else {
    const auto& st = std::get<SmoothTest>(family_);
    if (!(st.beta > 0.0) || !std::isfinite(st.delta) || st.cutoff < 2) {
      throw ConfigError("smoothtest requires beta > 0 and cutoff >= 2");
    }
    for (int m = 2; m <= st.cutoff; ++m) {
      radius_terms_.push_back({m, st.delta * std::pow(static_cast<double>(m), -st.beta), 0.0});
    }
    require_positive_radius(radius_terms_, "smoothtest");
  }
}

std::string Curve::spec() const {
  std::ostringstream os;
  if (const auto* e = std::get_if<Ellipse>(&family_)) {
    os << "ellipse:a=" << format_double(e->a) << ",b=" << format_double(e->b);
  } else if (std::holds_alternative<TrigRadius>(family_)) {
    os << "trig:";
    bool first = true;
    for (const auto& h : radius_terms_) {
      for (const auto& [prefix, value] : {std::pair{'c', h.cos_amp}, std::pair{'s', h.sin_amp}}) {
        if (value == 0.0) continue;
        if (!first) os << ',';
        os << prefix << h.m << '=' << format_double(value);
        first = false;
      }
    }
    if (first) os << "c" << radius_terms_.front().m << "=0";
  } else {
    const auto& st = std::get<SmoothTest>(family_);
    os << "smoothtest:beta=" << format_double(st.beta) << ",delta=" << format_double(st.delta)
       << ",cutoff=" << st.cutoff;
  }
  return os.str();
}

bool Curve::riemann_parametrization() const {
  const auto* e = std::get_if<Ellipse>(&family_);
  return e != nullptr && e->a == e->b;
}

Vec2<double> outward_normal(const Curve& curve, double t) {
  const Vec2<double> d1 = curve.eval(t).d1;
  const double speed = d1.norm();
  if (!(speed >= 1e-12)) {
    throw ConfigError("degenerate tangent at t = " + format_double(t));
  }
  return Vec2<double>(d1.y(), -d1.x()) / speed;
}

std::optional<GrauertRadius> grauert_radius(const Curve& curve) {
  const auto* e = std::get_if<Ellipse>(&curve.family());
  if (e == nullptr) return std::nullopt;
  if (e->a == e->b) return GrauertRadius{std::numeric_limits<double>::infinity()};
  return GrauertRadius{std::log((e->a + e->b) / (e->a - e->b))};
}

GridCheck check_on_grid(const Curve& curve, int n) {
  if (n < 3) throw ConfigError("grid needs at least 3 nodes");
  GridCheck out{std::numeric_limits<double>::infinity(), 0.0};
  Vec2<double> first = curve.eval(0.0).d1;
  Vec2<double> prev = first;
  for (int j = 0; j < n; ++j) {
    const Vec2<double> cur = (j + 1 < n) ? curve.eval(kTwoPi * (j + 1) / n).d1 : first;
    out.min_speed = std::min(out.min_speed, prev.norm());
    out.turning += std::atan2(prev.x() * cur.y() - prev.y() * cur.x(), prev.dot(cur));
    prev = cur;
  }
  if (!(out.min_speed >= 1e-12)) {
    throw ConfigError("curve is not regular on the grid (min |q'| = " +
                      format_double(out.min_speed) + ")");
  }
  if (std::abs(out.turning - kTwoPi) > 1e-8) {
    throw ConfigError("curve is not a counterclockwise simple curve on the grid (turning = " +
                      format_double(out.turning) + ")");
  }
  return out;
}

Curve parse_curve_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("curve spec '" + std::string(spec) + "' lacks a family prefix");
  }
  const auto family = spec.substr(0, colon);
  const auto body = spec.substr(colon + 1);
  if (body.empty()) throw ConfigError("curve spec '" + std::string(spec) + "' has no parameters");

  std::vector<std::pair<std::string_view, std::string_view>> fields;
  for (auto token : split(body, ',')) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("malformed curve token '" + std::string(token) + "'");
    }
    fields.emplace_back(token.substr(0, eq), token.substr(eq + 1));
  }

  auto token_of = [](const auto& f) { return std::string(f.first) + "=" + std::string(f.second); };

  if (family == "ellipse" || family == "smoothtest") {
    const bool is_ellipse = family == "ellipse";
    const std::vector<std::string_view> keys =
        is_ellipse ? std::vector<std::string_view>{"a", "b"}
                   : std::vector<std::string_view>{"beta", "delta", "cutoff"};
    std::map<std::string_view, std::string_view> seen;
    for (const auto& f : fields) {
      if (std::find(keys.begin(), keys.end(), f.first) == keys.end()) {
        throw ConfigError("unknown curve token '" + token_of(f) + "'");
      }
      if (!seen.emplace(f.first, f.second).second) {
        throw ConfigError("duplicate curve token '" + token_of(f) + "'");
      }
    }
    for (auto key : keys) {
      if (!seen.contains(key)) throw ConfigError("missing curve token '" + std::string(key) + "'");
    }
    auto real = [&](std::string_view key) {
      return parse_real(std::string(key) + "=" + std::string(seen[key]), seen[key]);
    };
    if (is_ellipse) return Curve(Ellipse{real("a"), real("b")});
    const int cutoff = parse_int("cutoff=" + std::string(seen["cutoff"]), seen["cutoff"]);
    return Curve(SmoothTest{real("beta"), real("delta"), cutoff});
  }

  if (family == "trig") {
    TrigRadius tr;
    for (const auto& f : fields) {
      const auto key = f.first;
      if (key.size() < 2 || (key[0] != 'c' && key[0] != 's')) {
        throw ConfigError("unknown curve token '" + token_of(f) + "'");
      }
      const int m = parse_int(token_of(f), key.substr(1));
      const double v = parse_real(token_of(f), f.second);
      if (m < 1) throw ConfigError("harmonic index must be >= 1 in token '" + token_of(f) + "'");
      tr.harmonics.push_back(key[0] == 'c' ? TrigRadius::Harmonic{m, v, 0.0}
                                           : TrigRadius::Harmonic{m, 0.0, v});
    }
    return Curve(std::move(tr));
  }

  throw ConfigError("unknown curve family '" + std::string(family) + "'");
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace npspec
