#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <json.hpp>
#include <map>

#include "orbits/pipeline.hpp"
#include "orbits/taylor.hpp"

namespace orbits {

namespace {

constexpr double kSize = 640.0;
constexpr double kMargin = 70.0;
constexpr double kPlot = kSize - 2 * kMargin;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// class names are restricted to [a-z0-9-]
std::string css_class(const std::string& tag) {
  std::string out = "src-";
  for (char c : tag) out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '-';
  return out;
}

std::string source_of(const SolutionRecord& r) {
  for (const auto& [key, value] : r.extra) {
    if (key != "source") continue;
    const auto j = nlohmann::json::parse(value);
    if (j.is_string()) return j.get<std::string>();
  }
  return "new";
}

std::string svg_open() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kSize) + "\" height=\"" + num(kSize) +
         "\" viewBox=\"0 0 " + num(kSize) + " " + num(kSize) + "\">\n";
}

class OrbitSampler : public StepObserver<Real> {
 public:
  OrbitSampler(const Real& period, int samples, OrbitSamples& out)
      : period_(period), samples_(samples), out_(out), buffer_(VecX<Real>::Constant(kStateDim, zero_like(period))) {}

  void observe(const TaylorStep<Real>& step) override {
    const Real end = step.t0 + step.h;
    while (next_ <= samples_) {
      const Real t = period_ * next_ / samples_;
      if (t > end) break;
      Real tau = t - step.t0;
      if (tau < 0) tau = zero_like(tau);
      step.eval_into(tau, buffer_, kStateDim);
      out_.t.push_back(t.to_double());
      out_.xy.push_back({buffer_(x_index(0)).to_double(), buffer_(y_index(0)).to_double(),
                         buffer_(x_index(1)).to_double(), buffer_(y_index(1)).to_double(),
                         buffer_(x_index(2)).to_double(), buffer_(y_index(2)).to_double()});
      ++next_;
    }
  }

 private:
  Real period_;
  int samples_;
  OrbitSamples& out_;
  VecX<Real> buffer_;
  int next_ = 0;
};

}  // namespace

std::string render_scatter(const std::vector<SolutionRecord>& records, const GridSpec& window) {
  const ArithmeticContext ctx = make_context(32);
  const double x0 = ctx.parse(window.vx_lo).to_double(), x1 = ctx.parse(window.vx_hi).to_double();
  const double y0 = ctx.parse(window.vy_lo).to_double(), y1 = ctx.parse(window.vy_hi).to_double();
  auto px = [&](double vx) { return kMargin + (vx - x0) / (x1 - x0) * kPlot; };
  auto py = [&](double vy) { return kMargin + kPlot - (vy - y0) / (y1 - y0) * kPlot; };

  std::map<std::string, std::vector<const SolutionRecord*>> by_source;
  for (const auto& r : records) by_source[source_of(r)].push_back(&r);

  static const char* const palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::string svg = svg_open();
  svg += "<style>\n";
  std::size_t k = 0;
  for (const auto& [tag, members] : by_source) {
    const std::string colour = tag == "new" ? "#d62728" : tag == "reference" ? "#1f77b4" : palette[k % 6];
    svg += "." + css_class(tag) + " { fill: " + colour + "; }\n";
    ++k;
  }
  svg += "</style>\n";
  svg += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(kPlot) + "\" height=\"" +
         num(kPlot) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4, fy = y0 + (y1 - y0) * t / 4;
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", fx);
    svg += "<line x1=\"" + num(px(fx)) + "\" y1=\"" + num(kMargin + kPlot) + "\" x2=\"" + num(px(fx)) + "\" y2=\"" +
           num(kMargin + kPlot + 6) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kMargin + kPlot + 22) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + label + "</text>\n";
    std::snprintf(label, sizeof label, "%.3g", fy);
    svg += "<line x1=\"" + num(kMargin - 6) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(kMargin) + "\" y2=\"" +
           num(py(fy)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(kMargin - 10) + "\" y=\"" + num(py(fy) + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + label + "</text>\n";
  }
  svg += "<text x=\"" + num(kMargin + kPlot / 2) + "\" y=\"" + num(kSize - 20) +
         "\" font-size=\"14\" text-anchor=\"middle\">vx</text>\n";
  svg += "<text x=\"20\" y=\"" + num(kMargin + kPlot / 2) + "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         num(kMargin + kPlot / 2) + ")\">vy</text>\n";

  for (const auto& [tag, members] : by_source) {
    svg += "<g class=\"" + css_class(tag) + "\">\n";
    for (const SolutionRecord* r : members) {
      const double vx = ctx.parse(r->vx).to_double(), vy = ctx.parse(r->vy).to_double();
      if (vx < x0 || vx > x1 || vy < y0 || vy > y1) continue;
      svg += "<circle cx=\"" + num(px(vx)) + "\" cy=\"" + num(py(vy)) + "\" r=\"3\"/>\n";
    }
    svg += "</g>\n";
  }
  double ly = kMargin + 14;
  for (const auto& [tag, members] : by_source) {
    svg += "<circle class=\"" + css_class(tag) + "\" cx=\"" + num(kMargin + kPlot - 90) + "\" cy=\"" + num(ly - 4) +
           "\" r=\"4\"/>\n";
    svg += "<text x=\"" + num(kMargin + kPlot - 80) + "\" y=\"" + num(ly) + "\" font-size=\"12\">" + escape(tag) +
           " (" + std::to_string(members.size()) + ")</text>\n";
    ly += 16;
  }
  svg += "</svg>\n";
  return svg;
}

OrbitSamples sample_orbit(const SolutionRecord& r, const PrecisionConfig& cfg, int samples) {
  if (samples < 1) throw JobError("need at least one orbit sample");
  const ArithmeticContext ctx = cfg.context();
  const Real T = ctx.parse(r.T);
  if (!(T > 0)) throw JobError("record has a non-positive period");
  OrbitSamples out;
  OrbitSampler sampler(T, samples, out);
  StepObserver<Real>* observers[] = {&sampler};
  const auto res = integrate(initial_state(VelocityPair<Real>{ctx.parse(r.vx), ctx.parse(r.vy)}), T, cfg, observers);
  if (!res.ok()) throw JobError(std::string("orbit integration failed: ") + to_string(res.status));
  if (out.t.size() != static_cast<std::size_t>(samples) + 1) throw JobError("orbit sampling incomplete");
  return out;
}

std::string render_orbit(const OrbitSamples& s) {
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  bool first = true;
  for (const auto& p : s.xy) {
    for (int b = 0; b < 3; ++b) {
      const double x = p[2 * b], y = p[2 * b + 1];
      if (first) {
        lo_x = hi_x = x;
        lo_y = hi_y = y;
        first = false;
      }
      lo_x = std::min(lo_x, x);
      hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y);
      hi_y = std::max(hi_y, y);
    }
  }
  // equal aspect ratio, centred
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9}) * 1.1;
  const double cx = (lo_x + hi_x) / 2, cy = (lo_y + hi_y) / 2;
  auto px = [&](double x) { return kMargin + ((x - cx) / span + 0.5) * kPlot; };
  auto py = [&](double y) { return kMargin + (0.5 - (y - cy) / span) * kPlot; };

  static const char* const colour[] = {"#d62728", "#1f77b4", "#2ca02c"};
  static const char* const dash[] = {"", " stroke-dasharray=\"8 4\"", " stroke-dasharray=\"2 3\""};
  std::string svg = svg_open();
  svg += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(kPlot) + "\" height=\"" +
         num(kPlot) + "\" fill=\"none\" stroke=\"#888888\"/>\n";
  for (int b = 0; b < 3; ++b) {
    svg += "<polyline id=\"body" + std::to_string(b + 1) + "\" fill=\"none\" stroke=\"" + colour[b] +
           "\" stroke-width=\"1.5\"" + dash[b] + " points=\"";
    for (std::size_t k = 0; k < s.xy.size(); ++k) {
      if (k) svg += ' ';
      svg += num(px(s.xy[k][2 * b])) + "," + num(py(s.xy[k][2 * b + 1]));
    }
    svg += "\"/>\n";
  }
  for (int b = 0; b < 3 && !s.xy.empty(); ++b) {
    svg += "<circle cx=\"" + num(px(s.xy.front()[2 * b])) + "\" cy=\"" + num(py(s.xy.front()[2 * b + 1])) +
           "\" r=\"4\" fill=\"" + colour[b] + "\"/>\n";
  }
  svg += "<text x=\"" + num(kMargin + kPlot / 2) + "\" y=\"" + num(kSize - 20) +
         "\" font-size=\"14\" text-anchor=\"middle\">x</text>\n";
  svg += "<text x=\"20\" y=\"" + num(kMargin + kPlot / 2) + "\" font-size=\"14\" text-anchor=\"middle\">y</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace orbits
