#include "genlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace genlab::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string mesh_svg(const geometry::SpatialMesh& mesh, const std::string& title) {
  constexpr double size = 400.0, pad = 20.0;
  const std::size_t n = mesh.node_count();
  std::vector<std::pair<double, double>> xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u, v;
    if (mesh.space.kind() == geometry::SpaceKind::UnitSquare) {
      u = mesh.positions(i, 0);
      v = mesh.positions(i, 1);
    } else {
      const double x = mesh.positions(i, 0), y = mesh.positions(i, 1), z = mesh.positions(i, 2);
      double phi = std::atan2(y, x);
      if (phi < 0) phi += 2 * std::numbers::pi;
      u = phi / (2 * std::numbers::pi);
      v = 1.0 - std::acos(std::clamp(z, -1.0, 1.0)) / std::numbers::pi;
    }
    xy[i] = {pad + u * (size - 2 * pad), size - pad - v * (size - 2 * pad)};
  }
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"420\" viewBox=\"0 0 400 420\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"400\" height=\"420\" fill=\"#202020\"/>\n";
  out += "<rect x=\"20\" y=\"20\" width=\"360\" height=\"360\" fill=\"none\" stroke=\"#808080\"/>\n";
  for (const auto& [a, b] : mesh.undirected_edges()) {
    out += "<line x1=\"" + num(xy[a].first) + "\" y1=\"" + num(xy[a].second) + "\" x2=\"" +
           num(xy[b].first) + "\" y2=\"" + num(xy[b].second) +
           "\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    out += "<circle cx=\"" + num(xy[i].first) + "\" cy=\"" + num(xy[i].second) +
           "\" r=\"4\" fill=\"#ffffff\"/>\n";
  }
  if (!title.empty()) {
    out += "<text x=\"200\" y=\"405\" text-anchor=\"middle\" fill=\"#ffffff\" font-family=\"sans-serif\" "
           "font-size=\"13\">" + escape_xml(title) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string mse_plot_svg(const train::EvalReport& report, const std::string& split,
                         const std::string& title) {
  std::vector<train::EvalSummary> rows;
  for (const auto& s : report.summary())
    if (s.split == split) rows.push_back(s);
  if (rows.empty()) throw std::invalid_argument("no rows for split '" + split + "'");

  std::vector<std::string> models;
  for (const auto& r : rows)
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);

  std::size_t kmin = SIZE_MAX, kmax = 0;
  double ymin = INFINITY, ymax = 0.0;
  for (const auto& r : rows) {
    if (r.mesh_k > 0) {
      kmin = std::min(kmin, r.mesh_k);
      kmax = std::max(kmax, r.mesh_k);
    }
    ymax = std::max(ymax, r.mean + r.std);
    ymin = std::min(ymin, std::max(r.mean - r.std, r.mean * 0.1));
  }
  if (kmax == 0) kmin = kmax = 1;
  if (kmin == kmax) {
    kmin = kmin > 1 ? kmin - 1 : kmin;
    kmax += 1;
  }
  if (!(ymin > 0.0)) ymin = 1e-12;
  if (!(ymax > ymin)) ymax = ymin * 10.0;
  const double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax));
  const double ly_span = std::max(ly1 - ly0, 1.0);

  constexpr double W = 560, H = 400, L = 70, R = 150, T = 40, B = 50;
  auto px = [&](double k) {
    return L + (k - static_cast<double>(kmin)) / static_cast<double>(kmax - kmin) * (W - L - R);
  };
  auto py = [&](double y) {
    const double ly = std::log10(std::max(y, std::pow(10.0, ly0)));
    return H - B - (ly - ly0) / ly_span * (H - T - B);
  };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"400\" viewBox=\"0 0 560 400\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"560\" height=\"400\" fill=\"#ffffff\"/>\n";
  out += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" +
         num(H - B) + "\" stroke=\"#000000\"/>\n";
  out += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"#000000\"/>\n";
  for (std::size_t k = kmin; k <= kmax; ++k) {
    const double x = px(static_cast<double>(k));
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(H - B + 5) + "\" stroke=\"#000000\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(H - B + 18) + "\" text-anchor=\"middle\">" +
           std::to_string(k) + "</text>\n";
  }
  for (double e = ly0; e <= ly1 + 1e-9; e += 1.0) {
    const double y = py(std::pow(10.0, e));
    out += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(W - R) + "\" y2=\"" +
           num(y) + "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + num(L - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(static_cast<int>(e)) + "</text>\n";
  }
  out += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 12) +
         "\" text-anchor=\"middle\">mesh size k</text>\n";
  out += "<text x=\"18\" y=\"" + num((T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num((T + H - B) / 2) + ")\">test MSE</text>\n";
  if (!title.empty()) {
    out += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape_xml(title) + "</text>\n";
  }

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const char* color = kColors[mi % std::size(kColors)];
    std::vector<train::EvalSummary> pts;
    for (const auto& r : rows)
      if (r.model == models[mi]) pts.push_back(r);
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.mesh_k < b.mesh_k; });
    if (pts.size() == 1 && pts[0].mesh_k == 0) {
      const auto p = pts[0];
      pts = {p, p};
      pts[0].mesh_k = kmin;
      pts[1].mesh_k = kmax;
    }
    std::string upper, lower, line;
    for (const auto& p : pts) {
      const double x = px(static_cast<double>(p.mesh_k));
      upper += num(x) + "," + num(py(p.mean + p.std)) + " ";
      line += num(x) + "," + num(py(p.mean)) + " ";
    }
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      lower += num(px(static_cast<double>(it->mesh_k))) + "," + num(py(it->mean - it->std)) + " ";
    }
    out += "<polygon points=\"" + upper + lower + "\" fill=\"" + color +
           "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    out += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    for (const auto& p : pts) {
      out += "<circle cx=\"" + num(px(static_cast<double>(p.mesh_k))) + "\" cy=\"" + num(py(p.mean)) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(mi);
    out += "<line x1=\"" + num(W - R + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(W - R + 40) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(W - R + 46) + "\" y=\"" + num(ly + 4) + "\">" + escape_xml(models[mi]) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace genlab::svg
