#include "sci/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sci/parallel.hpp"

namespace sci::metrics {

namespace {

using nlohmann::json;

void require_same_shape(const VideoCube& a, const VideoCube& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shapes differ (" + std::to_string(a.frames()) + "x" +
                     std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                     std::to_string(b.frames()) + "x" + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

double average(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> gaussian_window(const SsimConfig& c) {
  std::vector<double> g(static_cast<std::size_t>(c.window));
  const double center = (c.window - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < c.window; ++i) {
    const double d = i - center;
    g[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * c.sigma * c.sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid-mode filtering of one frame.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < ow; ++v) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(u) * w + v + i];
      rows[static_cast<std::size_t>(u) * ow + v] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int u = 0; u < oh; ++u) {
    for (int v = 0; v < ow; ++v) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * rows[static_cast<std::size_t>(u + i) * ow + v];
      out[static_cast<std::size_t>(u) * ow + v] = s;
    }
  }
  return out;
}

double frame_ssim(std::span<const float> fa, std::span<const float> fb, int h, int w,
                  const SsimConfig& c, const std::vector<double>& g) {
  const std::size_t n = fa.size();
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = fa[i];
    b[i] = fb[i];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, g);
  const auto mu_b = filter_valid(b, h, w, g);
  const auto s_aa = filter_valid(aa, h, w, g);
  const auto s_bb = filter_valid(bb, h, w, g);
  const auto s_ab = filter_valid(ab, h, w, g);
  const double c1 = (c.k1 * c.data_range) * (c.k1 * c.data_range);
  const double c2 = (c.k2 * c.data_range) * (c.k2 * c.data_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

std::uint32_t quantize(double x, int kappa) {
  const double max = static_cast<double>((1u << kappa) - 1u);
  return static_cast<std::uint32_t>(std::floor(max * std::clamp(x, 0.0, 1.0) + 0.5));
}

json scores_json(const FrameScores& s) { return {{"per_frame", s.per_frame}, {"mean", s.mean}}; }

}  // namespace

FrameScores psnr(const VideoCube& a, const VideoCube& b) {
  require_same_shape(a, b, "psnr");
  FrameScores out;
  for (int t = 0; t < a.frames(); ++t) {
    const auto fa = a.frame(t);
    const auto fb = b.frame(t);
    double se = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      const double d = static_cast<double>(fa[i]) - static_cast<double>(fb[i]);
      se += d * d;
    }
    const double mse = se / static_cast<double>(fa.size());
    out.per_frame.push_back(mse == 0.0 ? kPsnrCap : std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse)));
  }
  out.mean = average(out.per_frame);
  return out;
}

FrameScores ssim(const VideoCube& a, const VideoCube& b, const SsimConfig& config) {
  require_same_shape(a, b, "ssim");
  if (a.height() < config.window || a.width() < config.window) {
    throw std::invalid_argument("ssim: frame " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " is smaller than the " +
                                std::to_string(config.window) + "x" + std::to_string(config.window) +
                                " window");
  }
  const auto g = gaussian_window(config);
  FrameScores out;
  out.per_frame.resize(static_cast<std::size_t>(a.frames()));
  parallel_for(static_cast<std::size_t>(a.frames()), [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const int f = static_cast<int>(t);
      out.per_frame[t] = frame_ssim(a.frame(f), b.frame(f), a.height(), a.width(), config, g);
    }
  });
  out.mean = average(out.per_frame);
  return out;
}

DynamicRangeReport dynamic_range_report(const VideoCube& reconstruction, const VideoCube& reference,
                                        int kappa) {
  require_same_shape(reconstruction, reference, "dynamic_range_report");
  if (kappa < 1 || kappa > 16) throw std::invalid_argument("kappa must be in [1, 16]");
  DynamicRangeReport report;
  report.kappa = kappa;
  std::set<std::uint32_t> all_ref, all_rec;
  std::array<std::set<std::uint32_t>, 10> dec_ref, dec_rec;
  double err = 0.0;
  const auto rec = reconstruction.data();
  const auto ref = reference.data();
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const std::uint32_t qr = quantize(ref[i], kappa);
    const std::uint32_t qx = quantize(rec[i], kappa);
    all_ref.insert(qr);
    all_rec.insert(qx);
    const double level = std::clamp(static_cast<double>(ref[i]), 0.0, 1.0);
    const auto d = static_cast<std::size_t>(std::min(9.0, std::floor(level * 10.0)));
    dec_ref[d].insert(qr);
    dec_rec[d].insert(qx);
    report.deciles[d].pixels += 1;
    err += std::abs(static_cast<double>(qx) - static_cast<double>(qr));
  }
  report.reference_levels = all_ref.size();
  report.reconstructed_levels = all_rec.size();
  report.mean_abs_level_error = ref.empty() ? 0.0 : err / static_cast<double>(ref.size());
  for (std::size_t d = 0; d < 10; ++d) {
    report.deciles[d].low = static_cast<double>(d) / 10.0;
    report.deciles[d].high = static_cast<double>(d + 1) / 10.0;
    report.deciles[d].reference_levels = dec_ref[d].size();
    report.deciles[d].reconstructed_levels = dec_rec[d].size();
  }
  return report;
}

std::string DynamicRangeReport::to_json() const {
  json rows = json::array();
  for (const auto& d : deciles) {
    rows.push_back({{"low", d.low},
                    {"high", d.high},
                    {"pixels", d.pixels},
                    {"reference_levels", d.reference_levels},
                    {"reconstructed_levels", d.reconstructed_levels}});
  }
  json j{{"kappa", kappa},
         {"reference_levels", reference_levels},
         {"reconstructed_levels", reconstructed_levels},
         {"mean_abs_level_error", mean_abs_level_error},
         {"deciles", rows}};
  return j.dump(2);
}

std::string DynamicRangeReport::to_csv() const {
  std::ostringstream out;
  out << "decile,low,high,pixels,reference_levels,reconstructed_levels\n";
  for (std::size_t d = 0; d < deciles.size(); ++d) {
    const auto& row = deciles[d];
    out << d << ',' << row.low << ',' << row.high << ',' << row.pixels << ',' << row.reference_levels
        << ',' << row.reconstructed_levels << '\n';
  }
  return out.str();
}

QualityReport evaluate_quality(const std::vector<VideoCube>& reconstructions,
                               const std::vector<VideoCube>& references, const SsimConfig& config) {
  if (reconstructions.size() != references.size() || references.empty()) {
    throw std::invalid_argument("evaluate_quality needs matching, non-empty video lists");
  }
  QualityReport report;
  report.videos = references.size();
  const auto frames = static_cast<std::size_t>(references.front().frames());
  report.psnr.per_frame.assign(frames, 0.0);
  report.ssim.per_frame.assign(frames, 0.0);
  for (std::size_t k = 0; k < references.size(); ++k) {
    if (static_cast<std::size_t>(references[k].frames()) != frames) {
      throw ShapeError("evaluate_quality: videos have different frame counts");
    }
    const auto p = psnr(reconstructions[k], references[k]);
    const auto s = ssim(reconstructions[k], references[k], config);
    for (std::size_t t = 0; t < frames; ++t) {
      report.psnr.per_frame[t] += p.per_frame[t];
      report.ssim.per_frame[t] += s.per_frame[t];
    }
  }
  const double n = static_cast<double>(references.size());
  for (std::size_t t = 0; t < frames; ++t) {
    report.psnr.per_frame[t] /= n;
    report.ssim.per_frame[t] /= n;
  }
  report.psnr.mean = average(report.psnr.per_frame);
  report.ssim.mean = average(report.ssim.per_frame);
  return report;
}

std::string QualityReport::to_json() const {
  json j{{"videos", videos}, {"psnr", scores_json(psnr)}, {"ssim", scores_json(ssim)}};
  return j.dump(2);
}

std::string QualityReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "frame,psnr,ssim\n";
  for (std::size_t t = 0; t < psnr.per_frame.size(); ++t) {
    out << t << ',' << psnr.per_frame[t] << ',' << ssim.per_frame[t] << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace sci::metrics
