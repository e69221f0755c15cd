#include "nvqpe/pipeline.hpp"

#include <cmath>
#include <cstdio>

#include "nvqpe/errors.hpp"
#include "nvqpe/inference.hpp"
#include "nvqpe/protocol.hpp"

namespace nvqpe {

PhotodynamicsReport photodynamics_report(const RunConfig& cfg) {
  const auto& ph = cfg.photodynamics;
  const RateConstants c = rate_constants(cfg);
  PhotodynamicsReport rep;
  rep.curve = pl_curve(c, ph.horizon_ns * 1e-9, ph.bin_width_ns * 1e-9, ph.dt_ns * 1e-9);
  rep.polarization = initial_polarization(c, ph.dt_ns * 1e-9);

  const bool dark = rep.curve.cumulative_m0.back() + rep.curve.cumulative_m1.back() == 0.0;
  if (dark) {
    rep.warnings.push_back("curves carry no detections (collection_eff = 0); click probabilities are zero");
    return rep;
  }
  rep.t_cut = ph.t_cut_ns ? *ph.t_cut_ns * 1e-9 : optimize_cutoff(rep.curve);
  rep.p_click_m0 = detection_probability(rep.curve, SpinPreparation::m0, *rep.t_cut);
  rep.p_click_m1 = detection_probability(rep.curve, SpinPreparation::m1, *rep.t_cut);
  try {
    rep.counting = DetectionModel::totals(rep.p_click_m0, rep.p_click_m1);
    rep.binned = bin_probabilities(rep.curve, time_binning(cfg));
  } catch (const RangeError& e) {
    rep.warnings.push_back(std::string("detection model invalid: ") + e.what());
  }
  return rep;
}

ObservationModels observation_models(const RunConfig& cfg) {
  if (cfg.detection.source == "fixed")
    return ObservationModels::counting_only(
        DetectionModel::totals(cfg.detection.p_click_m0, cfg.detection.p_click_m1));
  const PhotodynamicsReport rep = photodynamics_report(cfg);
  if (!rep.counting) throw ConfigError("photodynamics", "curves do not yield a valid detection model");
  return ObservationModels::from_curve(rep.curve, *rep.t_cut, time_binning(cfg));
}

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double max_abs_diff(const FrequencyDistribution& a, const FrequencyDistribution& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a.mass(j) - b.mass(j)));
  return m;
}

double mass_error(const FrequencyDistribution& d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) s += d.mass(j);
  return std::abs(s - 1.0);
}

}  // namespace

std::vector<CheckResult> run_self_checks(const RunConfig& cfg) {
  std::vector<CheckResult> out;
  ProtocolParams base = protocol_params(cfg);

  {
    const RunConfig again = parse_config(to_json(cfg));
    out.push_back({"config round-trip", again == cfg, again == cfg ? "identical" : "differs after reparse"});
  }

  struct Anchor {
    int G, F;
    long R;
    double expected;
  };
  for (const Anchor& a : {Anchor{15, 1, 2500, 1.008}, Anchor{9, 9, 3000, 2.35}, Anchor{9, 9, 50000, 39.2}}) {
    ProtocolParams p = base;
    p.K = 6;
    p.G = a.G;
    p.F = a.F;
    p.R = a.R;
    const double t = total_time(p);
    const bool ok = std::abs(t - a.expected) <= 0.005 * a.expected;
    char name[96];
    std::snprintf(name, sizeof name, "T_tot anchor K=6 G=%d F=%d R=%ld", a.G, a.F, a.R);
    out.push_back({name, ok, fmt("T_tot = %.4g s (reference %.4g s, tolerance 0.5%%)", t, a.expected)});
  }

  {
    bool ok = true;
    std::string detail = "closed form equals schedule sum over K<=10, G<=20, F<=10";
    for (int K = 0; K <= 10 && ok; ++K)
      for (int G = 1; G <= 20 && ok; ++G)
        for (int F = 0; F <= 10 && ok; ++F) {
          ProtocolParams p = base;
          p.K = K;
          p.G = G;
          p.F = F;
          p.R = 7;
          const Schedule s = schedule(p);
          std::int64_t ticks = 0;
          for (const auto& e : s) ticks += (std::int64_t{1} << e.k);
          if (ticks != evolution_ticks(p) || static_cast<std::int64_t>(s.size()) != setting_count(p) ||
              std::abs(schedule_time(s, p.overhead_per_ramsey) - total_time(p)) > 1e-12 * total_time(p)) {
            ok = false;
            detail = fmt("mismatch at K=%g G=%g", K, G);
          }
        }
    out.push_back({"schedule time vs closed form", ok, detail});
  }

  {
    const RateMatrix m = build_rate_matrix(rate_constants(cfg));
    double worst = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 5; ++i) s += m[i][j];
      worst = std::max(worst, std::abs(s));
    }
    out.push_back({"rate matrix column sums", worst <= 1e-12 * 1e8, fmt("max |column sum| = %.3g 1/s", worst)});
  }

  {
    const DetectionModel dm = DetectionModel::totals(0.03, 0.02);
    const RamseySetting s{4.0 * base.tau0, 0.7, base.t2_star};
    const std::size_t n = 1024;

    auto a = uniform_prior(base.tau0, n), b = a;
    update_click(a, 1, s, dm);
    update_batch_exact(b, {1, 1, s}, dm);
    const double d1 = max_abs_diff(a, b);
    out.push_back({"exact batch R=1 equals click update", d1 == 0.0, fmt("max diff %.3g", d1)});

    auto c = uniform_prior(base.tau0, n), e = c;
    for (int i = 0; i < 3; ++i) update_click(c, 1, s, dm);
    for (int i = 0; i < 97; ++i) update_click(c, 0, s, dm);
    update_batch_exact(e, {3, 100, s}, dm);
    const double d2 = max_abs_diff(c, e);
    out.push_back({"sequential clicks equal exact batch", d2 <= 1e-9, fmt("max diff %.3g", d2)});

    const DetectionModel single = DetectionModel::from_bins({{{0.0, 320e-9}, 0.03, 0.02}});
    auto g = uniform_prior(base.tau0, n), h = g;
    update_batch_gaussian(g, {60, 2500, s}, dm);
    update_binned_gaussian(h, {{60}, 2500, s}, single);
    const double d3 = max_abs_diff(g, h);
    out.push_back({"single-bin binned update equals batch update", d3 == 0.0, fmt("max diff %.3g", d3)});

    const double worst = std::max({mass_error(a), mass_error(b), mass_error(c), mass_error(e), mass_error(g),
                                   mass_error(h)});
    out.push_back({"posterior normalization", worst <= 1e-9, fmt("max |sum - 1| = %.3g", worst)});
  }

  out.push_back({"longest interaction within T2*", true,
                 base.exceeds_coherence() ? "warning: 2^K tau0 exceeds T2*" : "2^K tau0 <= T2*"});
  return out;
}

}  // namespace nvqpe
