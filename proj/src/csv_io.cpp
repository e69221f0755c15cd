#include "nvqpe/csv_io.hpp"

#include <cinttypes>
#include <cstdio>

namespace nvqpe {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string provenance_comment(const Provenance& prov) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# config_hash=%016" PRIx64 " seed=%" PRIu64, prov.config_hash, prov.seed);
  return buf;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, const Provenance& prov) {
  out << provenance_comment(prov) << '\n';
  out << "mode,K,G,F,R,tau0_ns,T_tot_s,V_B_Hz2,eta_f,eta_uT_per_sqrtHz,n_trials,seed,fail_count\n";
  for (const auto& r : result.rows) {
    const auto& p = r.params;
    out << to_string(p.mode) << ',' << p.K << ',' << p.G << ',' << p.F << ',' << p.R << ','
        << num(p.tau0 * 1e9) << ',' << num(r.T_tot) << ',' << num(r.V_B) << ',' << num(r.eta_f) << ','
        << num(r.eta_B * 1e6) << ',' << r.n_trials << ',' << r.seed << ',' << r.fail_count << '\n';
  }
}

nlohmann::json sweep_to_json(const SweepResult& result, const Provenance& prov) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    const auto& p = r.params;
    rows.push_back({{"mode", std::string(to_string(p.mode))},
                    {"K", p.K},
                    {"G", p.G},
                    {"F", p.F},
                    {"R", p.R},
                    {"tau0_ns", p.tau0 * 1e9},
                    {"T_tot_s", r.T_tot},
                    {"V_B_Hz2", r.V_B},
                    {"eta_f", r.eta_f},
                    {"eta_uT_per_sqrtHz", r.eta_B * 1e6},
                    {"n_trials", r.n_trials},
                    {"seed", r.seed},
                    {"fail_count", r.fail_count}});
  }
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, prov.config_hash);
  return {{"config_hash", hash}, {"seed", prov.seed}, {"rows", std::move(rows)}};
}

void write_pl_curve_csv(std::ostream& out, const PLCurve& curve, const Provenance& prov) {
  out << provenance_comment(prov) << '\n';
  out << "t_ns,counts_m0,counts_m1\n";
  for (std::size_t b = 0; b < curve.bin_count(); ++b)
    out << num(static_cast<double>(b) * curve.bin_width * 1e9) << ',' << num(curve.counts_m0[b]) << ','
        << num(curve.counts_m1[b]) << '\n';
}

void write_schedule_csv(std::ostream& out, const Schedule& s, const Provenance& prov) {
  out << provenance_comment(prov) << '\n';
  out << "k,tau_ns,theta_rad,repetitions\n";
  for (const auto& e : s)
    out << e.k << ',' << num(e.tau * 1e9) << ',' << num(e.theta) << ',' << e.repetitions << '\n';
}

void write_posterior_csv(std::ostream& out, const FrequencyDistribution& dist, const Provenance& prov) {
  out << provenance_comment(prov) << '\n';
  out << "f_hz,mass\n";
  char buf[64];
  for (std::size_t j = 0; j < dist.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.10g,%.6e", dist.frequency(j), dist.mass(j));
    out << buf << '\n';
  }
}

}  // namespace nvqpe
