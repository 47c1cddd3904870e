#include "diswot/rank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "diswot/error.hpp"
#include "diswot/rng.hpp"

namespace diswot {

namespace {

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double pearson_raw(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

void validate_series(const PairedSeries& s, std::size_t min_length) {
  if (s.scores.size() != s.targets.size()) {
    throw Error("series lengths differ: " + std::to_string(s.scores.size()) + " scores vs " +
                std::to_string(s.targets.size()) + " targets");
  }
  if (!s.arch_ids.empty() && s.arch_ids.size() != s.scores.size()) {
    throw Error("series has " + std::to_string(s.arch_ids.size()) + " ids for " +
                std::to_string(s.scores.size()) + " values");
  }
  if (s.scores.size() < min_length) {
    throw Error("need at least " + std::to_string(min_length) + " paired values, got " +
                std::to_string(s.scores.size()));
  }
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (std::isnan(s.scores[i]) || std::isnan(s.targets[i])) throw Error("series contains NaN");
  }
  std::set<std::string> ids(s.arch_ids.begin(), s.arch_ids.end());
  if (ids.size() != s.arch_ids.size()) throw Error("series arch ids are not unique");
}

Coefficient kendall_tau(const PairedSeries& s, TauVariant variant) {
  validate_series(s, 2);
  if (constant(s.scores) || constant(s.targets)) return {0.0, true};
  const std::size_t m = s.scores.size();
  long long sum = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const int a = sgn(s.targets[i] - s.targets[j]);
      const int b = sgn(s.scores[i] - s.scores[j]);
      sum += a * b;
      ties_x += a == 0;
      ties_y += b == 0;
    }
  }
  const auto pairs = static_cast<long long>(m * (m - 1) / 2);
  if (variant == TauVariant::A) return {static_cast<double>(sum) / static_cast<double>(pairs), false};
  const double denom = std::sqrt(static_cast<double>(pairs - ties_x) * static_cast<double>(pairs - ties_y));
  return {static_cast<double>(sum) / denom, false};
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Coefficient spearman(const PairedSeries& s) {
  validate_series(s, 3);
  if (constant(s.scores) || constant(s.targets)) return {0.0, true};
  return {pearson_raw(average_ranks(s.targets), average_ranks(s.scores)), false};
}

double pearson(const PairedSeries& s) {
  validate_series(s, 3);
  if (constant(s.scores) || constant(s.targets)) throw Error("pearson: series has zero variance");
  return pearson_raw(s.targets, s.scores);
}

MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

CorrelationReport evaluate_proxy(const std::vector<ScoreRow>& rows, const std::string& proxy,
                                 const AccuracyTable& accuracy, const RankOptions& options) {
  if (options.n_seeds < 1) throw UsageError("number of seeds must be at least 1");
  if (options.sample_size && *options.sample_size < 3) {
    throw UsageError("sample size must be at least 3");
  }
  std::unordered_map<std::string, double> acc(accuracy.begin(), accuracy.end());

  // seed -> rows in file order
  std::map<std::uint64_t, std::vector<const ScoreRow*>> groups;
  for (const auto& r : rows) {
    if (r.proxy == proxy) groups[r.seed].push_back(&r);
  }
  if (groups.empty()) throw Error("no score rows for proxy '" + proxy + "'");

  std::vector<PairedSeries> per_group;
  for (const auto& [seed, group] : groups) {
    PairedSeries s;
    for (const ScoreRow* r : group) {
      const auto it = acc.find(r->arch_id);
      if (it == acc.end()) throw UsageError("arch_id '" + r->arch_id + "' missing from accuracy table");
      s.arch_ids.push_back(r->arch_id);
      // Orient so that larger always means better.
      s.scores.push_back(r->higher_is_better ? r->value : -r->value);
      s.targets.push_back(it->second);
    }
    if (s.scores.size() < 3) {
      throw Error("only " + std::to_string(s.scores.size()) + " joined rows for seed " +
                  std::to_string(seed) + "; need at least 3");
    }
    per_group.push_back(std::move(s));
  }

  CorrelationReport report;
  report.proxy_name = proxy;
  report.n_seeds = options.n_seeds;
  std::vector<double> taus, rhos, rs;
  std::size_t g = 0;
  for (int rep = 0; rep < options.n_seeds; ++rep, ++g) {
    const PairedSeries& full = per_group[g % per_group.size()];
    PairedSeries s = full;
    if (options.sample_size && static_cast<std::size_t>(*options.sample_size) < full.scores.size()) {
      Rng rng(options.seed, static_cast<std::uint64_t>(rep));
      std::vector<std::size_t> idx(full.scores.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const auto k = static_cast<std::size_t>(*options.sample_size);
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      }
      idx.resize(k);
      std::sort(idx.begin(), idx.end());
      s = {};
      for (auto i : idx) {
        s.arch_ids.push_back(full.arch_ids[i]);
        s.scores.push_back(full.scores[i]);
        s.targets.push_back(full.targets[i]);
      }
    }
    report.n_archs = static_cast<int>(s.scores.size());
    const Coefficient tau = kendall_tau(s, options.tau);
    const Coefficient rho = spearman(s);
    taus.push_back(tau.value);
    rhos.push_back(rho.value);
    if (tau.degenerate || rho.degenerate) {
      ++report.degenerate_seeds;
      rs.push_back(0.0);
    } else {
      rs.push_back(pearson(s));
    }
  }
  report.kendall_tau = mean_std(taus);
  report.spearman = mean_std(rhos);
  report.pearson = mean_std(rs);
  return report;
}

std::string format_percent(double coefficient) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", coefficient * 100.0);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string format_mean_std(const MeanStd& m) {
  return format_percent(m.mean) + "±" + format_percent(m.std);
}

void write_report_csv(std::ostream& out, const std::vector<CorrelationReport>& reports) {
  out << "proxy,metric,mean,std,n_seeds,n_archs\n";
  for (const auto& r : reports) {
    const std::pair<const char*, const MeanStd*> metrics[] = {
        {"kendall_tau", &r.kendall_tau}, {"spearman", &r.spearman}, {"pearson", &r.pearson}};
    for (const auto& [name, m] : metrics) {
      out << r.proxy_name << ',' << name << ',' << format_percent(m->mean) << ','
          << format_percent(m->std) << ',' << r.n_seeds << ',' << r.n_archs << '\n';
    }
  }
}

void print_report_table(std::ostream& out, const std::vector<CorrelationReport>& reports) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-16s %-16s %-16s %6s %6s\n", "proxy", "kendall_tau",
                "spearman", "pearson", "seeds", "archs");
  out << line;
  for (const auto& r : reports) {
    // The "±" sign is two bytes in UTF-8, so pad by hand.
    auto cell = [](const MeanStd& m) {
      std::string s = format_mean_std(m);
      const std::size_t visible = s.size() - 1;
      if (visible < 16) s.append(16 - visible, ' ');
      return s;
    };
    out << (r.proxy_name + std::string(r.proxy_name.size() < 12 ? 12 - r.proxy_name.size() : 0, ' '))
        << ' ' << cell(r.kendall_tau) << ' ' << cell(r.spearman) << ' ' << cell(r.pearson);
    std::snprintf(line, sizeof line, " %6d %6d\n", r.n_seeds, r.n_archs);
    out << line;
  }
}

}  // namespace diswot
