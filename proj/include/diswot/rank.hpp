#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diswot/data.hpp"

namespace diswot {

struct PairedSeries {
  std::vector<std::string> arch_ids;
  std::vector<double> scores;
  std::vector<double> targets;
};

void validate_series(const PairedSeries& s, std::size_t min_length);

struct Coefficient {
  double value = 0.0;
  bool degenerate = false;  // a series was constant
};

enum class TauVariant { A, B };

Coefficient kendall_tau(const PairedSeries& s, TauVariant variant = TauVariant::A);
Coefficient spearman(const PairedSeries& s);
double pearson(const PairedSeries& s);

// 1-based ranks; ties receive the average rank.
std::vector<double> average_ranks(const std::vector<double>& v);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std over seeds
};

struct CorrelationReport {
  std::string proxy_name;
  MeanStd kendall_tau;
  MeanStd spearman;
  MeanStd pearson;
  int n_seeds = 0;
  int n_archs = 0;
  int degenerate_seeds = 0;
};

struct RankOptions {
  std::optional<int> sample_size;  // empty: all joined archs
  int n_seeds = 1;
  std::uint64_t seed = 0;
  TauVariant tau = TauVariant::A;
};

// Joins score rows for one proxy with the accuracy table. Rows are grouped by
// their seed column; repetition r uses group r mod G and draws its sample
// from its own stream.
CorrelationReport evaluate_proxy(const std::vector<ScoreRow>& rows, const std::string& proxy,
                                 const AccuracyTable& accuracy, const RankOptions& options);

MeanStd mean_std(const std::vector<double>& v);

// "73.98" and "73.98±1.23"
std::string format_percent(double coefficient);
std::string format_mean_std(const MeanStd& m);

// proxy,metric,mean,std,n_seeds,n_archs with percent values.
void write_report_csv(std::ostream& out, const std::vector<CorrelationReport>& reports);
void print_report_table(std::ostream& out, const std::vector<CorrelationReport>& reports);

}  // namespace diswot
