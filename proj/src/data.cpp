#include "diswot/data.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "diswot/cifar_norm.hpp"
#include "diswot/error.hpp"
#include "diswot/rng.hpp"

namespace diswot {

namespace {

constexpr std::uint64_t kSampleStream = 0xC1FA;
constexpr std::uint64_t kSynthImageStream = 0x5157;
constexpr std::uint64_t kSynthLabelStream = 0x5158;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

double parse_double(const std::string& s, const std::string& ctx) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw Error(ctx + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& ctx) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw Error(ctx + ": cannot parse integer '" + s + "'");
  }
  return v;
}

// Reads lines, strips a trailing '\r', checks the header.
std::vector<std::pair<std::size_t, std::string>> read_body(std::istream& in,
                                                           const std::string& source,
                                                           const std::string& header) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw Error(source + ": empty file (expected header '" + header + "')");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != header) {
    throw Error(where(source, lineno) + ": bad header '" + line + "', expected '" + header + "'");
  }
  std::vector<std::pair<std::size_t, std::string>> body;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    body.emplace_back(lineno, line);
  }
  if (body.empty()) throw Error(source + ": no data rows after header");
  return body;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Batch load_cifar_batch(const std::filesystem::path& path, int batch_size, std::uint64_t seed,
                       CifarVariant variant) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CIFAR file '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::size_t size10 = kCifarPixels + 1, size100 = kCifarPixels + 2;
  if (variant == CifarVariant::Auto) {
    const bool fits10 = !bytes.empty() && bytes.size() % size10 == 0;
    const bool fits100 = !bytes.empty() && bytes.size() % size100 == 0;
    if (fits10 == fits100) {
      throw Error("CIFAR file '" + path.string() + "' (" + std::to_string(bytes.size()) +
                  " bytes) matches " + (fits10 ? "both" : "neither") +
                  " record size; specify the variant");
    }
    variant = fits10 ? CifarVariant::Cifar10 : CifarVariant::Cifar100;
  }
  const std::size_t record = variant == CifarVariant::Cifar10 ? size10 : size100;
  if (bytes.empty() || bytes.size() % record != 0) {
    throw Error("CIFAR file '" + path.string() + "' is truncated: " + std::to_string(bytes.size()) +
                " bytes is not a multiple of the " + std::to_string(record) + "-byte record");
  }
  const std::size_t count = bytes.size() / record;
  if (batch_size < 1 || static_cast<std::size_t>(batch_size) > count) {
    throw Error("batch size " + std::to_string(batch_size) + " exceeds the " +
                std::to_string(count) + " records in '" + path.string() + "'");
  }
  // Partial Fisher-Yates: the first batch_size slots are the sample.
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, kSampleStream);
  for (int i = 0; i < batch_size; ++i) {
    const std::size_t j = i + rng.below(count - i);
    std::swap(idx[i], idx[j]);
  }
  const auto& mean = variant == CifarVariant::Cifar10 ? cifar_norm::kCifar10Mean : cifar_norm::kCifar100Mean;
  const auto& stdv = variant == CifarVariant::Cifar10 ? cifar_norm::kCifar10Std : cifar_norm::kCifar100Std;
  const std::size_t label_bytes = record - kCifarPixels;

  Batch batch;
  batch.images = Tensor({batch_size, 3, 32, 32});
  batch.labels.resize(batch_size);
  batch.source = BatchSource::CifarFile;
  batch.seed = seed;
  for (int i = 0; i < batch_size; ++i) {
    const unsigned char* rec = bytes.data() + idx[i] * record;
    batch.labels[i] = rec[label_bytes - 1];
    const unsigned char* px = rec + label_bytes;
    double* dst = batch.images.data() + static_cast<std::size_t>(i) * kCifarPixels;
    for (std::size_t p = 0; p < kCifarPixels; ++p) {
      const std::size_t c = p / 1024;
      dst[p] = (px[p] / 255.0 - mean[c]) / stdv[c];
    }
  }
  return batch;
}

Batch synth_batch(int batch_size, int channels, int height, int width, int n_classes,
                  std::uint64_t seed) {
  if (batch_size < 2) throw Error("synthetic batch needs at least 2 samples");
  if (n_classes < 1) throw Error("synthetic batch needs at least 1 class");
  Batch batch;
  batch.images = Tensor({batch_size, channels, height, width});
  Rng img(seed, kSynthImageStream);
  for (double& v : batch.images.values()) v = img.normal();
  Rng lab(seed, kSynthLabelStream);
  batch.labels.resize(batch_size);
  for (int& l : batch.labels) l = static_cast<int>(lab.below(static_cast<std::uint64_t>(n_classes)));
  batch.source = BatchSource::Synthetic;
  batch.seed = seed;
  return batch;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kScoreHeader = "arch_id,proxy,value,higher_is_better,seed";
constexpr const char* kAccuracyHeader = "arch_id,accuracy";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw Error(std::string(what) + " '" + s + "' contains a CSV separator");
  }
}
}  // namespace

void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows) {
  out << kScoreHeader << '\n';
  for (const auto& r : rows) {
    check_field(r.arch_id, "arch_id");
    check_field(r.proxy, "proxy");
    out << r.arch_id << ',' << r.proxy << ',' << format_double(r.value) << ','
        << (r.higher_is_better ? "true" : "false") << ',' << r.seed << '\n';
  }
}

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows) {
  auto out = open_out(path);
  write_scores_csv(out, rows);
}

std::vector<ScoreRow> read_scores_csv(std::istream& in, const std::string& source) {
  std::vector<ScoreRow> rows;
  std::set<std::tuple<std::string, std::string, std::uint64_t>> seen;
  for (const auto& [lineno, line] : read_body(in, source, kScoreHeader)) {
    const std::string ctx = where(source, lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 5) {
      throw Error(ctx + ": expected 5 fields, got " + std::to_string(f.size()));
    }
    ScoreRow r;
    r.arch_id = f[0];
    r.proxy = f[1];
    if (r.arch_id.empty() || r.proxy.empty()) throw Error(ctx + ": empty arch_id or proxy");
    r.value = parse_double(f[2], ctx);
    if (f[3] == "true" || f[3] == "1") {
      r.higher_is_better = true;
    } else if (f[3] == "false" || f[3] == "0") {
      r.higher_is_better = false;
    } else {
      throw Error(ctx + ": higher_is_better must be true/false, got '" + f[3] + "'");
    }
    r.seed = parse_u64(f[4], ctx);
    if (!seen.emplace(r.arch_id, r.proxy, r.seed).second) {
      throw Error(ctx + ": duplicated arch_id '" + r.arch_id + "' for proxy '" + r.proxy +
                  "' and seed " + std::to_string(r.seed));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_scores_csv(in, path.string());
}

void write_accuracy_csv(const std::filesystem::path& path, const AccuracyTable& table) {
  auto out = open_out(path);
  out << kAccuracyHeader << '\n';
  for (const auto& [id, acc] : table) {
    check_field(id, "arch_id");
    out << id << ',' << format_double(acc) << '\n';
  }
}

AccuracyTable read_accuracy_csv(std::istream& in, const std::string& source) {
  AccuracyTable table;
  std::set<std::string> seen;
  for (const auto& [lineno, line] : read_body(in, source, kAccuracyHeader)) {
    const std::string ctx = where(source, lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw Error(ctx + ": expected 2 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw Error(ctx + ": empty arch_id");
    if (!seen.insert(f[0]).second) throw Error(ctx + ": duplicated arch_id '" + f[0] + "'");
    table.emplace_back(f[0], parse_double(f[1], ctx));
  }
  return table;
}

AccuracyTable load_accuracy_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_accuracy_csv(in, path.string());
}

}  // namespace diswot
