#include "diswot/scoring.hpp"

#include <algorithm>

#include "diswot/error.hpp"
#include "diswot/rng.hpp"

namespace diswot {

namespace {

bool needs_teacher(const std::string& p) {
  return p != "nwot" && p != "params" && p != "flops";
}

std::optional<KdKind> kd_kind_of(const std::string& p) {
  for (KdKind k : kAllKdKinds) {
    if (kd_kind_name(k) == p) return k;
  }
  return std::nullopt;
}

}  // namespace

const std::vector<std::string>& known_proxies() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"diswot", "diswot_ms", "diswot_mr", "nwot", "params", "flops"};
    for (KdKind k : kAllKdKinds) v.emplace_back(kd_kind_name(k));
    return v;
  }();
  return names;
}

void check_proxy_name(const std::string& name) {
  const auto& known = known_proxies();
  if (std::find(known.begin(), known.end(), name) != known.end()) return;
  std::string list;
  for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
  throw UsageError("unknown proxy '" + name + "' (known: " + list + ")");
}

std::uint64_t teacher_seed(std::uint64_t run_seed) { return derive_seed(run_seed, hash_name("teacher")); }
std::uint64_t student_seed(std::uint64_t run_seed) { return derive_seed(run_seed, hash_name("student")); }
std::uint64_t batch_seed(std::uint64_t run_seed) { return derive_seed(run_seed, hash_name("batch")); }

ProxyEvaluator::ProxyEvaluator(const SearchSpace& space, const ArchDescriptor& teacher,
                               Batch batch, ScoringConfig cfg, std::uint64_t run_seed)
    : space_(space), batch_(std::move(batch)), cfg_(std::move(cfg)) {
  if (cfg_.proxies.empty()) throw UsageError("no proxy selected");
  for (const auto& p : cfg_.proxies) check_proxy_name(p);
  if (!(cfg_.temperature > 0.0)) throw UsageError("temperature must be positive");
  student_init_ = {cfg_.init, cfg_.gaussian_std, student_seed(run_seed)};
  if (std::any_of(cfg_.proxies.begin(), cfg_.proxies.end(), needs_teacher)) {
    validate_descriptor(teacher, space_);
    const InitSpec teacher_init{cfg_.init, cfg_.gaussian_std, teacher_seed(run_seed)};
    const NetworkInstance net = build_network(teacher, space_, teacher_init);
    teacher_ = net.forward(batch_.images, batch_.labels);
  }
}

std::vector<ProxyScore> ProxyEvaluator::score(const ArchDescriptor& student) const {
  validate_descriptor(student, space_);
  const bool needs_forward = std::any_of(cfg_.proxies.begin(), cfg_.proxies.end(), [](const auto& p) {
    return p != "params" && p != "flops";
  });
  const bool wants_nwot =
      std::find(cfg_.proxies.begin(), cfg_.proxies.end(), "nwot") != cfg_.proxies.end();

  std::optional<ActivationBundle> bundle;
  std::optional<NwotKernel> nwot;
  if (needs_forward) {
    const NetworkInstance net = build_network(student, space_, student_init_);
    if (wants_nwot) {
      if (batch_.images.dim(0) < 2) throw Error("nwot needs a batch of at least 2");
      nwot.emplace(batch_.images.dim(0));
      const ReluObserver obs = [&nwot](const Tensor& t) { nwot->add(t); };
      bundle = net.forward(batch_.images, batch_.labels, &obs);
    } else {
      bundle = net.forward(batch_.images, batch_.labels);
    }
  }

  std::vector<ProxyScore> out;
  out.reserve(cfg_.proxies.size());
  for (const auto& p : cfg_.proxies) {
    if (p == "params") {
      out.push_back(cost_proxy(CostKind::Params, student, space_));
    } else if (p == "flops") {
      out.push_back(cost_proxy(CostKind::Flops, student, space_));
    } else if (p == "nwot") {
      out.push_back({"nwot", nwot_logdet(nwot->kernel()), true});
    } else if (const auto kind = kd_kind_of(p)) {
      out.push_back(kd_distance(*kind, *teacher_, *bundle, cfg_.temperature));
    } else {
      DiswotOptions o;
      o.use_semantic = p != "diswot_mr";
      o.use_relation = p != "diswot_ms";
      o.weight_source = cfg_.weight_source;
      o.normalization = cfg_.normalization;
      out.push_back(diswot_score(*teacher_, *bundle, o));
    }
  }
  return out;
}

}  // namespace diswot
