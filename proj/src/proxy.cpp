#include "diswot/proxy.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "diswot/error.hpp"
#include "diswot/kernels.hpp"
#include "diswot/ops.hpp"

namespace diswot {

namespace {

// Row-major [n, d] view of a tensor whose first extent is n.
struct Rows {
  const double* data;
  std::int64_t n, d;
};

Rows as_rows(const Tensor& t) {
  return {t.data(), t.dim(0), static_cast<std::int64_t>(t.size()) / t.dim(0)};
}

}  // namespace

GradCamMaps gradcam_maps(const ActivationBundle& bundle, WeightSource source) {
  const Tensor& a = bundle.pre_gap_map;
  const Tensor& w = source == WeightSource::FcWeights ? bundle.fc_weight : bundle.fc_weight_grad;
  if (a.rank() != 4 || w.rank() != 2) throw Error("gradcam_maps: expected [B,C,H,W] and [N,C]");
  const auto b = a.dim(0), c = a.dim(1), hw = a.dim(2) * a.dim(3), n = w.dim(0);
  if (w.dim(1) != c) {
    throw Error("gradcam_maps: weight " + shape_string(w.shape()) + " does not match " +
                std::to_string(c) + " activation channels");
  }
  // Batch-mean activation per channel: [C, HW].
  std::vector<double> mean(static_cast<std::size_t>(c * hw), 0.0);
  for (std::int64_t i = 0; i < b; ++i) {
    kernels::axpy(1.0 / static_cast<double>(b), a.data() + i * c * hw, mean.data(), c * hw);
  }
  GradCamMaps out{Tensor({n, hw})};
  kernels::gemm({static_cast<std::size_t>(n), static_cast<std::size_t>(hw),
                 static_cast<std::size_t>(c), w.data(), static_cast<std::size_t>(c), mean.data(),
                 static_cast<std::size_t>(hw), out.maps.data(), static_cast<std::size_t>(hw)});
  return out;
}

SimilarityMatrix gram_similarity(const Tensor& t, GramNormalization normalization) {
  const Rows r = as_rows(t);
  SimilarityMatrix out{Tensor({r.n, r.n}), normalization};
  Tensor& g = out.gram;
  for (std::int64_t i = 0; i < r.n; ++i) {
    for (std::int64_t j = i; j < r.n; ++j) {
      const double v = kernels::dot(r.data + i * r.d, r.data + j * r.d, r.d);
      g.at(i, j) = v;
      g.at(j, i) = v;
    }
  }
  if (normalization == GramNormalization::RowL2) {
    for (std::int64_t i = 0; i < r.n; ++i) {
      const double norm = std::sqrt(kernels::sum_squares(g.data() + i * r.n, r.n));
      if (norm > 0.0) {
        for (std::int64_t j = 0; j < r.n; ++j) g.at(i, j) /= norm;
      }
    }
  } else {
    const double norm = std::sqrt(kernels::sum_squares(g.data(), g.size()));
    if (norm > 0.0) {
      for (double& v : g.values()) v /= norm;
    }
  }
  return out;
}

double similarity_distance(const SimilarityMatrix& a, const SimilarityMatrix& b) {
  if (a.gram.shape() != b.gram.shape() || a.gram.rank() != 2 || a.gram.dim(0) != a.gram.dim(1)) {
    throw Error("similarity_distance: size mismatch " + shape_string(a.gram.shape()) + " vs " +
                shape_string(b.gram.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.gram.size(); ++i) {
    const double d = a.gram[i] - b.gram[i];
    s += d * d;
  }
  const double n = static_cast<double>(a.gram.dim(0));
  return s / (n * n);
}

double semantic_similarity(const GradCamMaps& teacher, const GradCamMaps& student,
                           GramNormalization normalization) {
  if (teacher.maps.dim(0) != student.maps.dim(0)) {
    throw Error("semantic_similarity: teacher has " + std::to_string(teacher.maps.dim(0)) +
                " classes, student " + std::to_string(student.maps.dim(0)));
  }
  return similarity_distance(gram_similarity(teacher.maps, normalization),
                             gram_similarity(student.maps, normalization));
}

double relation_similarity(const Tensor& teacher_features, const Tensor& student_features,
                           GramNormalization normalization) {
  if (teacher_features.dim(0) != student_features.dim(0)) {
    throw Error("relation_similarity: batch size mismatch " +
                std::to_string(teacher_features.dim(0)) + " vs " +
                std::to_string(student_features.dim(0)));
  }
  return similarity_distance(gram_similarity(teacher_features, normalization),
                             gram_similarity(student_features, normalization));
}

std::string diswot_proxy_name(const DiswotOptions& o) {
  if (o.use_semantic && o.use_relation) return "diswot";
  if (o.use_semantic) return "diswot_ms";
  if (o.use_relation) return "diswot_mr";
  throw UsageError("DisWOT score needs at least one of the semantic and relation terms");
}

ProxyScore diswot_score(const ActivationBundle& teacher, const ActivationBundle& student,
                        const DiswotOptions& options) {
  ProxyScore score{diswot_proxy_name(options), 0.0, true};
  double total = 0.0;
  if (options.use_semantic) {
    total += semantic_similarity(gradcam_maps(teacher, options.weight_source),
                                 gradcam_maps(student, options.weight_source),
                                 options.normalization);
  }
  if (options.use_relation) {
    total += relation_similarity(teacher.pre_gap_map, student.pre_gap_map, options.normalization);
  }
  score.value = -total;
  return score;
}

ProxyScore diswot_score(const NetworkInstance& teacher, const ArchDescriptor& student_desc,
                        const SearchSpace& space, const Batch& batch, const InitSpec& init,
                        const DiswotOptions& options) {
  if (teacher.space().num_classes != space.num_classes) {
    throw Error("diswot_score: teacher and student class counts differ");
  }
  const ActivationBundle t = teacher.forward(batch.images, batch.labels);
  const NetworkInstance student = build_network(student_desc, space, init);
  const ActivationBundle s = student.forward(batch.images, batch.labels);
  return diswot_score(t, s, options);
}

// ---------------------------------------------------------------------------

NwotKernel::NwotKernel(std::int64_t batch_size) : kernel_({batch_size, batch_size}, 0.0) {}

void NwotKernel::add(const Tensor& relu_output) {
  const Rows r = as_rows(relu_output);
  if (r.n != kernel_.dim(0)) throw Error("NwotKernel: batch size mismatch");
  codes_.resize(static_cast<std::size_t>(r.n * r.d));
  std::vector<double> active(static_cast<std::size_t>(r.n));
  for (std::int64_t i = 0; i < r.n; ++i) {
    double cnt = 0.0;
    for (std::int64_t u = 0; u < r.d; ++u) {
      const double bit = r.data[i * r.d + u] > 0.0 ? 1.0 : 0.0;
      codes_[i * r.d + u] = bit;
      cnt += bit;
    }
    active[i] = cnt;
  }
  // Agreements = both-active + both-inactive = U - |c_i| - |c_j| + 2 c_i.c_j
  for (std::int64_t i = 0; i < r.n; ++i) {
    for (std::int64_t j = i; j < r.n; ++j) {
      const double both = kernels::dot(codes_.data() + i * r.d, codes_.data() + j * r.d, r.d);
      const double agree = static_cast<double>(r.d) - active[i] - active[j] + 2.0 * both;
      kernel_.at(i, j) += agree;
      if (j != i) kernel_.at(j, i) += agree;
    }
  }
}

double nwot_logdet(const Tensor& kernel, double eps) {
  const auto n = kernel.dim(0);
  Eigen::MatrixXd m(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) m(i, j) = kernel.at(i, j) + (i == j ? eps : 0.0);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd& u = lu.matrixLU();
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += std::log(std::abs(u(i, i)));
  return s;
}

ProxyScore nwot_score(const NetworkInstance& net, const Batch& batch) {
  const auto b = batch.images.dim(0);
  if (b < 2) throw Error("nwot_score: batch needs at least 2 samples");
  NwotKernel acc(b);
  const ReluObserver obs = [&acc](const Tensor& t) { acc.add(t); };
  net.forward(batch.images, batch.labels, &obs);
  return {"nwot", nwot_logdet(acc.kernel()), true};
}

// ---------------------------------------------------------------------------

std::string_view kd_kind_name(KdKind kind) {
  switch (kind) {
    case KdKind::KdKl:
      return "kd_kl";
    case KdKind::FitNets:
      return "fitnets";
    case KdKind::At:
      return "at";
    case KdKind::Sp:
      return "sp";
    case KdKind::Cc:
      return "cc";
    case KdKind::Rkd:
      return "rkd";
    case KdKind::Nst:
      return "nst";
    case KdKind::Pkt:
      return "pkt";
  }
  return "unknown";
}

Tensor fitnets_projection(std::int64_t student_channels, std::int64_t teacher_channels) {
  constexpr std::uint64_t kProjectionSeed = 0xF17E75ULL;
  InitSpec spec{InitScheme::Gaussian, 1.0 / std::sqrt(static_cast<double>(student_channels)),
                kProjectionSeed};
  const std::uint64_t stream =
      (static_cast<std::uint64_t>(student_channels) << 32) ^ static_cast<std::uint64_t>(teacher_channels);
  return init_tensor({teacher_channels, student_channels}, spec, stream);
}

namespace {

void l2_normalize(double* v, std::int64_t n) {
  const double norm = std::sqrt(kernels::sum_squares(v, n));
  if (norm > 0.0) {
    for (std::int64_t i = 0; i < n; ++i) v[i] /= norm;
  }
}

double mean_sq_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

double kd_kl(const Tensor& zt, const Tensor& zs, double rho) {
  if (zt.shape() != zs.shape()) throw Error("kd_kl: logit shape mismatch");
  const Tensor lt = log_softmax_rows(zt, rho);
  const Tensor ls = log_softmax_rows(zs, rho);
  double s = 0.0;
  for (std::size_t i = 0; i < lt.size(); ++i) s += std::exp(lt[i]) * (lt[i] - ls[i]);
  return std::max(0.0, s / static_cast<double>(zt.dim(0)));
}

double fitnets(const Tensor& ft, const Tensor& fs) {
  const auto ct = ft.dim(1), cs = fs.dim(1);
  Tensor aligned = fs;
  if (cs != ct) {
    const Tensor proj = fitnets_projection(cs, ct);
    aligned = linear(fs, proj);
  }
  std::vector<double> a(ft.values().begin(), ft.values().end());
  std::vector<double> c(aligned.values().begin(), aligned.values().end());
  return mean_sq_diff(a, c);
}

std::vector<double> attention(const Tensor& a) {
  const auto b = a.dim(0), c = a.dim(1), hw = a.dim(2) * a.dim(3);
  std::vector<double> out(static_cast<std::size_t>(b * hw), 0.0);
  for (std::int64_t i = 0; i < b; ++i) {
    double* dst = out.data() + i * hw;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double* src = a.data() + (i * c + ch) * hw;
      for (std::int64_t p = 0; p < hw; ++p) dst[p] += src[p] * src[p];
    }
    l2_normalize(dst, hw);
  }
  return out;
}

void require_same_spatial(const Tensor& t, const Tensor& s, const char* what) {
  if (t.dim(2) != s.dim(2) || t.dim(3) != s.dim(3)) {
    throw Error(std::string(what) + ": spatial size mismatch " + shape_string(t.shape()) + " vs " +
                shape_string(s.shape()));
  }
}

// Pearson correlation between samples: each row centered and unit-normalized.
Tensor sample_correlation(const Tensor& f) {
  const Rows r = as_rows(f);
  std::vector<double> z(r.data, r.data + r.n * r.d);
  for (std::int64_t i = 0; i < r.n; ++i) {
    double* row = z.data() + i * r.d;
    const double mean = kernels::sum(row, r.d) / static_cast<double>(r.d);
    for (std::int64_t u = 0; u < r.d; ++u) row[u] -= mean;
    l2_normalize(row, r.d);
  }
  Tensor c({r.n, r.n});
  for (std::int64_t i = 0; i < r.n; ++i) {
    for (std::int64_t j = 0; j < r.n; ++j) c.at(i, j) = kernels::dot(z.data() + i * r.d, z.data() + j * r.d, r.d);
  }
  return c;
}

// Pairwise Euclidean distances scaled by their mean over distinct pairs.
Tensor normalized_distances(const Tensor& f) {
  const Rows r = as_rows(f);
  Tensor d({r.n, r.n}, 0.0);
  double total = 0.0;
  std::int64_t pairs = 0;
  for (std::int64_t i = 0; i < r.n; ++i) {
    for (std::int64_t j = i + 1; j < r.n; ++j) {
      double s = 0.0;
      for (std::int64_t u = 0; u < r.d; ++u) {
        const double diff = r.data[i * r.d + u] - r.data[j * r.d + u];
        s += diff * diff;
      }
      d.at(i, j) = d.at(j, i) = std::sqrt(s);
      total += std::sqrt(s);
      ++pairs;
    }
  }
  if (pairs > 0 && total > 0.0) {
    const double mean = total / static_cast<double>(pairs);
    for (double& v : d.values()) v /= mean;
  }
  return d;
}

double matrix_mean_sq_diff(const Tensor& a, const Tensor& b) {
  return mean_sq_diff(std::vector<double>(a.values().begin(), a.values().end()),
                      std::vector<double>(b.values().begin(), b.values().end()));
}

// Mean over channels of the unit-normalized channel maps, per sample: [B, HW].
std::vector<double> channel_means(const Tensor& a) {
  const auto b = a.dim(0), c = a.dim(1), hw = a.dim(2) * a.dim(3);
  std::vector<double> out(static_cast<std::size_t>(b * hw), 0.0);
  std::vector<double> row(static_cast<std::size_t>(hw));
  for (std::int64_t i = 0; i < b; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double* src = a.data() + (i * c + ch) * hw;
      std::copy(src, src + hw, row.begin());
      l2_normalize(row.data(), hw);
      kernels::axpy(1.0 / static_cast<double>(c), row.data(), out.data() + i * hw, hw);
    }
  }
  return out;
}

// Linear-kernel MMD^2 per sample, averaged over the batch.
double nst(const Tensor& t, const Tensor& s) {
  require_same_spatial(t, s, "nst");
  const auto mt = channel_means(t), ms = channel_means(s);
  const auto b = t.dim(0), hw = t.dim(2) * t.dim(3);
  double total = 0.0;
  for (std::int64_t i = 0; i < b; ++i) {
    double d = 0.0;
    for (std::int64_t p = 0; p < hw; ++p) {
      const double diff = mt[i * hw + p] - ms[i * hw + p];
      d += diff * diff;
    }
    total += d;
  }
  return total / static_cast<double>(b);
}

Tensor cosine_probabilities(const Tensor& f) {
  const Rows r = as_rows(f);
  std::vector<double> z(r.data, r.data + r.n * r.d);
  for (std::int64_t i = 0; i < r.n; ++i) l2_normalize(z.data() + i * r.d, r.d);
  Tensor p({r.n, r.n});
  for (std::int64_t i = 0; i < r.n; ++i) {
    double row_sum = 0.0;
    for (std::int64_t j = 0; j < r.n; ++j) {
      const double cos = kernels::dot(z.data() + i * r.d, z.data() + j * r.d, r.d);
      p.at(i, j) = (cos + 1.0) / 2.0 + kPktEpsilon;
      row_sum += p.at(i, j);
    }
    for (std::int64_t j = 0; j < r.n; ++j) p.at(i, j) /= row_sum;
  }
  return p;
}

double pkt(const Tensor& ft, const Tensor& fs) {
  const Tensor pt = cosine_probabilities(ft), ps = cosine_probabilities(fs);
  const auto n = pt.dim(0);
  double s = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) s += pt[i] * std::log(pt[i] / ps[i]);
  return std::max(0.0, s / static_cast<double>(n));
}

}  // namespace

double kd_raw_distance(KdKind kind, const ActivationBundle& teacher,
                       const ActivationBundle& student, double temperature) {
  if (!(temperature > 0.0)) throw Error("kd_distance: temperature must be positive");
  if (teacher.pre_gap_map.dim(0) != student.pre_gap_map.dim(0)) {
    throw Error("kd_distance: batch size mismatch " + std::to_string(teacher.pre_gap_map.dim(0)) +
                " vs " + std::to_string(student.pre_gap_map.dim(0)));
  }
  switch (kind) {
    case KdKind::KdKl:
      return kd_kl(teacher.logits, student.logits, temperature);
    case KdKind::FitNets:
      return fitnets(teacher.penultimate_features, student.penultimate_features);
    case KdKind::At:
      require_same_spatial(teacher.pre_gap_map, student.pre_gap_map, "at");
      return mean_sq_diff(attention(teacher.pre_gap_map), attention(student.pre_gap_map));
    case KdKind::Sp:
      return relation_similarity(teacher.pre_gap_map, student.pre_gap_map);
    case KdKind::Cc:
      return matrix_mean_sq_diff(sample_correlation(teacher.penultimate_features),
                                 sample_correlation(student.penultimate_features));
    case KdKind::Rkd:
      return matrix_mean_sq_diff(normalized_distances(teacher.penultimate_features),
                                 normalized_distances(student.penultimate_features));
    case KdKind::Nst:
      return nst(teacher.pre_gap_map, student.pre_gap_map);
    case KdKind::Pkt:
      return pkt(teacher.penultimate_features, student.penultimate_features);
  }
  throw Error("kd_distance: unknown kind");
}

ProxyScore kd_distance(KdKind kind, const ActivationBundle& teacher,
                       const ActivationBundle& student, double temperature) {
  return {std::string(kd_kind_name(kind)), -kd_raw_distance(kind, teacher, student, temperature),
          true};
}

ProxyScore cost_proxy(CostKind kind, const ArchDescriptor& desc, const SearchSpace& space) {
  if (kind == CostKind::Params) {
    return {"params", static_cast<double>(count_params(desc, space)), true};
  }
  return {"flops", static_cast<double>(count_flops(desc, space)), true};
}

}  // namespace diswot
