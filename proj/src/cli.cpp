// SPDX-License-Identifier: Apache-2.0
#include "sdq/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sdq/codec.hpp"
#include "sdq/costmodel.hpp"
#include "sdq/decompose.hpp"
#include "sdq/errors.hpp"
#include "sdq/io.hpp"
#include "sdq/parallel.hpp"
#include "sdq/pipeline.hpp"
#include "sdq/sparsify.hpp"
#include "sdq/synthetic.hpp"

namespace sdq::cli {

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SDQ_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("SDQ_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

void emit(const Report& report, const std::string& report_path, std::ostream& out) {
  if (report_path.empty()) {
    out << report.str();
    return;
  }
  std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + report_path + " for writing");
  f << report.str();
}

Dtype dtype_from_name(const std::string& name) {
  if (name == "f32") return Dtype::F32;
  if (name == "f64") return Dtype::F64;
  throw std::invalid_argument("dtype must be f32 or f64");
}

struct GenOptions {
  std::string kind = "gaussian";
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t seed = 0;
  double outlier_ratio = 0.01;
  double outlier_scale = 10.0;
  double sigma = 1.0;
  std::string dtype = "f64";
  std::string out;
  std::string report;
};

int run_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  Rng rng(o.seed);
  DenseMatrix m;
  if (o.kind == "gaussian") {
    m = gaussian_matrix(o.rows, o.cols, rng, o.sigma);
  } else if (o.kind == "heavy-tail") {
    m = heavy_tail_matrix(o.rows, o.cols, rng, {o.outlier_ratio, o.outlier_scale, o.sigma});
  } else {
    throw std::invalid_argument("unknown generator kind '" + o.kind + "'");
  }
  save_matrix(o.out, m, dtype_from_name(o.dtype));
  Report r;
  r.set("command", "gen");
  r.set("config.kind", o.kind);
  r.set("config.rows", o.rows);
  r.set("config.cols", o.cols);
  r.set("config.seed", o.seed);
  r.set("config.sigma", o.sigma);
  if (o.kind == "heavy-tail") {
    r.set("config.outlier_ratio", o.outlier_ratio);
    r.set("config.outlier_scale", o.outlier_scale);
  }
  r.set("config.dtype", o.dtype);
  r.set("output", o.out);
  r.set("result.frobenius_norm", frobenius_norm(m));
  emit(r, o.report, out);
  err << fmt::format("generated {}x{} {} matrix -> {}\n", o.rows, o.cols, o.kind, o.out);
  return 0;
}

struct SparsifyOptions {
  std::string weights;
  std::string calib;
  std::string pattern = "2:4";
  std::string method = "magnitude";
  double damping = kDefaultDamping;
  std::string out;
  std::string report;
};

int run_sparsify(const SparsifyOptions& o, std::ostream& out, std::ostream& err) {
  const DenseMatrix w = load_matrix(o.weights);
  const SparsityPattern p = SparsityPattern::parse(o.pattern);
  SignificanceMetric metric{sparsify_method_from_name(o.method), std::nullopt, o.damping};
  if (needs_calibration(metric.kind)) {
    if (o.calib.empty()) throw ConfigError(o.method + " requires --calib");
    metric.calibration = load_matrix(o.calib);
  }
  const DenseMatrix ws = sparsify(w, p, metric);
  if (!o.out.empty()) save_matrix(o.out, ws);
  Report r;
  r.set("command", "sparsify");
  r.set("config.weights", o.weights);
  r.set("config.calibration", o.calib);
  r.set("config.pattern", p.to_string());
  r.set("config.method", o.method);
  r.set("config.damping", o.damping);
  r.set("output", o.out);
  r.set("result.valid_nm", validate_nm(ws, p).valid);
  r.set("result.nnz", compress_nm(ws, p).nnz());
  r.set("result.weight_relative_error", relative_error(ws, w));
  emit(r, o.report, out);
  err << fmt::format("{} {} pruning: relative weight error {:.6f}\n", o.method, p.to_string(), relative_error(ws, w));
  return 0;
}

struct DecomposeOptions {
  std::string weights;
  std::string calib;
  std::string sparsity = "7:8";
  std::string outliers = "1:8";
  std::string metric = "magnitude";
  std::string order = "large";
  std::string inlier_format = "fp4";
  std::size_t qvs = kDefaultQVectorSize;
  std::string out_outliers;
  std::string out_inliers;
  std::string report;
};

int run_decompose(const DecomposeOptions& o, std::ostream& out, std::ostream& err) {
  const DenseMatrix ws = load_matrix(o.weights);
  const SparsityPattern source = SparsityPattern::parse(o.sparsity);
  DecompositionSpec spec;
  spec.outlier_pattern = SparsityPattern::parse(o.outliers);
  spec.metric = outlier_metric_from_name(o.metric);
  spec.order = outlier_order_from_name(o.order);
  spec.q_vector_size = o.qvs;
  if (spec.metric == OutlierMetric::Product) {
    if (o.calib.empty()) throw ConfigError("the product metric requires --calib");
    spec.calibration = load_matrix(o.calib);
  }
  if (spec.metric == OutlierMetric::OutputError) spec.inlier_format = NumberFormat::from_name(o.inlier_format);
  const Decomposition d = extract_outliers(ws, source, spec);
  if (!o.out_outliers.empty()) save_matrix(o.out_outliers, d.outliers);
  if (!o.out_inliers.empty()) save_matrix(o.out_inliers, d.inliers);
  const SparsityPattern inlier_pattern(source.n() - spec.outlier_pattern.n(), source.m());
  Report r;
  r.set("command", "decompose");
  r.set("config.weights", o.weights);
  r.set("config.sparsity", source.to_string());
  r.set("config.outlier_pattern", spec.outlier_pattern.to_string());
  r.set("config.inlier_pattern", inlier_pattern.to_string());
  r.set("config.metric", o.metric);
  r.set("config.order", o.order);
  if (spec.inlier_format) {
    r.set("config.inlier_format", spec.inlier_format->name());
    r.set("config.qvs", o.qvs);
  }
  r.set("output.outliers", o.out_outliers);
  r.set("output.inliers", o.out_inliers);
  r.set("result.outliers_valid_nm", validate_nm(d.outliers, spec.outlier_pattern).valid);
  r.set("result.inliers_valid_nm", validate_nm(d.inliers, inlier_pattern).valid);
  r.set("result.exact_split", add(d.outliers, d.inliers) == ws);
  r.set("result.outlier_nnz", compress_nm(d.outliers, spec.outlier_pattern).nnz());
  r.set("result.inlier_nnz", compress_nm(d.inliers, inlier_pattern).nnz());
  emit(r, o.report, out);
  err << fmt::format("decomposed {} into {} outliers + {} inliers\n", source.to_string(),
                     spec.outlier_pattern.to_string(), inlier_pattern.to_string());
  return 0;
}

struct QuantizeOptions {
  std::string weights;
  std::string format = "fp4";
  std::string scale_format = "none";
  std::size_t qvs = kDefaultQVectorSize;
  bool columns = false;
  std::string out;
  std::string report;
};

int run_quantize(const QuantizeOptions& o, std::ostream& out, std::ostream& err) {
  const DenseMatrix w = load_matrix(o.weights);
  const NumberFormat f = NumberFormat::from_name(o.format);
  const auto sf = NumberFormat::from_optional_name(o.scale_format);
  const DenseMatrix deq = o.columns ? fake_quantize_columns(w, o.qvs, f, sf) : fake_quantize(w, o.qvs, f, sf);
  if (!o.out.empty()) save_matrix(o.out, deq);
  const DenseMatrix diff = subtract(deq, w);
  double sq = 0.0;
  for (double v : diff.data()) sq += v * v;
  Report r;
  r.set("command", "quantize");
  r.set("config.weights", o.weights);
  r.set("config.format", f.name());
  r.set("config.scale_format", format_name(sf));
  r.set("config.qvs", o.qvs);
  r.set("config.axis", o.columns ? "columns" : "rows");
  r.set("output", o.out);
  r.set("result.relative_error", relative_error(deq, w));
  r.set("result.mse", w.size() ? sq / static_cast<double>(w.size()) : 0.0);
  emit(r, o.report, out);
  err << fmt::format("{} quantization (qvs {}, scale {}): relative error {:.6f}\n", f.name(), o.qvs, format_name(sf),
                     relative_error(deq, w));
  return 0;
}

struct RunOptions {
  std::string manifest;
  std::string config;
  std::string weights;
  std::string calib;
  std::string eval;
  std::size_t qvs = kDefaultQVectorSize;
  std::string scale_format = "none";
  std::string metric = "product";
  std::string order = "large";
  std::string index = "ellpack";
  double damping = kDefaultDamping;
  std::uint64_t seed = 0;
  std::string reconstruction;
  std::string report;
};

int run_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  RunManifest m;
  if (!o.manifest.empty()) {
    m = RunManifest::load(o.manifest);
  } else {
    if (o.config.empty() || o.weights.empty() || o.eval.empty()) {
      throw ConfigError("run needs --manifest or --config, --weights and --eval");
    }
    m.config = o.config;
    m.q_vector_size = o.qvs;
    m.scale_format = o.scale_format;
    m.metric = o.metric;
    m.order = o.order;
    m.index_encoding = o.index;
    m.damping = o.damping;
    m.seed = o.seed;
    m.weights = o.weights;
    m.calibration = o.calib;
    m.eval = o.eval;
    m.reconstruction = o.reconstruction;
  }
  if (!o.report.empty()) m.report = o.report;
  m.check_inputs();
  const SdqConfig cfg = m.resolve();
  const DenseMatrix w = load_matrix(m.weights);
  const DenseMatrix x_calib = m.calibration.empty() ? DenseMatrix() : load_matrix(m.calibration);
  const DenseMatrix x_eval = load_matrix(m.eval);
  const SdqResult res = run_sdq(w, x_calib, x_eval, cfg);
  if (!m.reconstruction.empty()) save_matrix(m.reconstruction, res.w_hat);

  Report r;
  r.set("command", "run");
  append_config(r, cfg);
  r.set("config.seed", m.seed);
  r.set("input.weights", m.weights.string());
  r.set("input.calibration", m.calibration.string());
  r.set("input.eval", m.eval.string());
  r.set("input.shape.weights", fmt::format("{}x{}", w.rows(), w.cols()));
  r.set("input.shape.eval", fmt::format("{}x{}", x_eval.rows(), x_eval.cols()));
  r.set("output.reconstruction", m.reconstruction.string());
  r.set("result.output_error", res.output_error);
  r.set("result.stage.sparsify_error", res.stages.sparsify);
  r.set("result.stage.weight_quant_error", res.stages.weight_quant);
  r.set("result.stage.total_error", res.stages.total);
  if (res.outliers) {
    r.set("result.outliers.nnz", res.outliers->skeleton.nnz());
    r.set("result.outliers.valid_nm",
          validate_nm(decompress_nm(res.outliers->dequantized), res.outliers->skeleton.pattern()).valid);
  }
  r.set("result.inliers.nnz", res.inliers.skeleton.nnz());
  r.set("result.inliers.valid_nm",
        validate_nm(decompress_nm(res.inliers.dequantized), res.inliers.skeleton.pattern()).valid);
  r.set("result.w_hat_frobenius", frobenius_norm(res.w_hat));
  append_cost(r, "cost", res.cost);
  emit(r, m.report.string(), out);
  err << fmt::format("{}: output error {:.6f}, {} effective throughput, {:.4f} bits/weight\n", cfg.name(),
                     res.output_error, format_throughput(res.cost.effective_throughput), res.cost.bits_per_weight);
  return 0;
}

struct CoverageOptions {
  std::string mode = "global";
  std::string pattern = "2:8";
  double ratio = 0.02;
  std::size_t qvs = 64;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::size_t rows = 512;
  std::size_t cols = 512;
  std::string weights;
  std::string report;
};

int run_coverage(const CoverageOptions& o, std::ostream& out, std::ostream& err) {
  const SparsityPattern p = SparsityPattern::parse(o.pattern);
  const bool semilocal = o.mode == "semilocal";
  if (!semilocal && o.mode != "global") throw std::invalid_argument("mode must be global or semilocal");
  Report r;
  r.set("command", "coverage");
  r.set("config.mode", o.mode);
  r.set("config.pattern", p.to_string());
  r.set("config.ratio", o.ratio);
  if (semilocal) r.set("config.qvs", o.qvs);
  r.set("config.designation", "magnitude top-k");
  std::vector<double> fractions;
  auto measure = [&](const DenseMatrix& w) {
    return semilocal ? coverage_semilocal(w, o.ratio, p, o.qvs) : coverage_global(w, o.ratio, p);
  };
  if (!o.weights.empty()) {
    r.set("config.weights", o.weights);
    const CoverageReport c = measure(load_matrix(o.weights));
    fractions.push_back(c.covered_fraction);
    r.set("result.designated", c.designated);
    r.set("result.covered", c.covered);
  } else {
    r.set("config.source", fmt::format("gaussian {}x{}", o.rows, o.cols));
    r.set("config.seed", o.seed);
    r.set("config.seeds", o.seeds);
    for (std::size_t i = 0; i < o.seeds; ++i) {
      Rng rng(o.seed + i);
      const CoverageReport c = measure(gaussian_matrix(o.rows, o.cols, rng));
      fractions.push_back(c.covered_fraction);
      r.set(fmt::format("result.seed.{}.coverage", o.seed + i), c.covered_fraction);
    }
  }
  const double mean = std::accumulate(fractions.begin(), fractions.end(), 0.0) / static_cast<double>(fractions.size());
  r.set("result.coverage", mean);
  emit(r, o.report, out);
  err << fmt::format("{} coverage of {} extraction at ratio {}: {:.4f}\n", o.mode, p.to_string(), o.ratio, mean);
  return 0;
}

struct CostOptions {
  std::string config;
  std::size_t qvs = kDefaultQVectorSize;
  std::string scale_format = "none";
  std::string index = "ellpack";
  bool figure = false;
  std::string csv;
  std::string report;
};

int run_cost(const CostOptions& o, std::ostream& out, std::ostream& err) {
  if (o.config.empty() && !o.figure) throw ConfigError("cost needs --config and/or --figure");
  Report r;
  r.set("command", "cost");
  if (!o.config.empty()) {
    SdqConfig cfg = parse_config(o.config);
    cfg.q_vector_size = o.qvs;
    cfg.scale_format = NumberFormat::from_optional_name(o.scale_format);
    cfg.index_encoding = index_encoding_from_name(o.index);
    append_config(r, cfg);
    const CostReport cost = sdq_cost(cfg);
    if (!cfg.scale_format) r.set("note.scale_bits", "unquantized scales counted as 16-bit");
    r.set("effective_throughput", cost.effective_throughput);
    append_cost(r, "cost", cost);
    err << fmt::format("{}: {} effective throughput, {:.4f} bits/weight\n", cfg.name(),
                       format_throughput(cost.effective_throughput), cost.bits_per_weight);
  }
  if (o.figure) {
    const auto configs = default_metadata_figure_configs();
    const auto rows = metadata_figure(configs, 32, index_encoding_from_name(o.index));
    r.set("figure.tile_elements", 32);
    r.set("figure.scale_accounting", "whole scale factors per tile");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& t = rows[i];
      const std::string p = fmt::format("figure.row.{}", i);
      r.set(p + ".config", t.config);
      r.set(p + ".data_bits", static_cast<std::int64_t>(t.data));
      r.set(p + ".meta_s_bits", static_cast<std::int64_t>(t.meta_s));
      r.set(p + ".meta_q_bits", static_cast<std::int64_t>(t.meta_q));
      r.set(p + ".bits_per_weight", t.bits_per_weight());
      r.set(p + ".effective_throughput", t.effective_throughput);
      err << fmt::format("{:<28} data {:>4}  meta-S {:>3}  meta-Q {:>3}  total {:>4}\n", t.config, t.data, t.meta_s,
                         t.meta_q, t.total());
    }
    if (!o.csv.empty()) {
      std::ofstream f(o.csv, std::ios::trunc);
      if (!f) throw FormatError("cannot open " + o.csv + " for writing");
      f << to_csv(rows);
      r.set("figure.csv", o.csv);
    }
  }
  emit(r, o.report, out);
  return 0;
}

struct CompareOptions {
  std::vector<std::string> configs;
  std::string weights;
  std::string calib;
  std::string eval;
  std::uint64_t seed = 0;
  std::size_t rows = 256;
  std::size_t cols = 256;
  std::size_t tokens = 64;
  std::size_t samples = 512;
  double outlier_ratio = 0.01;
  double outlier_scale = 10.0;
  std::size_t qvs = kDefaultQVectorSize;
  std::string scale_format = "none";
  std::string metric = "product";
  std::string order = "large";
  std::string report;
};

int run_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
  DenseMatrix w;
  DenseMatrix x_calib;
  DenseMatrix x_eval;
  Report r;
  r.set("command", "compare");
  if (!o.weights.empty()) {
    if (o.eval.empty()) throw ConfigError("compare with --weights also needs --eval");
    w = load_matrix(o.weights);
    x_eval = load_matrix(o.eval);
    if (!o.calib.empty()) x_calib = load_matrix(o.calib);
    r.set("config.weights", o.weights);
    r.set("config.calibration", o.calib);
    r.set("config.eval", o.eval);
  } else {
    Rng rng(o.seed);
    w = heavy_tail_matrix(o.rows, o.cols, rng, {o.outlier_ratio, o.outlier_scale, 1.0});
    x_calib = gaussian_matrix(o.samples, o.cols, rng);
    x_eval = gaussian_matrix(o.cols, o.tokens, rng);
    r.set("config.source", "heavy-tail synthetic");
    r.set("config.seed", o.seed);
    r.set("config.shape.weights", fmt::format("{}x{}", o.rows, o.cols));
    r.set("config.shape.calibration", fmt::format("{}x{}", o.samples, o.cols));
    r.set("config.shape.eval", fmt::format("{}x{}", o.cols, o.tokens));
    r.set("config.outlier_ratio", o.outlier_ratio);
    r.set("config.outlier_scale", o.outlier_scale);
  }
  const auto sf = NumberFormat::from_optional_name(o.scale_format);
  const int scale_bits = sf ? sf->total_bits() : 16;
  r.set("config.qvs", o.qvs);
  r.set("config.scale_format", format_name(sf));
  r.set("config.decompose.metric", o.metric);
  r.set("config.decompose.order", o.order);

  struct Row {
    std::string name;
    double error;
    double bits;
    double throughput;
  };
  std::vector<Row> rows;
  rows.push_back({"dense-fp16", 0.0, 16.0, 1.0});
  const bool has_calib = !x_calib.empty();
  for (const char* fname : {"int8", "fp8-e4m3", "int4", "fp4"}) {
    const NumberFormat f = NumberFormat::from_name(fname);
    const CostReport c =
        bits_per_weight(SparsityPattern::dense(8), f.total_bits(), scale_bits, o.qvs, IndexEncoding::None);
    rows.push_back(
        {"quant-" + f.name(), baseline_quant(w, x_eval, f, sf, o.qvs), c.bits_per_weight, c.effective_throughput});
  }
  for (const char* pat : {"4:8", "2:8"}) {
    const SparsityPattern p = SparsityPattern::parse(pat);
    const CostReport c = bits_per_weight(p, 16, 0, o.qvs, IndexEncoding::Ellpack);
    std::vector<SparsifyMethod> methods{SparsifyMethod::Magnitude};
    if (has_calib) methods = {SparsifyMethod::Wanda, SparsifyMethod::SparseGpt};
    for (SparsifyMethod method : methods) {
      rows.push_back({"sparse-" + to_string(method) + "-" + pat, baseline_sparse(w, x_calib, x_eval, method, p),
                      c.bits_per_weight, c.effective_throughput});
    }
  }
  std::vector<std::string> configs = o.configs;
  if (configs.empty()) {
    configs = {"SDQ-W7:8-1:8int8-6:8fp4", "SDQ-S7:8-1:8int8-6:8fp4", "SDQ-W6:8-2:8int8-4:8fp4",
               "SDQ-W3:4-1:4int8-2:4fp4"};
    if (!has_calib) configs = {"SDQ-7:8-1:8int8-6:8fp4", "SDQ-6:8-2:8int8-4:8fp4"};
  }
  for (const auto& name : configs) {
    SdqConfig cfg = parse_config(name);
    cfg.q_vector_size = o.qvs;
    cfg.scale_format = sf;
    cfg.metric = outlier_metric_from_name(o.metric);
    cfg.order = outlier_order_from_name(o.order);
    if (!has_calib && cfg.metric == OutlierMetric::Product) cfg.metric = OutlierMetric::Magnitude;
    const SdqResult res = run_sdq(w, x_calib, x_eval, cfg);
    rows.push_back({cfg.name(), res.output_error, res.cost.bits_per_weight, res.cost.effective_throughput});
  }

  err << fmt::format("{:<28} {:>14} {:>10} {:>10}\n", "configuration", "output_error", "bits/w", "throughput");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string p = fmt::format("row.{}", i);
    r.set(p + ".name", row.name);
    r.set(p + ".output_error", row.error);
    r.set(p + ".bits_per_weight", row.bits);
    r.set(p + ".effective_throughput", row.throughput);
    err << fmt::format("{:<28} {:>14.6f} {:>10.4f} {:>10}\n", row.name, row.error, row.bits,
                       format_throughput(row.throughput));
  }
  emit(r, o.report, out);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse decomposed quantization toolkit"};
  app.name("sdq");
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for row-parallel kernels")->check(CLI::Range(1u, 1024u));

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  GenOptions gen;
  gen.seed = seed;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a seeded synthetic matrix");
  gen_cmd->add_option("--kind", gen.kind, "gaussian | heavy-tail")->check(CLI::IsMember({"gaussian", "heavy-tail"}));
  gen_cmd->add_option("--rows", gen.rows)->required();
  gen_cmd->add_option("--cols", gen.cols)->required();
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--outlier-ratio", gen.outlier_ratio);
  gen_cmd->add_option("--outlier-scale", gen.outlier_scale);
  gen_cmd->add_option("--sigma", gen.sigma);
  gen_cmd->add_option("--dtype", gen.dtype)->check(CLI::IsMember({"f32", "f64"}));
  gen_cmd->add_option("--out", gen.out)->required();
  gen_cmd->add_option("--report", gen.report);

  SparsifyOptions sp;
  auto* sp_cmd = app.add_subcommand("sparsify", "Prune weights to an N:M pattern");
  sp_cmd->add_option("--weights", sp.weights)->required();
  sp_cmd->add_option("--calib", sp.calib);
  sp_cmd->add_option("--pattern", sp.pattern);
  sp_cmd->add_option("--method", sp.method)->check(CLI::IsMember({"magnitude", "wanda", "sparsegpt"}));
  sp_cmd->add_option("--damping", sp.damping);
  sp_cmd->add_option("--out", sp.out);
  sp_cmd->add_option("--report", sp.report);

  DecomposeOptions dc;
  auto* dc_cmd = app.add_subcommand("decompose", "Split N:M weights into outliers and inliers");
  dc_cmd->add_option("--weights", dc.weights)->required();
  dc_cmd->add_option("--calib", dc.calib);
  dc_cmd->add_option("--sparsity", dc.sparsity);
  dc_cmd->add_option("--outliers", dc.outliers);
  dc_cmd->add_option("--metric", dc.metric)->check(CLI::IsMember({"magnitude", "product", "output-error"}));
  dc_cmd->add_option("--order", dc.order)->check(CLI::IsMember({"large", "small"}));
  dc_cmd->add_option("--inlier-format", dc.inlier_format);
  dc_cmd->add_option("--qvs", dc.qvs);
  dc_cmd->add_option("--out-outliers", dc.out_outliers);
  dc_cmd->add_option("--out-inliers", dc.out_inliers);
  dc_cmd->add_option("--report", dc.report);

  QuantizeOptions qz;
  auto* qz_cmd = app.add_subcommand("quantize", "Fake-quantize a matrix with per-vector scales");
  qz_cmd->add_option("--weights", qz.weights)->required();
  qz_cmd->add_option("--format", qz.format);
  qz_cmd->add_option("--sf", qz.scale_format, "Scale-factor format or none");
  qz_cmd->add_option("--qvs", qz.qvs);
  qz_cmd->add_flag("--columns", qz.columns, "Q-Vectors run down columns (activations)");
  qz_cmd->add_option("--out", qz.out);
  qz_cmd->add_option("--report", qz.report);

  RunOptions rn;
  rn.seed = seed;
  auto* rn_cmd = app.add_subcommand("run", "Run the full sparsify/decompose/quantize pipeline");
  rn_cmd->add_option("--manifest", rn.manifest);
  rn_cmd->add_option("--config", rn.config);
  rn_cmd->add_option("--weights", rn.weights);
  rn_cmd->add_option("--calib", rn.calib);
  rn_cmd->add_option("--eval", rn.eval);
  rn_cmd->add_option("--qvs", rn.qvs);
  rn_cmd->add_option("--sf", rn.scale_format);
  rn_cmd->add_option("--metric", rn.metric)->check(CLI::IsMember({"magnitude", "product", "output-error"}));
  rn_cmd->add_option("--order", rn.order)->check(CLI::IsMember({"large", "small"}));
  rn_cmd->add_option("--index", rn.index)->check(CLI::IsMember({"ellpack", "bitmask", "none"}));
  rn_cmd->add_option("--damping", rn.damping);
  rn_cmd->add_option("--seed", rn.seed);
  rn_cmd->add_option("--reconstruction", rn.reconstruction);
  rn_cmd->add_option("--report", rn.report);

  CoverageOptions cv;
  cv.seed = seed;
  auto* cv_cmd = app.add_subcommand("coverage", "Measure local outlier extraction coverage");
  cv_cmd->add_option("--mode", cv.mode)->check(CLI::IsMember({"global", "semilocal"}));
  cv_cmd->add_option("--pattern", cv.pattern);
  cv_cmd->add_option("--ratio", cv.ratio);
  cv_cmd->add_option("--qvs", cv.qvs);
  cv_cmd->add_option("--seed", cv.seed);
  cv_cmd->add_option("--seeds", cv.seeds)->check(CLI::PositiveNumber);
  cv_cmd->add_option("--rows", cv.rows);
  cv_cmd->add_option("--cols", cv.cols);
  cv_cmd->add_option("--weights", cv.weights);
  cv_cmd->add_option("--report", cv.report);

  CostOptions cs;
  auto* cs_cmd = app.add_subcommand("cost", "Effective throughput and bits-per-weight");
  cs_cmd->add_option("--config", cs.config);
  cs_cmd->add_option("--qvs", cs.qvs);
  cs_cmd->add_option("--sf", cs.scale_format);
  cs_cmd->add_option("--index", cs.index)->check(CLI::IsMember({"ellpack", "bitmask", "none"}));
  cs_cmd->add_flag("--figure", cs.figure, "Emit the 32-element metadata table");
  cs_cmd->add_option("--csv", cs.csv);
  cs_cmd->add_option("--report", cs.report);

  CompareOptions cp;
  cp.seed = seed;
  auto* cp_cmd = app.add_subcommand("compare", "Compare SDQ configurations against baselines");
  cp_cmd->add_option("--config", cp.configs);
  cp_cmd->add_option("--weights", cp.weights);
  cp_cmd->add_option("--calib", cp.calib);
  cp_cmd->add_option("--eval", cp.eval);
  cp_cmd->add_option("--seed", cp.seed);
  cp_cmd->add_option("--rows", cp.rows);
  cp_cmd->add_option("--cols", cp.cols);
  cp_cmd->add_option("--tokens", cp.tokens);
  cp_cmd->add_option("--samples", cp.samples);
  cp_cmd->add_option("--outlier-ratio", cp.outlier_ratio);
  cp_cmd->add_option("--outlier-scale", cp.outlier_scale);
  cp_cmd->add_option("--qvs", cp.qvs);
  cp_cmd->add_option("--sf", cp.scale_format);
  cp_cmd->add_option("--metric", cp.metric)->check(CLI::IsMember({"magnitude", "product", "output-error"}));
  cp_cmd->add_option("--order", cp.order)->check(CLI::IsMember({"large", "small"}));
  cp_cmd->add_option("--report", cp.report);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const unsigned previous_threads = num_threads();
  set_num_threads(threads);
  int code = 0;
  try {
    if (*gen_cmd)
      code = run_gen(gen, out, err);
    else if (*sp_cmd)
      code = run_sparsify(sp, out, err);
    else if (*dc_cmd)
      code = run_decompose(dc, out, err);
    else if (*qz_cmd)
      code = run_quantize(qz, out, err);
    else if (*rn_cmd)
      code = run_run(rn, out, err);
    else if (*cv_cmd)
      code = run_coverage(cv, out, err);
    else if (*cs_cmd)
      code = run_cost(cs, out, err);
    else if (*cp_cmd)
      code = run_compare(cp, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  }
  set_num_threads(previous_threads);
  return code;
}

}  // namespace sdq::cli
