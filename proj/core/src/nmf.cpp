#include "trafficgp/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "trafficgp/csv.hpp"
#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

void validate_inputs(const Eigen::MatrixXd& d, const BoolGrid& mask, int k) {
  if (d.rows() == 0 || d.cols() == 0) throw ValidationError("matrix must be non-empty");
  if (d.rows() != mask.rows() || d.cols() != mask.cols()) {
    throw ValidationError("mask shape does not match matrix shape");
  }
  if (k < 1) throw ValidationError("cluster count must be >= 1");
  if (k > std::min(d.rows(), d.cols())) {
    throw ValidationError("cluster count " + std::to_string(k) + " exceeds min(N, M) = " +
                          std::to_string(std::min(d.rows(), d.cols())));
  }
  std::string bad_rows, bad_cols;
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    if (!mask.row(i).any()) bad_rows += (bad_rows.empty() ? "" : ", ") + std::to_string(i);
  }
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    if (!mask.col(j).any()) bad_cols += (bad_cols.empty() ? "" : ", ") + std::to_string(j);
  }
  if (!bad_rows.empty()) throw DataError("cold start: all-missing rows: " + bad_rows);
  if (!bad_cols.empty()) throw DataError("cold start: all-missing columns: " + bad_cols);
}

// Observed entries in compressed row and column form, sharing one residual
// array so both sweeps update the same state.
struct MaskedState {
  std::vector<int> row_ptr, col_of, col_ptr, row_of, pos_in_csr;
  std::vector<double> dval, resid;

  MaskedState(const Eigen::MatrixXd& d, const BoolGrid& mask) {
    const Eigen::Index n = d.rows(), m = d.cols();
    row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    col_ptr.assign(static_cast<std::size_t>(m) + 1, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (mask(i, j)) {
          ++row_ptr[static_cast<std::size_t>(i) + 1];
          ++col_ptr[static_cast<std::size_t>(j) + 1];
        }
      }
    }
    for (std::size_t i = 1; i < row_ptr.size(); ++i) row_ptr[i] += row_ptr[i - 1];
    for (std::size_t j = 1; j < col_ptr.size(); ++j) col_ptr[j] += col_ptr[j - 1];
    const int nnz = row_ptr.back();
    col_of.resize(static_cast<std::size_t>(nnz));
    dval.resize(static_cast<std::size_t>(nnz));
    resid.resize(static_cast<std::size_t>(nnz));
    row_of.resize(static_cast<std::size_t>(nnz));
    pos_in_csr.resize(static_cast<std::size_t>(nnz));
    std::vector<int> rfill(row_ptr.begin(), row_ptr.end() - 1);
    std::vector<int> cfill(col_ptr.begin(), col_ptr.end() - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (!mask(i, j)) continue;
        const int p = rfill[static_cast<std::size_t>(i)]++;
        col_of[static_cast<std::size_t>(p)] = static_cast<int>(j);
        dval[static_cast<std::size_t>(p)] = d(i, j);
        const int q = cfill[static_cast<std::size_t>(j)]++;
        row_of[static_cast<std::size_t>(q)] = static_cast<int>(i);
        pos_in_csr[static_cast<std::size_t>(q)] = p;
      }
    }
  }

  void recompute(const Eigen::MatrixXd& w, const Eigen::MatrixXd& h) {
    const Eigen::Index n = w.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int p = row_ptr[static_cast<std::size_t>(i)]; p < row_ptr[static_cast<std::size_t>(i) + 1];
           ++p) {
        resid[static_cast<std::size_t>(p)] =
            dval[static_cast<std::size_t>(p)] -
            w.row(i).dot(h.col(col_of[static_cast<std::size_t>(p)]));
      }
    }
  }

  double squared_residual() const {
    double s = 0.0;
    for (double r : resid) s += r * r;
    return s;
  }

  // One W sweep then one H sweep against the live residual table.
  void cycle(Eigen::MatrixXd& w, Eigen::MatrixXd& h, double lambda) {
    const Eigen::Index n = w.rows(), m = h.cols();
    const int k = static_cast<int>(w.cols());
    for (int c = 0; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double grad = lambda, curv = 0.0;
        for (int p = row_ptr[static_cast<std::size_t>(i)];
             p < row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
          const double hkj = h(c, col_of[static_cast<std::size_t>(p)]);
          grad -= resid[static_cast<std::size_t>(p)] * hkj;
          curv += hkj * hkj;
        }
        if (curv <= 0.0) continue;
        const double next = std::max(0.0, w(i, c) - grad / curv);
        const double delta = next - w(i, c);
        if (delta == 0.0) continue;
        w(i, c) = next;
        for (int p = row_ptr[static_cast<std::size_t>(i)];
             p < row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
          resid[static_cast<std::size_t>(p)] -= delta * h(c, col_of[static_cast<std::size_t>(p)]);
        }
      }
    }
    for (int c = 0; c < k; ++c) {
      for (Eigen::Index j = 0; j < m; ++j) {
        double grad = lambda, curv = 0.0;
        for (int q = col_ptr[static_cast<std::size_t>(j)];
             q < col_ptr[static_cast<std::size_t>(j) + 1]; ++q) {
          const double wik = w(row_of[static_cast<std::size_t>(q)], c);
          grad -= resid[static_cast<std::size_t>(pos_in_csr[static_cast<std::size_t>(q)])] * wik;
          curv += wik * wik;
        }
        if (curv <= 0.0) continue;
        const double next = std::max(0.0, h(c, j) - grad / curv);
        const double delta = next - h(c, j);
        if (delta == 0.0) continue;
        h(c, j) = next;
        for (int q = col_ptr[static_cast<std::size_t>(j)];
             q < col_ptr[static_cast<std::size_t>(j) + 1]; ++q) {
          resid[static_cast<std::size_t>(pos_in_csr[static_cast<std::size_t>(q)])] -=
              delta * w(row_of[static_cast<std::size_t>(q)], c);
        }
      }
    }
  }
};

// Full-mask sweep using the cached products D*H', H*H' (resp. W'*D, W'*W),
// with the running product W*H*H' maintained incrementally per update.
void dense_cycle(const Eigen::MatrixXd& d, Eigen::MatrixXd& w, Eigen::MatrixXd& h, double lambda) {
  const int k = static_cast<int>(w.cols());
  {
    const Eigen::MatrixXd hht = h * h.transpose();
    const Eigen::MatrixXd dht = d * h.transpose();
    Eigen::MatrixXd g = w * hht;
    for (int c = 0; c < k; ++c) {
      const double curv = hht(c, c);
      if (curv <= 0.0) continue;
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double grad = g(i, c) - dht(i, c) + lambda;
        const double next = std::max(0.0, w(i, c) - grad / curv);
        const double delta = next - w(i, c);
        if (delta == 0.0) continue;
        w(i, c) = next;
        g.row(i) += delta * hht.row(c);
      }
    }
  }
  {
    const Eigen::MatrixXd wtw = w.transpose() * w;
    const Eigen::MatrixXd wtd = w.transpose() * d;
    Eigen::MatrixXd g = wtw * h;
    for (int c = 0; c < k; ++c) {
      const double curv = wtw(c, c);
      if (curv <= 0.0) continue;
      for (Eigen::Index j = 0; j < h.cols(); ++j) {
        const double grad = g(c, j) - wtd(c, j) + lambda;
        const double next = std::max(0.0, h(c, j) - grad / curv);
        const double delta = next - h(c, j);
        if (delta == 0.0) continue;
        h(c, j) = next;
        g.col(j) += delta * wtw.col(c);
      }
    }
  }
}

double dense_residual(const Eigen::MatrixXd& d, const Eigen::MatrixXd& w,
                      const Eigen::MatrixXd& h) {
  return (d - w * h).squaredNorm();
}

}  // namespace

double masked_loss(const Eigen::MatrixXd& d, const BoolGrid& mask, const Eigen::MatrixXd& w,
                   const Eigen::MatrixXd& h, double lambda) {
  if (d.rows() != mask.rows() || d.cols() != mask.cols()) {
    throw ValidationError("mask shape does not match matrix shape");
  }
  double sq = 0.0;
  if (mask.all()) {
    sq = dense_residual(d, w, h);
  } else {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.cols(); ++j) {
        if (!mask(i, j)) continue;
        const double r = d(i, j) - w.row(i).dot(h.col(j));
        sq += r * r;
      }
    }
  }
  return 0.5 * sq + lambda * (w.sum() + h.sum());
}

double cd_cycle(const Eigen::MatrixXd& d, const BoolGrid& mask, Eigen::MatrixXd& w,
                Eigen::MatrixXd& h, double lambda) {
  if (w.rows() != d.rows() || h.cols() != d.cols() || w.cols() != h.rows()) {
    throw ValidationError("factor shapes do not match matrix shape");
  }
  if (mask.all()) {
    dense_cycle(d, w, h, lambda);
    return dense_residual(d, w, h);
  }
  MaskedState state(d, mask);
  state.recompute(w, h);
  state.cycle(w, h, lambda);
  state.recompute(w, h);
  return state.squared_residual();
}

Factorization factorize(const Eigen::MatrixXd& d, const BoolGrid& mask, const NMFConfig& cfg) {
  validate_inputs(d, mask, cfg.k);
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (cfg.lambda < 0.0) throw ValidationError("lambda must be >= 0");

  double mean_obs = 0.0;
  std::size_t nnz = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (mask(i, j)) {
        mean_obs += d(i, j);
        ++nnz;
      }
    }
  }
  mean_obs /= static_cast<double>(nnz);
  const double scale = std::sqrt(std::max(0.0, mean_obs) / cfg.k);

  Factorization f;
  f.config = cfg;
  f.w.resize(d.rows(), cfg.k);
  f.h.resize(cfg.k, d.cols());
  Rng rng(cfg.seed);
  for (Eigen::Index i = 0; i < f.w.rows(); ++i) {
    for (Eigen::Index c = 0; c < f.w.cols(); ++c) f.w(i, c) = uniform_double(rng, scale);
  }
  for (Eigen::Index c = 0; c < f.h.rows(); ++c) {
    for (Eigen::Index j = 0; j < f.h.cols(); ++j) f.h(c, j) = uniform_double(rng, scale);
  }

  const bool full = mask.all();
  MaskedState* state = nullptr;
  std::unique_ptr<MaskedState> owned;
  if (!full) {
    owned = std::make_unique<MaskedState>(d, mask);
    owned->recompute(f.w, f.h);
    state = owned.get();
  }

  double prev = full ? dense_residual(d, f.w, f.h) : state->squared_residual();
  for (int it = 0; it < cfg.max_iters; ++it) {
    double sq;
    if (full) {
      dense_cycle(d, f.w, f.h, cfg.lambda);
      sq = dense_residual(d, f.w, f.h);
    } else {
      state->cycle(f.w, f.h, cfg.lambda);
      state->recompute(f.w, f.h);  // shed incremental drift before recording
      sq = state->squared_residual();
    }
    f.residual_trace.push_back(sq);
    f.objective_trace.push_back(0.5 * sq + cfg.lambda * (f.w.sum() + f.h.sum()));
    f.iterations = it + 1;
    if (cfg.rel_tol > 0.0 && std::abs(prev - sq) <= cfg.rel_tol * std::max(prev, 1e-300)) {
      break;
    }
    prev = sq;
  }
  return f;
}

Factorization factorize(const SpeedMatrix& d, const NMFConfig& cfg) {
  return factorize(d.values, d.mask, cfg);
}

Eigen::MatrixXd impute(const Factorization& f) {
  return (f.w * f.h).cwiseMax(0.0);
}

namespace {

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& field : split_csv_line(line)) {
      row.push_back(parse_double_field(field, "matrix entry in " + path));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty matrix file: " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

void save_factorization(const std::string& dir, const Factorization& f) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir + "/W.csv", f.w);
  write_matrix_csv(dir + "/H.csv", f.h);
  std::ofstream meta(dir + "/metadata.txt");
  if (!meta) throw DataError("cannot open file for writing: " + dir + "/metadata.txt");
  meta << "k=" << f.config.k << '\n'
       << "lambda=" << format_double(f.config.lambda) << '\n'
       << "seed=" << f.config.seed << '\n'
       << "iterations=" << f.iterations << '\n'
       << "final_residual="
       << format_double(f.residual_trace.empty() ? 0.0 : f.residual_trace.back()) << '\n';
  if (!meta) throw DataError("failed writing " + dir + "/metadata.txt");
}

Factorization load_factorization(const std::string& dir) {
  Factorization f;
  f.w = read_matrix_csv(dir + "/W.csv");
  f.h = read_matrix_csv(dir + "/H.csv");
  std::ifstream meta(dir + "/metadata.txt");
  if (!meta) throw DataError("cannot open file: " + dir + "/metadata.txt");
  std::string line;
  double final_residual = 0.0;
  while (std::getline(meta, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "k") f.config.k = static_cast<int>(parse_long_field(val, "k"));
    else if (key == "lambda") f.config.lambda = parse_double_field(val, "lambda");
    else if (key == "seed") f.config.seed = static_cast<std::uint64_t>(parse_long_field(val, "seed"));
    else if (key == "iterations") f.iterations = static_cast<int>(parse_long_field(val, "iterations"));
    else if (key == "final_residual") final_residual = parse_double_field(val, "final_residual");
  }
  if (f.w.cols() != f.config.k || f.h.rows() != f.config.k) {
    throw DataError("factor shapes in " + dir + " do not match metadata k=" +
                    std::to_string(f.config.k));
  }
  f.residual_trace = {final_residual};
  f.objective_trace = {0.5 * final_residual + f.config.lambda * (f.w.sum() + f.h.sum())};
  return f;
}

}  // namespace trafficgp
