#include "ddc/dataio.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ddc/toml.hpp"
#include "json.hpp"

namespace ddc {

Vector PolyRegressors::eval_Z(const Vector& x) const {
  Vector z(N());
  for (int i = 0; i < N(); ++i) z(i) = Z[i].eval(x);
  return z;
}

Matrix PolyRegressors::eval_W(const Vector& x) const { return W.eval(x); }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, int row, int col) {
  const char* s = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  while (end && *end == ' ') ++end;
  if (end == s || (end && *end != '\0'))
    throw ParseError("csv: non-numeric cell at row " + std::to_string(row) + ", column " +
                     std::to_string(col + 1) + ": '" + cell + "'");
  return v;
}

}  // namespace

ExperimentData load_experiment(const std::string& path, TimeMode mode) {
  std::ifstream f(path);
  if (!f) throw ParseError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw ParseError("csv: empty file '" + path + "'");
  const auto header = split_csv_line(line);
  int m = 0, n = 0, s = 0;
  for (size_t i = 1; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.rfind("u", 0) == 0) ++m;
    else if (h.rfind("x", 0) == 0) ++n;
    else if (h.rfind("s", 0) == 0) ++s;
    else throw ParseError("csv: unexpected header column '" + h + "'");
  }
  if (header.empty() || header[0] != "t" || n == 0 || s != n)
    throw ParseError("csv: header must be t,u1..um,x1..xn,s1..sn");

  std::vector<double> times;
  std::vector<Vector> us, xs, ss;
  int row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != 1 + m + 2 * n)
      throw DimensionError("csv: row " + std::to_string(row) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(1 + m + 2 * n));
    int c = 0;
    times.push_back(parse_cell(cells[c], row, c));
    ++c;
    Vector u(m), x(n), sx(n);
    for (int i = 0; i < m; ++i, ++c) u(i) = parse_cell(cells[c], row, c);
    for (int i = 0; i < n; ++i, ++c) x(i) = parse_cell(cells[c], row, c);
    for (int i = 0; i < n; ++i, ++c) sx(i) = parse_cell(cells[c], row, c);
    us.push_back(u);
    xs.push_back(x);
    ss.push_back(sx);
  }
  const int T = static_cast<int>(times.size());
  if (T < 1) throw DimensionError("csv: no data rows");
  ExperimentData exp;
  exp.mode = mode;
  exp.times = Eigen::Map<Vector>(times.data(), T);
  exp.inputs.resize(m, T);
  exp.states.resize(n, T);
  exp.successors.resize(n, T);
  for (int i = 0; i < T; ++i) {
    exp.inputs.col(i) = us[i];
    exp.states.col(i) = xs[i];
    exp.successors.col(i) = ss[i];
  }
  return exp;
}

void save_experiment(const ExperimentData& exp, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("csv: cannot write '" + path + "'");
  f.precision(17);
  f << "t";
  for (int i = 0; i < exp.m(); ++i) f << ",u" << (i + 1);
  for (int i = 0; i < exp.n(); ++i) f << ",x" << (i + 1);
  for (int i = 0; i < exp.n(); ++i) f << ",s" << (i + 1);
  f << "\n";
  for (int k = 0; k < exp.T(); ++k) {
    f << exp.times(k);
    for (int i = 0; i < exp.m(); ++i) f << "," << exp.inputs(i, k);
    for (int i = 0; i < exp.n(); ++i) f << "," << exp.states(i, k);
    for (int i = 0; i < exp.n(); ++i) f << "," << exp.successors(i, k);
    f << "\n";
  }
}

namespace {

NoiseBound noise_from_fields(const std::string& type, double delta,
                             const std::vector<std::vector<double>>& mat) {
  NoiseBound nb;
  if (type == "instantaneous") {
    if (delta < 0) throw DomainError("noise: delta must be >= 0");
    nb.kind = NoiseBound::Kind::Instantaneous;
    nb.inst_delta = delta;
  } else if (type == "energy") {
    nb.kind = NoiseBound::Kind::Energy;
    const int n = static_cast<int>(mat.size());
    if (n == 0) throw ParseError("noise: energy bound needs a Delta matrix");
    nb.delta.resize(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(mat[i].size()) != n) throw DimensionError("noise: Delta must be square");
      for (int j = 0; j < n; ++j) nb.delta(i, j) = mat[i][j];
    }
  } else {
    throw ParseError("noise: unknown type '" + type + "'");
  }
  return nb;
}

}  // namespace

NoiseBound load_noise_config(const std::string& path) {
  const bool is_json = path.size() > 5 && path.substr(path.size() - 5) == ".json";
  std::string type;
  double delta = 0.0;
  std::vector<std::vector<double>> mat;
  if (is_json) {
    std::ifstream f(path);
    if (!f) throw ParseError("noise: cannot open '" + path + "'");
    nlohmann::json j;
    try {
      f >> j;
    } catch (const std::exception& e) {
      throw ParseError(std::string("noise: bad json: ") + e.what());
    }
    const nlohmann::json& nj = j.contains("noise") ? j["noise"] : j;
    type = nj.value("type", "");
    delta = nj.value("delta", 0.0);
    if (nj.contains("Delta")) mat = nj["Delta"].get<std::vector<std::vector<double>>>();
  } else {
    toml::Table t = toml::parse_file(path);
    const toml::Value* nv = toml::find(t, "noise");
    const toml::Table& nt = nv ? nv->as_table() : t;
    auto it = nt.find("type");
    if (it == nt.end()) throw ParseError("noise: missing 'type'");
    type = it->second.as_string();
    if (auto d = nt.find("delta"); d != nt.end()) delta = d->second.as_double();
    if (auto dm = nt.find("Delta"); dm != nt.end()) {
      for (const auto& rowv : dm->second.as_array()) {
        std::vector<double> row;
        for (const auto& cell : rowv.as_array()) row.push_back(cell.as_double());
        mat.push_back(std::move(row));
      }
    }
  }
  return noise_from_fields(type, delta, mat);
}

DataMatrices build_data_matrices(const ExperimentData& exp,
                                 const std::optional<PolyRegressors>& regressors) {
  const int T = exp.T();
  if (T < 1) throw DimensionError("build_data_matrices: T must be >= 1");
  if (exp.successors.rows() != exp.n() || exp.successors.cols() != T ||
      exp.inputs.cols() != T)
    throw DimensionError("build_data_matrices: inconsistent experiment dimensions");

  DataMatrices dm;
  dm.mode = exp.mode;
  dm.n = exp.n();
  dm.X1 = exp.successors;
  if (exp.mode == TimeMode::Polynomial) {
    if (!regressors) throw DimensionError("build_data_matrices: polynomial mode needs regressors");
    const auto& reg = *regressors;
    if (reg.m() != exp.m())
      throw DimensionError("build_data_matrices: W input width does not match the data");
    dm.input_width = reg.M();
    dm.regressor_stack.resize(reg.N() + reg.M(), T);
    for (int i = 0; i < T; ++i) {
      dm.regressor_stack.col(i).head(reg.N()) = reg.eval_Z(exp.states.col(i));
      dm.regressor_stack.col(i).tail(reg.M()) = reg.eval_W(exp.states.col(i)) * exp.inputs.col(i);
    }
  } else {
    dm.input_width = exp.m();
    dm.regressor_stack.resize(exp.n() + exp.m(), T);
    dm.regressor_stack.topRows(exp.n()) = exp.states;
    dm.regressor_stack.bottomRows(exp.m()) = exp.inputs;
  }
  if (exp.noise.kind == NoiseBound::Kind::Instantaneous) {
    dm.delta = energy_bound_from_instantaneous(exp.noise.inst_delta, T, exp.n());
  } else {
    if (exp.noise.delta.rows() != exp.n() || exp.noise.delta.cols() != exp.n())
      throw DimensionError("build_data_matrices: energy bound must be n x n");
    dm.delta = exp.noise.delta;
  }
  return dm;
}

std::pair<bool, double> check_rank(const DataMatrices& dm, double tol) {
  if (tol == 0.0 || (tol < 0 && tol != -1.0)) throw DomainError("check_rank: tol must be positive");
  const Matrix& s = dm.regressor_stack;
  if (s.cols() < s.rows()) return {false, 0.0};  // row rank cannot be full
  Eigen::JacobiSVD<Matrix> svd(s);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (tol < 0) tol = 1e-8 * smax;
  return {smin > tol, smin};
}

Matrix energy_bound_from_instantaneous(double delta, int T, int n) {
  if (delta < 0) throw DomainError("energy bound: delta must be >= 0");
  if (T < 1) throw DomainError("energy bound: T must be >= 1");
  return std::sqrt(static_cast<double>(T) * delta) * Matrix::Identity(n, n);
}

}  // namespace ddc
