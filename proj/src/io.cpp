#include "commspec/io.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "commspec/errors.hpp"

namespace commspec {
namespace {

constexpr std::array<char, 8> kMagic = {'C', 'M', 'S', 'P', '0', '0', '0', '1'};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
  const std::string t = trim(tok);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path + ":" + std::to_string(line) + ": cannot parse number '" + t + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return in;
}

double get_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw FormatError(std::string("measure atom: missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

AnyMeasure measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array() || j.at("atoms").empty())
    throw FormatError("measure: expected {\"atoms\": [...]} with at least one atom");
  const auto& atoms = j.at("atoms");
  const bool bivariate = atoms.front().contains("l1");
  if (bivariate) {
    std::vector<BivariateAtom> out;
    for (const auto& a : atoms) out.push_back({get_number(a, "l1"), get_number(a, "l2"), get_number(a, "w")});
    return BivariateSpectralMeasure(std::move(out));
  }
  std::vector<UnivariateAtom> out;
  for (const auto& a : atoms) out.push_back({get_number(a, "l"), get_number(a, "w")});
  return UnivariateSpectralMeasure(std::move(out));
}

json measure_to_json(const BivariateSpectralMeasure& H) {
  json atoms = json::array();
  for (const auto& a : H.atoms()) atoms.push_back({{"l1", a.l1}, {"l2", a.l2}, {"w", a.w}});
  return {{"atoms", atoms}};
}

json measure_to_json(const UnivariateSpectralMeasure& H) {
  json atoms = json::array();
  for (const auto& a : H.atoms()) atoms.push_back({{"l", a.l}, {"w", a.w}});
  return {{"atoms", atoms}};
}

json measure_to_json(const AnyMeasure& H) {
  return std::visit([](const auto& m) { return measure_to_json(m); }, H);
}

json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

AnyMeasure read_measure(const std::string& path) { return measure_from_json(read_json_file(path)); }

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::vector<double> read_eigen_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != "lambda") throw FormatError(path + ":" + std::to_string(lineno) + ": expected header 'lambda'");
      header = true;
      continue;
    }
    vals.push_back(parse_double(t, path, lineno));
  }
  if (!header) throw FormatError(path + ": missing header 'lambda'");
  return vals;
}

void write_eigen_csv(const std::string& path, const std::vector<double>& vals) {
  auto out = open_out(path);
  out << "lambda\n";
  for (double v : vals) out << fmt17(v) << '\n';
}

void write_density_csv(const std::string& path, const DensityCurve& curve) {
  auto out = open_out(path);
  out << "# point_mass_zero=" << fmt17(curve.point_mass_zero) << '\n';
  out << "x,f\n";
  for (std::size_t i = 0; i < curve.xs.size(); ++i)
    out << fmt17(curve.xs[i]) << ',' << fmt17(curve.fs[i]) << '\n';
}

DensityCurve read_density_csv(const std::string& path) {
  auto in = open_in(path);
  DensityCurve curve;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto pos = t.find("point_mass_zero=");
      if (pos != std::string::npos)
        curve.point_mass_zero = parse_double(t.substr(pos + 16), path, lineno);
      continue;
    }
    if (!header) {
      if (t != "x,f") throw FormatError(path + ":" + std::to_string(lineno) + ": expected header 'x,f'");
      header = true;
      continue;
    }
    const auto parts = split(t, ',');
    if (parts.size() != 2) throw FormatError(path + ":" + std::to_string(lineno) + ": expected two columns");
    curve.xs.push_back(parse_double(parts[0], path, lineno));
    curve.fs.push_back(parse_double(parts[1], path, lineno));
  }
  if (!header) throw FormatError(path + ": missing header 'x,f'");
  return curve;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    for (const auto& tok : split(t, ',')) row.push_back(parse_double(tok, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(path + ":" + std::to_string(lineno) + ": ragged row (" +
                        std::to_string(row.size()) + " columns, expected " +
                        std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path + ": empty matrix");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << fmt17(M(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_bin(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 8> magic{};
  unsigned char dims[8];
  if (!in.read(magic.data(), 8) || magic != kMagic) throw FormatError(path + ": bad magic header");
  if (!in.read(reinterpret_cast<char*>(dims), 8)) throw FormatError(path + ": truncated header");
  auto u32 = [&](int off) {
    return static_cast<std::uint32_t>(dims[off]) | (static_cast<std::uint32_t>(dims[off + 1]) << 8) |
           (static_cast<std::uint32_t>(dims[off + 2]) << 16) |
           (static_cast<std::uint32_t>(dims[off + 3]) << 24);
  };
  const std::uint32_t rows = u32(0), cols = u32(4);
  const auto start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto avail = static_cast<std::uint64_t>(in.tellg() - start);
  in.seekg(start);
  if (avail != 8ULL * rows * cols)
    throw FormatError(path + ": header says " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " but the file holds " + std::to_string(avail) + " data bytes");
  Eigen::MatrixXd M(rows, cols);
  unsigned char buf[8];
  for (Eigen::Index k = 0; k < M.size(); ++k) {
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError(path + ": truncated data");
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | buf[b];
    double v;
    std::memcpy(&v, &bits, 8);
    M.data()[k] = v;
  }
  return M;
}

void write_matrix_bin(const std::string& path, const Eigen::MatrixXd& M) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kMagic.data(), 8);
  auto put32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  put32(static_cast<std::uint32_t>(M.rows()));
  put32(static_cast<std::uint32_t>(M.cols()));
  for (Eigen::Index k = 0; k < M.size(); ++k) {
    std::uint64_t bits;
    const double v = M.data()[k];
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 8> head{};
  in.read(head.data(), 8);
  if (in.gcount() == 8 && head == kMagic) return read_matrix_bin(path);
  return read_matrix_csv(path);
}

json experiment_to_json(const ExperimentConfig& cfg) {
  json scaling = {{"kind", to_string(cfg.scaling.kind)}, {"k", cfg.scaling.k}};
  scaling["H"] = cfg.scaling.H ? measure_to_json(*cfg.scaling.H) : json(nullptr);
  return {{"p", cfg.p},
          {"n", cfg.n},
          {"innovation", to_string(cfg.innovation)},
          {"scaling", scaling},
          {"anti", cfg.anti},
          {"rho", cfg.rho},
          {"seed", cfg.seed},
          {"replicate", cfg.replicate}};
}

ExperimentConfig experiment_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.p = j.at("p").get<int>();
    cfg.n = j.at("n").get<int>();
    cfg.innovation = parse_innovation_kind(j.at("innovation").get<std::string>());
    const auto& s = j.at("scaling");
    cfg.scaling.kind = parse_scaling_kind(s.at("kind").get<std::string>());
    cfg.scaling.k = s.value("k", 0);
    if (s.contains("H") && !s.at("H").is_null()) {
      const AnyMeasure H = measure_from_json(s.at("H"));
      if (const auto* b = std::get_if<BivariateSpectralMeasure>(&H))
        cfg.scaling.H = *b;
      else
        cfg.scaling.H = BivariateSpectralMeasure::diagonal(std::get<UnivariateSpectralMeasure>(H));
    }
    cfg.anti = j.at("anti").get<bool>();
    cfg.rho = j.at("rho").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.replicate = j.value("replicate", std::uint64_t{0});
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
}

json test_result_to_json(const TestResult& r) {
  json j = {{"T_obs", r.T_obs},
            {"p_value", r.p_value},
            {"B", r.config.B},
            {"seed", r.config.seed},
            {"sigma_mode", r.config.sigma_mode == SigmaMode::known ? "known" : "estimate"},
            {"nulls", r.nulls}};
  if (r.psd) {
    j["psd"] = {{"grid", r.psd->grid},
                {"weights", r.psd->weights},
                {"fit_residual", r.psd->fit_residual},
                {"iterations", r.psd->iterations},
                {"converged", r.psd->converged}};
  }
  return j;
}

}  // namespace commspec
