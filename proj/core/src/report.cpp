#include "psep/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psep/errors.hpp"

namespace psep {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::string render_value(double v) {
  if (std::isnan(v)) return "nan*";
  if (v < -kRenderLimit) return "-inf*";
  if (v > kRenderLimit) return "+inf*";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string matrix_file_stem(const CrossLikelihoodMatrix& m) {
  return "xll_" + m.family + "_sigma" + format_double(m.data_sigma) + "_cond" + format_double(m.cond_sigma);
}

namespace {

// Quotes a field when it holds a separator or a quote.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        cells.back() += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  if (quoted) throw FormatError("unterminated quote in CSV line");
  return cells;
}

}  // namespace

void write_matrix_csv(const CrossLikelihoodMatrix& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "data";
  for (const auto& l : m.prior_labels) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << csv_field(m.data_labels[i]);
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << format_double(m.at(i, j));
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

CrossLikelihoodMatrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  CrossLikelihoodMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty matrix CSV " + path.string());
  const auto header = split_csv(line);
  if (header.size() < 2) throw FormatError("matrix CSV header too short");
  m.prior_labels.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw FormatError("matrix CSV row width mismatch");
    m.data_labels.push_back(cells[0]);
    for (std::size_t j = 1; j < cells.size(); ++j) m.values.push_back(parse_double(cells[j]));
  }
  m.std_errors.assign(m.values.size(), 0.0);
  return m;
}

DegenerateTable read_degenerate_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  DegenerateTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty degenerate CSV " + path.string());
  const auto header = split_csv(line);
  if (header.size() < 3) throw FormatError("degenerate CSV header too short");
  t.prior_labels.assign(header.begin() + 2, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw FormatError("degenerate CSV row width mismatch");
    t.input_labels.push_back(cells[0]);
    t.row_sigmas.push_back(parse_double(cells[1]));
    for (std::size_t j = 2; j < cells.size(); ++j) t.values.push_back(parse_double(cells[j]));
  }
  return t;
}

namespace {

constexpr std::string_view kShades = " .:-=+*#%@";

char shade(double v, double lo, double hi) {
  if (!std::isfinite(v) || std::abs(v) > kRenderLimit) return ' ';
  if (!(hi > lo)) return kShades.back();
  const double u = (v - lo) / (hi - lo);
  const auto idx = static_cast<std::size_t>(std::lround(u * static_cast<double>(kShades.size() - 1)));
  return kShades[std::min(idx, kShades.size() - 1)];
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_heatmap(const CrossLikelihoodMatrix& m) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : m.values) {
    if (std::isfinite(v) && std::abs(v) <= kRenderLimit) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  constexpr std::size_t w = 12;
  std::ostringstream os;
  os << "data \\ prior";
  for (const auto& l : m.prior_labels) os << pad(l, w);
  os << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << pad(m.data_labels[i], 12);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m.at(i, j);
      os << pad(render_value(v) + ' ' + shade(v, lo, hi), w);
    }
    os << '\n';
  }
  return os.str();
}

std::string render_table(const DegenerateTable& t) {
  constexpr std::size_t w = 12;
  std::ostringstream os;
  os << pad("input", 12) << pad("sigma", 8);
  for (const auto& l : t.prior_labels) os << pad(l, w);
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    os << pad(t.input_labels[r], 12) << pad(format_double(t.row_sigmas[r]), 8);
    for (std::size_t c = 0; c < t.cols(); ++c) os << pad(render_value(t.at(r, c)), w);
    os << '\n';
  }
  return os.str();
}

std::string units_label(const std::string& family) {
  if (family == "ar") return "nats per sample (discrete mass)";
  return "nats per sample (continuous density)";
}

namespace {

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

nlohmann::json provenance_json(const Provenance& p) {
  nlohmann::json j;
  j["seed"] = p.seed;
  j["checkpoints"] = p.checkpoints;
  for (const auto& [k, v] : p.extra) j[k] = v;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<fs::path> emit_matrix_report(const CrossLikelihoodMatrix& m, const DiscriminationReport& r,
                                         const Provenance& prov, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string stem = matrix_file_stem(m);
  const fs::path csv = out_dir / (stem + ".csv");
  const fs::path txt = out_dir / (stem + ".txt");
  const fs::path js = out_dir / (stem + ".json");
  write_matrix_csv(m, csv);

  std::ostringstream text;
  text << "cross-likelihood, family " << m.family << ", data sigma " << format_double(m.data_sigma)
       << ", conditioning sigma " << format_double(m.cond_sigma) << '\n';
  text << "units: " << units_label(m.family) << "; rows = data source, columns = prior\n\n";
  text << render_heatmap(m) << '\n';
  for (std::size_t j = 0; j < m.cols(); ++j) {
    text << "prior " << m.prior_labels[j] << ": margin " << render_value(r.margins[j])
         << (r.dominant[j] ? "  (dominant)" : "  (not dominant)") << '\n';
  }
  text << "row-wise strict diagonal dominance: " << (r.all_rows_dominant ? "yes" : "no") << '\n';
  write_text(txt, text.str());

  nlohmann::json j;
  j["family"] = m.family;
  j["units"] = units_label(m.family);
  j["data_sigma"] = m.data_sigma;
  j["cond_sigma"] = m.cond_sigma;
  j["data_labels"] = m.data_labels;
  j["prior_labels"] = m.prior_labels;
  nlohmann::json values = nlohmann::json::array();
  for (double v : m.values) values.push_back(json_number(v));
  j["values"] = values;
  nlohmann::json margins = nlohmann::json::array();
  for (double v : r.margins) margins.push_back(json_number(v));
  j["margins"] = margins;
  j["dominant"] = r.dominant;
  j["all_dominant"] = r.all_dominant;
  j["row_dominant"] = r.all_rows_dominant;
  j["provenance"] = provenance_json(prov);
  write_text(js, j.dump(2) + "\n");
  return {csv, txt, js};
}

std::vector<fs::path> emit_table_report(const DegenerateTable& t, const std::string& family, const Provenance& prov,
                                        const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const fs::path csv = out_dir / ("degenerate_" + family + ".csv");
  const fs::path txt = out_dir / ("degenerate_" + family + ".txt");
  const fs::path js = out_dir / ("degenerate_" + family + ".json");
  {
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw Error("cannot write " + csv.string());
    out << "input,sigma";
    for (const auto& l : t.prior_labels) out << ',' << csv_field(l);
    out << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
      out << csv_field(t.input_labels[r]) << ',' << format_double(t.row_sigmas[r]);
      for (std::size_t c = 0; c < t.cols(); ++c) out << ',' << format_double(t.at(r, c));
      out << '\n';
    }
  }
  write_text(txt, "mean log-likelihood of degenerate inputs, family " + family + "\nunits: " + units_label(family) +
                      "\n\n" + render_table(t));
  nlohmann::json j;
  j["family"] = family;
  j["units"] = units_label(family);
  j["input_labels"] = t.input_labels;
  j["row_sigmas"] = t.row_sigmas;
  j["prior_labels"] = t.prior_labels;
  nlohmann::json values = nlohmann::json::array();
  for (double v : t.values) values.push_back(json_number(v));
  j["values"] = values;
  j["noise_draws"] = t.noise_draws;
  j["noise_std"] = t.noise_std;
  j["provenance"] = provenance_json(prov);
  write_text(js, j.dump(2) + "\n");
  return {csv, txt, js};
}

}  // namespace psep
