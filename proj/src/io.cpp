#include "car/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "car/error.hpp"

namespace car {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& f : split_fields(text))
    if (!f.empty()) out.push_back(f);
  return out;
}

Dataset parse_csv(std::istream& in, const ColumnMapping& mapping) {
  if (mapping.x.empty()) throw CarError(ErrorCode::ConfigError, "no predictor columns given");
  std::string line;
  while (std::getline(in, line) && blank(line)) {
  }
  if (blank(line)) throw CarError(ErrorCode::SchemaError, "missing header row");
  const auto header = split_fields(line);

  auto column = [&header](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw CarError(ErrorCode::SchemaError, "missing column '" + name + "'");
  };
  const std::size_t u_col = column(mapping.u);
  const std::size_t y_col = column(mapping.y);
  std::vector<std::size_t> x_cols;
  for (const auto& name : mapping.x) x_cols.push_back(column(name));

  std::vector<double> u, y, x;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const auto fields = split_fields(line);
    auto value = [&](std::size_t col) {
      const std::string& name = header[col];
      if (col >= fields.size() || fields[col].empty()) {
        std::ostringstream msg;
        msg << "empty cell at row " << row << ", column '" << name << "'";
        throw ParseError(row, name, msg.str());
      }
      const std::string& text = fields[col];
      double v = 0.0;
      const char* begin = text.data();
      if (*begin == '+') ++begin;
      const auto res = std::from_chars(begin, text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "cannot parse '" << text << "' at row " << row << ", column '" << name << "'";
        throw ParseError(row, name, msg.str());
      }
      return v;
    };
    u.push_back(value(u_col));
    y.push_back(value(y_col));
    for (std::size_t c : x_cols) x.push_back(value(c));
  }

  const std::size_t p = x_cols.size();
  if (row < p + 2) {
    std::ostringstream msg;
    msg << "need at least " << p + 2 << " data rows, found " << row;
    throw CarError(ErrorCode::InsufficientData, msg.str());
  }
  Dataset d;
  d.u = std::move(u);
  d.y_tilde = std::move(y);
  d.x_tilde = Matrix(row, p);
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t r = 0; r < p; ++r) d.x_tilde(i, r) = x[i * p + r];
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw CarError(ErrorCode::SchemaError, "cannot open '" + path.string() + "'");
  return parse_csv(in, mapping);
}

void write_dataset_csv(std::ostream& out, const Dataset& data, const ColumnMapping& mapping) {
  if (mapping.x.size() != data.p())
    throw CarError(ErrorCode::ConfigError, "column mapping does not match the number of predictors");
  out << mapping.u << ',' << mapping.y;
  for (const auto& name : mapping.x) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << format_number(data.u[i]) << ',' << format_number(data.y_tilde[i]);
    for (std::size_t r = 0; r < data.p(); ++r) out << ',' << format_number(data.x_tilde(i, r));
    out << '\n';
  }
}

void write_raw_coefficients_csv(std::ostream& out, std::span<const RawCoefficientRow> rows) {
  out << "midpoint,count,beta\n";
  for (const auto& r : rows)
    out << format_number(r.midpoint) << ',' << r.count << ',' << format_number(r.beta) << '\n';
}

GenerativeModel load_model(const std::string& name_or_path) {
  if (name_or_path == "paper-5.2") return paper_model();
  if (name_or_path == "identity") return undistorted_paper_model(paper_model().noise_sd);

  std::ifstream in(name_or_path);
  if (!in) throw CarError(ErrorCode::ConfigError, "unknown model '" + name_or_path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    GenerativeModel m;
    m.gamma = j.at("gamma").get<std::vector<double>>();
    for (const auto& law : j.at("predictors"))
      m.predictors.push_back({law.at("mean").get<double>(), law.at("sd").get<double>()});
    m.noise_sd = j.at("noise_sd").get<double>();
    const std::string dist = j.value("distortion", std::string("paper-5.2"));
    m.distortions = distortion_by_name(dist, m.predictors.size());
    if (j.contains("u_law")) {
      const auto bounds = j.at("u_law").at("uniform").get<std::vector<double>>();
      if (bounds.size() != 2 || !(bounds[0] < bounds[1]))
        throw CarError(ErrorCode::ConfigError, "u_law.uniform needs [a, b] with a < b");
      m.distortions.u_law = UniformLaw{bounds[0], bounds[1]};
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CarError(ErrorCode::ConfigError, std::string("invalid model file: ") + e.what());
  }
}

}  // namespace car
