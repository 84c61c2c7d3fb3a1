#include "gqmc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "gqmc/error.hpp"

namespace gqmc {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
  return v;
}

namespace {

std::vector<std::string> split_plain(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

// RFC 4180 fields: quoted fields may contain separators and doubled quotes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quote in CSV row");
  out.push_back(std::move(cur));
  return out;
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, ErrorCode missing) {
  std::ifstream in(path);
  if (!in) throw Error(missing, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_projectors(std::ostream& out, std::span<const Projector> points) {
  if (points.empty()) throw Error(ErrorCode::DomainError, "no projectors to write");
  const GrassmannSpace space = points.front().space();
  out << "# grassmann k=" << space.k() << " m=" << space.m() << '\n';
  for (const Projector& p : points) {
    for (int i = 0; i < space.m(); ++i) {
      for (int j = 0; j < space.m(); ++j) {
        if (i || j) out << ',';
        out << format_double(p.matrix()(i, j));
      }
    }
    out << '\n';
  }
}

std::vector<Projector> read_projectors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty projector file");
  static const std::regex header(R"(#\s*grassmann\s+k=(\d+)\s+m=(\d+)\s*)");
  std::smatch match;
  if (!std::regex_match(line, match, header)) throw Error(ErrorCode::ParseError, "bad header: '" + line + "'");
  const GrassmannSpace space(std::stoi(match[1]), std::stoi(match[2]));
  const int m = space.m();

  std::vector<Projector> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_plain(line, ',');
    if (fields.size() != static_cast<std::size_t>(m * m)) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(out.size() + 1) + ": expected " +
                                             std::to_string(m * m) + " entries");
    }
    Mat p(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) p(i, j) = parse_double(fields[i * m + j]);
    }
    out.push_back(validate_projector(p, space));
  }
  return out;
}

void write_projectors_csv(const std::filesystem::path& path, std::span<const Projector> points) {
  auto out = open_out(path);
  write_projectors(out, points);
}

std::vector<Projector> read_projectors_csv(const std::filesystem::path& path) {
  auto in = open_in(path, ErrorCode::MissingDesignFile);
  return read_projectors(in);
}

nlohmann::json to_json(const WceReport& r) {
  return {{"kernel", r.kernel}, {"n", r.n}, {"wce_squared", r.wce_squared}, {"wce", r.wce}, {"clamped", r.clamped}};
}

nlohmann::json to_json(const CoveringEstimate& e) {
  return {{"rho_hat", e.rho_hat},
          {"probes", e.probes},
          {"seed", e.probe_seed},
          {"expected_probe_covering", e.expected_probe_covering},
          {"upper_hint", e.upper_hint}};
}

nlohmann::json to_json(const DesignResult& r) {
  return {{"i", r.strength_index},
          {"n", r.config.size()},
          {"t", r.strength},
          {"energy", r.energy},
          {"gaps", r.gaps},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"seed", r.seed},
          {"restart", r.restart},
          {"under_provisioned", r.under_provisioned}};
}

std::string to_csv_row(const ExperimentRecord& r) {
  std::ostringstream os;
  os << quote_csv(r.experiment) << ',' << quote_csv(r.generator) << ',' << r.i << ',' << r.n << ','
     << quote_csv(r.kernel) << ',' << format_double(r.value) << ',' << quote_csv(r.value_kind) << ',' << r.seed
     << ',' << quote_csv(r.extra);
  return os.str();
}

ExperimentRecord parse_csv_row(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 9) throw Error(ErrorCode::ParseError, "expected 9 fields, got " + std::to_string(f.size()));
  ExperimentRecord r;
  try {
    r.experiment = f[0];
    r.generator = f[1];
    r.i = std::stoi(f[2]);
    r.n = std::stoull(f[3]);
    r.kernel = f[4];
    r.value = parse_double(f[5]);
    r.value_kind = f[6];
    r.seed = std::stoull(f[7]);
    r.extra = f[8];
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ParseError, "malformed record: '" + line + "'");
  }
  if (r.n < 1 || !(r.value >= 0.0)) throw Error(ErrorCode::ParseError, "record needs n >= 1 and value >= 0");
  return r;
}

void write_records(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<ExperimentRecord> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) throw Error(ErrorCode::ParseError, "missing record header");
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_csv_row(line));
  }
  return out;
}

void write_records_csv(const std::filesystem::path& path, std::span<const ExperimentRecord> records) {
  auto out = open_out(path);
  write_records(out, records);
}

std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path) {
  auto in = open_in(path, ErrorCode::MissingDesignFile);
  return read_records(in);
}

}  // namespace gqmc
